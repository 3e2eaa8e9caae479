#include "dsrsd/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dsrsd/error.hpp"

namespace dsrsd {

namespace {
constexpr double kRelFloor = 1e-6;

double evaluate(const TensorFunction& f, std::span<const Tensor> point) {
  GraphScope no_grad(nullptr);
  return f(point).item();
}
}  // namespace

GradCheckReport grad_check(const TensorFunction& f, std::span<const Tensor> point, double eps,
                           double tol) {
  if (!(eps > 0.0)) throw ConfigError("grad_check: eps must be positive");
  for (const Tensor& t : point) {
    if (!t.requires_grad() || !t.is_leaf()) {
      throw UsageError("grad_check: every point tensor must be a leaf that requires grad");
    }
  }

  std::vector<Matrix> analytic;
  {
    Graph graph;
    GraphScope scope(graph);
    Tensor loss = f(point);
    graph.backward(loss);
    for (const Tensor& t : point) {
      analytic.push_back(t.grad() ? *t.grad() : Matrix(t.rows(), t.cols()));
    }
  }

  GradCheckReport report;
  for (std::size_t k = 0; k < point.size(); ++k) {
    Tensor t = point[k];
    const Matrix original = t.value();
    for (std::size_t i = 0; i < original.size(); ++i) {
      Matrix probe = original;
      probe[i] = original[i] + eps;
      t.assign(probe);
      const double up = evaluate(f, point);
      probe[i] = original[i] - eps;
      t.assign(probe);
      const double down = evaluate(f, point);
      t.assign(original);

      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k][i];
      const double abs_err = std::abs(a - numeric);
      const double rel_err = abs_err / std::max({std::abs(a), std::abs(numeric), kRelFloor});
      ++report.entries_checked;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (!(rel_err <= report.max_rel_error)) {
        report.max_rel_error = rel_err;
        report.worst_input = k;
        report.worst_index = i;
      }
    }
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace dsrsd
