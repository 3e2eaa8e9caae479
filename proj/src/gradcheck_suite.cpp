#include "dsrsd/gradcheck_suite.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <memory>
#include <utility>

#include "dsrsd/error.hpp"
#include "dsrsd/rng.hpp"

namespace dsrsd {

namespace {

struct Instance {
  std::vector<Tensor> point;
  TensorFunction f;
  std::shared_ptr<const void> keep_alive;  // state captured by f that must outlive the check
};

using Builder = std::function<Instance(Rng&, const GradCheckSuiteOptions&)>;

struct Case {
  std::string name;
  Builder build;
};

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

Tensor leaf(std::size_t r, std::size_t c, Rng& rng, double lo = -2.0, double hi = 2.0) {
  return Tensor::parameter(random_matrix(r, c, rng, lo, hi));
}

// Contracts a non-scalar output with fixed random weights so that every output
// entry contributes a distinct amount to the gradient.
TensorFunction contracted(std::function<Tensor(std::span<const Tensor>)> op, std::size_t rows, std::size_t cols,
                          Rng& rng) {
  Tensor weights = Tensor::constant(random_matrix(rows, cols, rng));
  return [op = std::move(op), weights](std::span<const Tensor> in) { return ops::sum(ops::mul(op(in), weights)); };
}

Case unary(std::string name, Tensor (*op)(const Tensor&), std::size_t out_r, std::size_t out_c, double lo = -2.0,
           double hi = 2.0) {
  return {std::move(name), [=](Rng& rng, const GradCheckSuiteOptions&) {
            Instance inst;
            inst.point = {leaf(3, 4, rng, lo, hi)};
            inst.f = contracted([op](std::span<const Tensor> in) { return op(in[0]); }, out_r, out_c, rng);
            return inst;
          }};
}

Case binary(std::string name, Tensor (*op)(const Tensor&, const Tensor&), std::array<std::size_t, 2> a,
            std::array<std::size_t, 2> b, std::array<std::size_t, 2> out) {
  return {std::move(name), [=](Rng& rng, const GradCheckSuiteOptions&) {
            Instance inst;
            inst.point = {leaf(a[0], a[1], rng), leaf(b[0], b[1], rng)};
            inst.f = contracted([op](std::span<const Tensor> in) { return op(in[0], in[1]); }, out[0], out[1], rng);
            return inst;
          }};
}

Case scalar_unary(std::string name, Tensor (*op)(const Tensor&)) {
  return {std::move(name), [=](Rng& rng, const GradCheckSuiteOptions&) {
            Instance inst;
            inst.point = {leaf(3, 4, rng)};
            inst.f = [op](std::span<const Tensor> in) { return op(in[0]); };
            return inst;
          }};
}

std::vector<int> random_labels(std::size_t n, Rng& rng) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);
  rng.shuffle(std::span<int>(labels));
  return labels;
}

Case composite(std::string name, Variant variant) {
  return {std::move(name), [=](Rng& rng, const GradCheckSuiteOptions& opt) {
            ModelConfig config;
            config.input_dim_a = 5;
            config.input_dim_b = 4;
            config.latent_dim = opt.dim;
            config.encoder_hidden = 8;
            config.head_hidden = 8;
            config.variant = variant;
            const std::uint64_t model_seed = rng.next_u64();
            const std::uint64_t dropout_seed = rng.next_u64();
            auto model = std::make_shared<DsrsdModel>(config, model_seed);
            const Matrix x_a = random_matrix(opt.batch, config.input_dim_a, rng);
            const Matrix x_b = random_matrix(opt.batch, config.input_dim_b, rng);
            const std::vector<int> labels = random_labels(opt.batch, rng);

            Instance inst;
            for (const auto& p : model->parameters()) inst.point.push_back(p.tensor);
            inst.f = [model, x_a, x_b, labels, dropout_seed, opt](std::span<const Tensor>) {
              Rng dropout_rng(dropout_seed);
              const ForwardMode mode{true, model->config().dropout, &dropout_rng};
              const auto out = model->forward(x_a, x_b, mode);
              return compute_objective(out, labels, opt.weights, opt.objective).total;
            };
            inst.keep_alive = model;
            return inst;
          }};
}

std::vector<Case> all_cases() {
  std::vector<Case> cases;
  cases.push_back(binary("matmul", ops::matmul, {3, 4}, {4, 2}, {3, 2}));
  cases.push_back(binary("matmul_nt", ops::matmul_nt, {3, 4}, {2, 4}, {3, 2}));
  cases.push_back(unary("transpose", ops::transpose, 4, 3));
  cases.push_back(binary("add", ops::add, {3, 4}, {3, 4}, {3, 4}));
  cases.push_back(binary("sub", ops::sub, {3, 4}, {3, 4}, {3, 4}));
  cases.push_back(binary("mul", ops::mul, {3, 4}, {3, 4}, {3, 4}));
  cases.push_back({"scale", [](Rng& rng, const GradCheckSuiteOptions&) {
                     Instance inst;
                     inst.point = {leaf(3, 4, rng)};
                     const double factor = rng.uniform(-2.0, 2.0);
                     inst.f = contracted([factor](std::span<const Tensor> in) { return ops::scale(in[0], factor); },
                                         3, 4, rng);
                     return inst;
                   }});
  cases.push_back(binary("add_row_bias", ops::add_row_bias, {3, 4}, {1, 4}, {3, 4}));
  cases.push_back(binary("mul_col_broadcast", ops::mul_col_broadcast, {3, 4}, {3, 1}, {3, 4}));
  cases.push_back(unary("square", ops::square, 3, 4));
  cases.push_back(scalar_unary("sum", ops::sum));
  cases.push_back(scalar_unary("mean", ops::mean));
  cases.push_back(unary("row_sum", ops::row_sum, 3, 1));
  cases.push_back(unary("col_mean", ops::col_mean, 1, 4));
  cases.push_back(unary("row_softmax", ops::row_softmax, 3, 4));
  cases.push_back(unary("log_softmax", ops::log_softmax, 3, 4));
  cases.push_back(unary("gelu", ops::gelu, 3, 4));
  cases.push_back({"dropout", [](Rng& rng, const GradCheckSuiteOptions&) {
                     Instance inst;
                     inst.point = {leaf(3, 4, rng)};
                     const std::uint64_t mask_seed = rng.next_u64();
                     inst.f = contracted(
                         [mask_seed](std::span<const Tensor> in) {
                           Rng mask_rng(mask_seed);
                           return ops::dropout(in[0], 0.3, mask_rng);
                         },
                         3, 4, rng);
                     return inst;
                   }});
  cases.push_back(unary("row_l2_norm", ops::row_l2_norm, 3, 1));
  cases.push_back(binary("cosine_similarity", ops::cosine_similarity, {3, 4}, {2, 4}, {3, 2}));
  cases.push_back(unary("log", ops::log, 3, 4, 0.5, 2.0));
  cases.push_back(unary("exp", ops::exp, 3, 4));
  cases.push_back({"concat_cols", [](Rng& rng, const GradCheckSuiteOptions&) {
                     Instance inst;
                     inst.point = {leaf(3, 2, rng), leaf(3, 3, rng)};
                     inst.f = contracted(
                         [](std::span<const Tensor> in) { return ops::concat_cols(in); }, 3, 5, rng);
                     return inst;
                   }});
  cases.push_back({"slice_cols", [](Rng& rng, const GradCheckSuiteOptions&) {
                     Instance inst;
                     inst.point = {leaf(3, 5, rng)};
                     inst.f = contracted([](std::span<const Tensor> in) { return ops::slice_cols(in[0], 1, 4); }, 3,
                                         3, rng);
                     return inst;
                   }});

  auto pair_loss = [](std::string name, std::function<Tensor(const Tensor&, const Tensor&, const GradCheckSuiteOptions&)> loss) {
    return Case{std::move(name), [loss](Rng& rng, const GradCheckSuiteOptions& opt) {
                  Instance inst;
                  inst.point = {leaf(opt.batch, opt.dim, rng), leaf(opt.batch, opt.dim, rng)};
                  inst.f = [loss, opt](std::span<const Tensor> in) { return loss(in[0], in[1], opt); };
                  return inst;
                }};
  };
  cases.push_back(pair_loss("contrastive_loss", [](const Tensor& a, const Tensor& b, const GradCheckSuiteOptions& o) {
    return contrastive_loss(a, b, o.objective.tau, false);
  }));
  cases.push_back(pair_loss("contrastive_loss_symmetric",
                            [](const Tensor& a, const Tensor& b, const GradCheckSuiteOptions& o) {
                              return contrastive_loss(a, b, o.objective.tau, true);
                            }));
  cases.push_back(pair_loss("align_loss", [](const Tensor& a, const Tensor& b, const GradCheckSuiteOptions&) {
    return align_loss(a, b);
  }));
  cases.push_back(pair_loss("decorrelation_loss", [](const Tensor& a, const Tensor& b, const GradCheckSuiteOptions&) {
    return decorrelation_loss(cross_covariance(a, b));
  }));
  cases.push_back({"orthogonality_loss", [](Rng& rng, const GradCheckSuiteOptions& opt) {
                     Instance inst;
                     for (int i = 0; i < 4; ++i) inst.point.push_back(leaf(opt.batch, opt.dim, rng));
                     inst.f = [](std::span<const Tensor> in) { return orthogonality_loss(in[0], in[1], in[2], in[3]); };
                     return inst;
                   }});
  cases.push_back({"task_loss", [](Rng& rng, const GradCheckSuiteOptions& opt) {
                     Instance inst;
                     inst.point = {leaf(opt.batch, 2, rng)};
                     const auto labels = random_labels(opt.batch, rng);
                     const double smoothing = opt.objective.smoothing;
                     inst.f = [labels, smoothing](std::span<const Tensor> in) {
                       return task_loss(in[0], labels, smoothing);
                     };
                     return inst;
                   }});
  cases.push_back(composite("total_loss_full", Variant::kFull));
  cases.push_back(composite("total_loss_backbone", Variant::kBackbone));
  return cases;
}

}  // namespace

std::vector<std::string> gradcheck_case_names() {
  std::vector<std::string> names;
  for (const auto& c : all_cases()) names.push_back(c.name);
  return names;
}

std::vector<GradCheckCaseResult> run_gradcheck_suite(const GradCheckSuiteOptions& options,
                                                     const std::vector<std::string>& names) {
  if (options.seeds == 0) throw ConfigError("grad-check: seeds must be positive");
  if (options.batch < 2 || options.dim == 0) throw ConfigError("grad-check: need batch >= 2 and dim >= 1");
  const auto cases = all_cases();
  for (const auto& n : names) {
    if (std::none_of(cases.begin(), cases.end(), [&](const Case& c) { return c.name == n; })) {
      throw ConfigError("grad-check: unknown case '" + n + "'");
    }
  }

  std::vector<GradCheckCaseResult> results;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const Case& c = cases[k];
    if (!names.empty() && std::find(names.begin(), names.end(), c.name) == names.end()) continue;
    GradCheckCaseResult result;
    result.name = c.name;
    for (std::size_t s = 0; s < options.seeds; ++s) {
      Rng rng = Rng::derive(options.base_seed + s, 0x6C0000 + k);
      const Instance inst = c.build(rng, options);
      const GradCheckReport report = grad_check(inst.f, inst.point, options.eps, options.tol);
      ++result.seeds_run;
      if (s == 0 || report.max_rel_error > result.worst.max_rel_error) result.worst = report;
      result.passed = result.passed && report.passed;
    }
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace dsrsd
