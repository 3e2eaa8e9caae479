#include <sstream>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dsrsd/commands.hpp"
#include "dsrsd/data.hpp"
#include "dsrsd/error.hpp"
#include "dsrsd/gradcheck_suite.hpp"
#include "dsrsd/losses.hpp"
#include "dsrsd/metrics.hpp"
#include "dsrsd/tensor.hpp"

namespace py = pybind11;
using namespace dsrsd;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-d array, got " + std::to_string(a.ndim()) + "-d");
  const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

Tensor constant(const Array& a) { return Tensor::constant(to_matrix(a)); }

py::dict dataset_dict(const MultimodalDataset& d) {
  py::dict out;
  out["features_a"] = to_array(d.features_a);
  out["features_b"] = to_array(d.features_b);
  out["labels"] = d.labels;
  if (d.truth) {
    out["shared"] = to_array(d.truth->shared);
    out["private_a"] = to_array(d.truth->private_a);
    out["private_b"] = to_array(d.truth->private_b);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dual-stream multimodal representation learning core";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<ShapeError>(m, "ShapeError", base);
  py::register_exception<UsageError>(m, "UsageError", base);
  py::register_exception<DataError>(m, "DataError", base);
  py::register_exception<IoError>(m, "IoError", base);
  py::register_exception<NumericalError>(m, "NumericalError", base);

  m.def(
      "generate_synthetic",
      [](std::size_t n, std::size_t dim_a, std::size_t dim_b, std::size_t shared_dim, std::size_t private_dim,
         double noise, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.n = n;
        spec.dim_a = dim_a;
        spec.dim_b = dim_b;
        spec.shared_dim = shared_dim;
        spec.private_dim = private_dim;
        spec.noise = noise;
        return dataset_dict(generate_synthetic(spec, seed));
      },
      py::arg("n") = 2000, py::arg("dim_a") = 20, py::arg("dim_b") = 20, py::arg("shared_dim") = 4,
      py::arg("private_dim") = 4, py::arg("noise") = 0.5, py::arg("seed") = 0);

  m.def(
      "auc", [](const std::vector<double>& scores, const std::vector<int>& labels) { return auc(scores, labels); },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "contrastive_loss",
      [](const Array& a, const Array& b, double tau, bool symmetric) {
        return contrastive_loss(constant(a), constant(b), tau, symmetric).item();
      },
      py::arg("h_a"), py::arg("h_b"), py::arg("tau") = 0.1, py::arg("symmetric") = false);
  m.def(
      "align_loss", [](const Array& a, const Array& b) { return align_loss(constant(a), constant(b)).item(); },
      py::arg("h_a"), py::arg("h_b"));
  m.def(
      "cross_covariance",
      [](const Array& a, const Array& b) { return to_array(cross_covariance(constant(a), constant(b)).value()); },
      py::arg("h_a"), py::arg("h_b"));
  m.def(
      "decorrelation_loss",
      [](const Array& a, const Array& b) {
        return decorrelation_loss(cross_covariance(constant(a), constant(b))).item();
      },
      py::arg("h_a"), py::arg("h_b"));
  m.def(
      "orthogonality_loss",
      [](const Array& sa, const Array& pa, const Array& sb, const Array& pb) {
        return orthogonality_loss(constant(sa), constant(pa), constant(sb), constant(pb)).item();
      },
      py::arg("s_a"), py::arg("p_a"), py::arg("s_b"), py::arg("p_b"));
  m.def(
      "task_loss",
      [](const Array& logits, const std::vector<int>& labels, double smoothing) {
        return task_loss(constant(logits), labels, smoothing).item();
      },
      py::arg("logits"), py::arg("labels"), py::arg("smoothing") = 0.1);

  m.def(
      "grad_check",
      [](std::size_t seeds) {
        GradCheckSuiteOptions options;
        options.seeds = seeds;
        py::list out;
        for (const auto& r : run_gradcheck_suite(options)) {
          py::dict row;
          row["name"] = r.name;
          row["passed"] = r.passed;
          row["max_rel_error"] = r.worst.max_rel_error;
          out.append(row);
        }
        return out;
      },
      py::arg("seeds") = 20);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
