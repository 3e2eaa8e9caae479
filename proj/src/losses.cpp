#include "dsrsd/losses.hpp"

#include <array>
#include <cmath>
#include <string>

#include "dsrsd/error.hpp"

namespace dsrsd {

void LossWeights::validate() const {
  const std::array<std::pair<const char*, double>, 5> named{
      {{"lambda_con", con}, {"lambda_align", align}, {"lambda_dec", dec}, {"lambda_orth", orth},
       {"lambda_task", task}}};
  for (const auto& [name, v] : named) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string("loss weight ") + name + " must be finite and >= 0, got " +
                        std::to_string(v));
    }
  }
}

namespace {

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.value()) + " and " +
                     shape_string(b.value()) + " do not conform");
  }
}

Tensor diagonal_mean_nll(const Tensor& log_probs) {
  const std::size_t n = log_probs.rows();
  Tensor eye = Tensor::constant(Matrix::identity(n));
  return ops::scale(ops::sum(ops::mul(log_probs, eye)), -1.0 / static_cast<double>(n));
}

}  // namespace

Tensor contrastive_loss(const Tensor& h_a, const Tensor& h_b, double tau, bool symmetric) {
  if (!(tau > 0.0)) throw ConfigError("contrastive_loss: temperature must be positive");
  require_same("contrastive_loss", h_a, h_b);
  if (h_a.rows() == 0) throw ShapeError("contrastive_loss: empty batch");
  Tensor logits = ops::scale(ops::cosine_similarity(h_a, h_b), 1.0 / tau);
  Tensor anchored_a = diagonal_mean_nll(ops::log_softmax(logits));
  if (!symmetric) return anchored_a;
  Tensor anchored_b = diagonal_mean_nll(ops::log_softmax(ops::transpose(logits)));
  return ops::scale(ops::add(anchored_a, anchored_b), 0.5);
}

Tensor align_loss(const Tensor& h_a, const Tensor& h_b) {
  require_same("align_loss", h_a, h_b);
  if (h_a.rows() == 0) throw ShapeError("align_loss: empty batch");
  return ops::scale(ops::sum(ops::square(ops::sub(h_a, h_b))), 1.0 / static_cast<double>(h_a.rows()));
}

Tensor cross_covariance(const Tensor& h_a, const Tensor& h_b) {
  require_same("cross_covariance", h_a, h_b);
  if (h_a.rows() < 2) {
    throw DataError("cross_covariance: batch size " + std::to_string(h_a.rows()) +
                    " < 2, covariance undefined");
  }
  Tensor centered_a = ops::add_row_bias(h_a, ops::scale(ops::col_mean(h_a), -1.0));
  Tensor centered_b = ops::add_row_bias(h_b, ops::scale(ops::col_mean(h_b), -1.0));
  return ops::scale(ops::matmul(ops::transpose(centered_a), centered_b),
                    1.0 / static_cast<double>(h_a.rows() - 1));
}

Tensor decorrelation_loss(const Tensor& cov) {
  if (cov.rows() != cov.cols()) {
    throw ShapeError("decorrelation_loss: expected a square matrix, got " + shape_string(cov.value()));
  }
  Matrix off_diagonal(cov.rows(), cov.cols(), 1.0);
  for (std::size_t i = 0; i < cov.rows(); ++i) off_diagonal(i, i) = 0.0;
  return ops::sum(ops::mul(ops::square(cov), Tensor::constant(std::move(off_diagonal))));
}

Tensor orthogonality_loss(const Tensor& s_a, const Tensor& p_a, const Tensor& s_b, const Tensor& p_b) {
  require_same("orthogonality_loss", s_a, p_a);
  require_same("orthogonality_loss", s_b, p_b);
  require_same("orthogonality_loss", s_a, s_b);
  if (s_a.rows() == 0) throw ShapeError("orthogonality_loss: empty batch");
  Tensor inner_a = ops::row_sum(ops::mul(s_a, p_a));
  Tensor inner_b = ops::row_sum(ops::mul(s_b, p_b));
  Tensor per_row = ops::add(ops::square(inner_a), ops::square(inner_b));
  return ops::mean(per_row);
}

Tensor task_loss(const Tensor& logits, std::span<const int> labels, double smoothing) {
  const std::size_t n = logits.rows();
  const std::size_t classes = logits.cols();
  if (labels.size() != n) {
    throw ShapeError("task_loss: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows of logits");
  }
  if (n == 0) throw ShapeError("task_loss: empty batch");
  if (classes < 2) throw ConfigError("task_loss: need at least two classes");
  if (!(smoothing >= 0.0 && smoothing < 1.0)) {
    throw ConfigError("task_loss: smoothing must lie in [0,1), got " + std::to_string(smoothing));
  }
  const double off = smoothing / static_cast<double>(classes - 1);
  Matrix targets(n, classes, off);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw DataError("task_loss: label " + std::to_string(y) + " at row " + std::to_string(i) +
                      " outside [0," + std::to_string(classes) + ")");
    }
    targets(i, static_cast<std::size_t>(y)) = 1.0 - smoothing;
  }
  Tensor weighted = ops::mul(ops::log_softmax(logits), Tensor::constant(std::move(targets)));
  return ops::scale(ops::sum(weighted), -1.0 / static_cast<double>(n));
}

LossReport total_loss(const LossComponents& c, const LossWeights& w) {
  w.validate();
  const std::array<std::pair<const char*, double>, 5> named{
      {{"con", c.con}, {"align", c.align}, {"dec", c.dec}, {"orth", c.orth}, {"task", c.task}}};
  for (const auto& [name, v] : named) {
    if (!std::isfinite(v)) throw NumericalError(std::string("loss component ") + name + " is not finite");
  }
  LossReport r;
  r.components = c;
  r.weights = w;
  r.total = w.con * c.con + w.align * c.align + w.dec * c.dec + w.orth * c.orth + w.task * c.task;
  return r;
}

}  // namespace dsrsd
