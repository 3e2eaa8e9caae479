#include "dsrsd/dualstream.hpp"

#include <array>

#include "dsrsd/error.hpp"

namespace dsrsd {

StreamHeads make_stream_heads(std::size_t dim, std::size_t hidden, Rng& rng) {
  StreamHeads heads;
  heads.shared_residual = make_mlp(dim, hidden, dim, 2, rng);
  heads.private_head = make_mlp(dim, hidden, dim, 2, rng);
  heads.alignment = make_projection(dim, rng).weight;
  // Start the shared stream at the base representation: the correction is learned.
  auto& last = heads.shared_residual.layers.back().weight;
  Matrix small = last.value();
  for (double& v : small.values()) v *= 0.1;
  last.assign(std::move(small));
  return heads;
}

GateParams make_gate(std::size_t dim) {
  return {Tensor::parameter(Matrix(1, dim)), Tensor::parameter(Matrix(1, dim))};
}

SharedPrivate decompose(const Tensor& z_tilde, const StreamHeads& heads, const ForwardMode& mode,
                        bool residual) {
  if (z_tilde.cols() != heads.shared_residual.input_dim ||
      z_tilde.cols() != heads.private_head.input_dim) {
    throw ShapeError("decompose: input " + shape_string(z_tilde.value()) +
                     " does not match head width " + std::to_string(heads.shared_residual.input_dim));
  }
  Tensor shared = residual ? ops::add(z_tilde, mlp_forward(z_tilde, heads.shared_residual, mode))
                           : z_tilde;
  return {shared, mlp_forward(z_tilde, heads.private_head, mode)};
}

Tensor project_shared(const Tensor& shared, const Tensor& alignment) {
  return project(shared, alignment);
}

FusedOutput gated_fuse(const Tensor& h_a, const Tensor& h_b, const GateParams& gate) {
  if (!h_a.value().same_shape(h_b.value())) {
    throw ShapeError("gated_fuse: shapes " + shape_string(h_a.value()) + " and " +
                     shape_string(h_b.value()) + " do not conform");
  }
  if (gate.weight_a.cols() != h_a.cols() || gate.weight_b.cols() != h_b.cols()) {
    throw ShapeError("gated_fuse: gate width does not match latent width " +
                     std::to_string(h_a.cols()));
  }
  const std::array<Tensor, 2> logits{ops::matmul_nt(h_a, gate.weight_a),
                                     ops::matmul_nt(h_b, gate.weight_b)};
  Tensor alpha = ops::row_softmax(ops::concat_cols(logits));
  Tensor fused = ops::add(ops::mul_col_broadcast(h_a, ops::slice_cols(alpha, 0, 1)),
                          ops::mul_col_broadcast(h_b, ops::slice_cols(alpha, 1, 2)));
  return {fused, alpha};
}

Tensor augment(const Tensor& fused, const Tensor& priv_a, const Tensor& priv_b) {
  if (fused.rows() != priv_a.rows() || fused.rows() != priv_b.rows()) {
    throw ShapeError("augment: row counts " + std::to_string(fused.rows()) + ", " +
                     std::to_string(priv_a.rows()) + ", " + std::to_string(priv_b.rows()) +
                     " differ");
  }
  const std::array<Tensor, 3> parts{fused, priv_a, priv_b};
  return ops::concat_cols(parts);
}

}  // namespace dsrsd
