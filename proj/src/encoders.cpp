#include "dsrsd/encoders.hpp"

#include <cmath>

#include "dsrsd/error.hpp"

namespace dsrsd {

namespace {

DenseLayer make_dense(std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Matrix w(out, in);
  for (double& v : w.values()) v = rng.uniform(-limit, limit);
  return {Tensor::parameter(std::move(w)), Tensor::parameter(Matrix(1, out))};
}

Tensor dense(const Tensor& x, const DenseLayer& layer) {
  return ops::add_row_bias(ops::matmul_nt(x, layer.weight), layer.bias);
}

}  // namespace

MlpParams make_mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                   std::size_t num_layers, Rng& rng) {
  if (num_layers == 0) throw ConfigError("make_mlp: at least one layer is required");
  if (input_dim == 0 || output_dim == 0 || (num_layers > 1 && hidden_dim == 0)) {
    throw ConfigError("make_mlp: dimensions must be positive");
  }
  MlpParams p{input_dim, num_layers > 1 ? hidden_dim : 0, output_dim, {}};
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const std::size_t out = l + 1 == num_layers ? output_dim : hidden_dim;
    p.layers.push_back(make_dense(in, out, rng));
    in = out;
  }
  return p;
}

Tensor mlp_forward(const Tensor& x, const MlpParams& params, const ForwardMode& mode) {
  if (x.cols() != params.input_dim) {
    throw ShapeError("mlp_forward: input width " + std::to_string(x.cols()) + " != expected " +
                     std::to_string(params.input_dim));
  }
  const bool use_dropout = mode.train && mode.dropout_rate > 0.0;
  if (use_dropout && mode.rng == nullptr) {
    throw UsageError("mlp_forward: train-mode dropout needs an RNG stream");
  }
  Tensor h = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    h = dense(h, params.layers[l]);
    if (l + 1 < params.layers.size()) {
      h = ops::gelu(h);
      if (use_dropout) h = ops::dropout(h, mode.dropout_rate, *mode.rng);
    }
  }
  return h;
}

Tensor encode(const Tensor& x, const MlpParams& params, const ForwardMode& mode,
              std::string_view modality) {
  if (x.cols() != params.input_dim) {
    throw ConfigError("encode: modality " + std::string(modality) + " has " +
                      std::to_string(x.cols()) + " features, encoder expects " +
                      std::to_string(params.input_dim));
  }
  return mlp_forward(x, params, mode);
}

ModalityProjection make_projection(std::size_t dim, Rng& rng, double noise) {
  Matrix w = Matrix::identity(dim);
  if (noise > 0.0) {
    for (double& v : w.values()) v += noise * rng.normal();
  }
  return {Tensor::parameter(std::move(w))};
}

Tensor project(const Tensor& z, const Tensor& weight) {
  if (weight.rows() != weight.cols() || weight.cols() != z.cols()) {
    throw ShapeError("project: latent " + shape_string(z.value()) + " and projection " +
                     shape_string(weight.value()) + " do not conform");
  }
  return ops::matmul_nt(z, weight);
}

Matrix masked_mean_pool(const SequenceBatch& batch) {
  if (batch.steps.size() != batch.mask.size()) {
    throw ShapeError("masked_mean_pool: " + std::to_string(batch.steps.size()) + " samples but " +
                     std::to_string(batch.mask.size()) + " masks");
  }
  if (batch.steps.empty()) return Matrix();
  const std::size_t width = batch.steps.front().cols();
  Matrix pooled(batch.steps.size(), width);
  for (std::size_t i = 0; i < batch.steps.size(); ++i) {
    const Matrix& seq = batch.steps[i];
    const auto& mask = batch.mask[i];
    if (seq.cols() != width || mask.size() != seq.rows()) {
      throw ShapeError("masked_mean_pool: sample " + std::to_string(i) + " has shape " +
                       shape_string(seq) + " with " + std::to_string(mask.size()) + " mask entries");
    }
    std::size_t valid = 0;
    auto out = pooled.row(i);
    for (std::size_t t = 0; t < seq.rows(); ++t) {
      if (!mask[t]) continue;
      ++valid;
      for (std::size_t j = 0; j < width; ++j) out[j] += seq(t, j);
    }
    if (valid == 0) throw DataError("seq_encode: sample " + std::to_string(i) + " has no valid steps");
    for (double& v : out) v /= static_cast<double>(valid);
  }
  return pooled;
}

Tensor seq_encode(const SequenceBatch& batch, const MlpParams& params, const ForwardMode& mode,
                  std::string_view modality) {
  return encode(Tensor::constant(masked_mean_pool(batch)), params, mode, modality);
}

}  // namespace dsrsd
