#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dsrsd/matrix.hpp"
#include "dsrsd/rng.hpp"
#include "dsrsd/tensor.hpp"

namespace dsrsd {

/// Train/eval switch shared by every module that owns dropout.
struct ForwardMode {
  bool train = false;
  double dropout_rate = 0.0;
  Rng* rng = nullptr;  // required when train && dropout_rate > 0

  static ForwardMode eval() { return {}; }
};

/// y = x * W^T + b, with W stored out x in and b as a 1 x out row.
struct DenseLayer {
  Tensor weight;
  Tensor bias;
};

/// Feed-forward stack with GELU between layers and a linear output layer.
struct MlpParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t output_dim = 0;
  std::vector<DenseLayer> layers;
};

/// Glorot-uniform weights, zero biases. `num_layers` == 1 gives a single linear map.
MlpParams make_mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                   std::size_t num_layers, Rng& rng);

/// Dropout is applied after each hidden activation in train mode, never on the output.
Tensor mlp_forward(const Tensor& x, const MlpParams& params, const ForwardMode& mode);

/// Base representation z = f(x) for one modality. `modality` only labels errors.
Tensor encode(const Tensor& x, const MlpParams& params, const ForwardMode& mode,
              std::string_view modality = "?");

/// Square scale-normalizing projection; no bias term.
struct ModalityProjection {
  Tensor weight;  // d x d
};

ModalityProjection make_projection(std::size_t dim, Rng& rng, double noise = 0.0);

/// z~ = z * W^T (row-vector convention).
Tensor project(const Tensor& z, const Tensor& weight);

/// Ragged batch of sequences: sample i has steps[i].rows() time steps of width D,
/// and mask[i][t] marks step t as valid.
struct SequenceBatch {
  std::vector<Matrix> steps;
  std::vector<std::vector<std::uint8_t>> mask;
};

/// Masked mean over valid steps, one pooled row per sample.
Matrix masked_mean_pool(const SequenceBatch& batch);

Tensor seq_encode(const SequenceBatch& batch, const MlpParams& params, const ForwardMode& mode,
                  std::string_view modality = "?");

}  // namespace dsrsd
