#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsrsd/dualstream.hpp"
#include "dsrsd/encoders.hpp"
#include "dsrsd/losses.hpp"
#include "dsrsd/modality.hpp"

namespace dsrsd {

/// kFull is the dual-stream network; kBackbone routes the projected base
/// representations straight into a late-fusion classifier (no heads, no gate).
enum class Variant { kFull, kBackbone };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct ModelConfig {
  std::size_t input_dim_a = 0;
  std::size_t input_dim_b = 0;
  std::size_t latent_dim = 32;
  std::size_t encoder_hidden = 128;
  std::size_t encoder_layers = 2;
  std::size_t head_hidden = 128;
  std::size_t num_classes = 2;
  double dropout = 0.2;
  bool use_private_in_head = true;
  bool residual_shared = true;
  Variant variant = Variant::kFull;

  void validate() const;
};

struct ModalityStreams {
  Tensor base;       // z
  Tensor projected;  // z~
  Tensor shared;     // s
  Tensor priv;       // p
  Tensor aligned;    // h
};

struct DualStreamOutput {
  ModalityStreams a;
  ModalityStreams b;
  Tensor fused;      // u
  Tensor alpha;      // B x 2
  Tensor augmented;  // [u, p_A, p_B]
  Tensor logits;     // B x C

  bool has_streams() const { return a.aligned.defined(); }
};

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

class DsrsdModel {
 public:
  DsrsdModel(const ModelConfig& config, std::uint64_t seed);

  DualStreamOutput forward(const Tensor& x_a, const Tensor& x_b, const ForwardMode& mode) const;
  DualStreamOutput forward(const Matrix& x_a, const Matrix& x_b, const ForwardMode& mode) const {
    return forward(Tensor::constant(x_a), Tensor::constant(x_b), mode);
  }

  const ModelConfig& config() const noexcept { return config_; }
  const std::vector<NamedParameter>& parameters() const noexcept { return params_; }
  std::size_t parameter_count() const;

  std::vector<Matrix> snapshot() const;
  void restore(std::span<const Matrix> values);
  void zero_grad();

  MlpParams& encoder(Modality m) { return m == Modality::kA ? encoder_a_ : encoder_b_; }
  ModalityProjection& projection(Modality m) { return m == Modality::kA ? proj_a_ : proj_b_; }
  StreamHeads& heads(Modality m) { return m == Modality::kA ? heads_a_ : heads_b_; }
  GateParams& gate() { return gate_; }
  DenseLayer& classifier() { return classifier_; }

 private:
  void register_parameters();

  ModelConfig config_;
  MlpParams encoder_a_, encoder_b_;
  ModalityProjection proj_a_, proj_b_;
  StreamHeads heads_a_, heads_b_;
  GateParams gate_;
  DenseLayer classifier_;
  std::vector<NamedParameter> params_;
};

struct ObjectiveOptions {
  double tau = 0.1;
  bool symmetric_infonce = false;
  double smoothing = 0.05;
};

struct Objective {
  Tensor total;
  LossReport report;
};

/// Builds the weighted objective on the active graph. Terms with zero weight are
/// still evaluated for the report but not attached to `total`. Without dual-stream
/// outputs (backbone variant) only the task term exists and the other effective
/// weights are reported as zero. Batches of one row skip the decorrelation term.
Objective compute_objective(const DualStreamOutput& out, std::span<const int> labels,
                            const LossWeights& weights, const ObjectiveOptions& options);

}  // namespace dsrsd
