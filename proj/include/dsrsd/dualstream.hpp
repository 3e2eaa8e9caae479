#pragma once

#include <cstddef>

#include "dsrsd/encoders.hpp"
#include "dsrsd/tensor.hpp"

namespace dsrsd {

/// Per-modality heads of the dual-stream block. Never shared across modalities.
struct StreamHeads {
  MlpParams shared_residual;  // R_sh: d -> hidden -> d, added onto its input
  MlpParams private_head;     // P_pr: d -> hidden -> d
  Tensor alignment;           // U: d x d, maps the shared stream into the alignment space
};

StreamHeads make_stream_heads(std::size_t dim, std::size_t hidden, Rng& rng);

/// One logit vector per modality; the two logits are softmax-normalized per row.
struct GateParams {
  Tensor weight_a;  // 1 x d
  Tensor weight_b;  // 1 x d
};

GateParams make_gate(std::size_t dim);

struct SharedPrivate {
  Tensor shared;
  Tensor priv;
};

/// s = z~ + R_sh(z~) and p = P_pr(z~). With `residual` off, s = z~.
SharedPrivate decompose(const Tensor& z_tilde, const StreamHeads& heads, const ForwardMode& mode,
                        bool residual = true);

/// h = s * U^T.
Tensor project_shared(const Tensor& shared, const Tensor& alignment);

struct FusedOutput {
  Tensor fused;  // u, B x d
  Tensor alpha;  // B x 2, columns (A, B)
};

/// alpha_i = softmax(w_A . h_i^A, w_B . h_i^B); u_i = alpha_i^A h_i^A + alpha_i^B h_i^B.
FusedOutput gated_fuse(const Tensor& h_a, const Tensor& h_b, const GateParams& gate);

/// Column concatenation [u, p_A, p_B].
Tensor augment(const Tensor& fused, const Tensor& priv_a, const Tensor& priv_b);

}  // namespace dsrsd
