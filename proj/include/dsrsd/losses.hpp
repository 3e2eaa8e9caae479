#pragma once

#include <span>
#include <string>

#include "dsrsd/tensor.hpp"

namespace dsrsd {

struct LossWeights {
  double con = 1.0;
  double align = 0.5;
  double dec = 0.05;
  double orth = 0.05;
  double task = 1.0;

  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossComponents {
  double con = 0.0;
  double align = 0.0;
  double dec = 0.0;
  double orth = 0.0;
  double task = 0.0;
};

struct LossReport {
  LossComponents components;
  LossWeights weights;
  double total = 0.0;
  bool dec_skipped = false;
};

/// A-anchored InfoNCE over cosine similarities. `symmetric` adds the B-anchored
/// term and averages the two.
Tensor contrastive_loss(const Tensor& h_a, const Tensor& h_b, double tau, bool symmetric = false);

/// (1/B) sum_i ||h_i^A - h_i^B||^2.
Tensor align_loss(const Tensor& h_a, const Tensor& h_b);

/// (1/(B-1)) Hc_A^T Hc_B with column-mean centering per modality. Needs B >= 2.
Tensor cross_covariance(const Tensor& h_a, const Tensor& h_b);

/// Sum of squared off-diagonal entries.
Tensor decorrelation_loss(const Tensor& cov);

/// (1/B) sum_i (<s_i^A, p_i^A>^2 + <s_i^B, p_i^B>^2).
Tensor orthogonality_loss(const Tensor& s_a, const Tensor& p_a, const Tensor& s_b, const Tensor& p_b);

/// Mean cross-entropy against smoothed one-hot targets: 1 - eps on the true class
/// and eps / (C - 1) on each other class.
Tensor task_loss(const Tensor& logits, std::span<const int> labels, double smoothing);

/// Weighted sum of already-computed component values.
LossReport total_loss(const LossComponents& components, const LossWeights& weights);

}  // namespace dsrsd
