#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "dsrsd/tensor.hpp"

namespace dsrsd {

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  std::size_t entries_checked = 0;
  bool passed = true;
};

using TensorFunction = std::function<Tensor(std::span<const Tensor>)>;

/// Compares reverse-mode gradients of the scalar `f` at `point` against central
/// differences. Every tensor in `point` must be a leaf that requires grad; their
/// values are restored before returning. `f` must be deterministic, so any
/// randomness (dropout) has to be re-seeded inside it on each call.
///
/// Per-entry error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
GradCheckReport grad_check(const TensorFunction& f, std::span<const Tensor> point, double eps = 1e-5,
                           double tol = 1e-4);

}  // namespace dsrsd
