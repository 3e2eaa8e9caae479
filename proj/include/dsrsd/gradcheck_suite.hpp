#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dsrsd/gradcheck.hpp"
#include "dsrsd/losses.hpp"
#include "dsrsd/model.hpp"

namespace dsrsd {

struct GradCheckSuiteOptions {
  std::size_t seeds = 20;
  double eps = 1e-5;
  double tol = 1e-4;
  std::size_t batch = 8;  // composite cases
  std::size_t dim = 6;
  LossWeights weights;
  ObjectiveOptions objective;
  std::uint64_t base_seed = 0;
};

struct GradCheckCaseResult {
  std::string name;
  std::size_t seeds_run = 0;
  GradCheckReport worst;  // report of the seed with the largest relative error
  bool passed = true;
};

/// Names of every case in suite order: each differentiable primitive, each
/// loss, then the full objective of both model variants.
std::vector<std::string> gradcheck_case_names();

/// Runs `names` (all cases when empty). Primitive inputs are uniform in [-2, 2];
/// log uses [0.5, 2]. Unknown names raise ConfigError.
std::vector<GradCheckCaseResult> run_gradcheck_suite(const GradCheckSuiteOptions& options,
                                                     const std::vector<std::string>& names = {});

}  // namespace dsrsd
