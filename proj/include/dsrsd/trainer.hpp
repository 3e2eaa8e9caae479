#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dsrsd/data.hpp"
#include "dsrsd/losses.hpp"
#include "dsrsd/metrics.hpp"
#include "dsrsd/model.hpp"

namespace dsrsd {

struct AdamWSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;
};

struct OptimizerState {
  AdamWSettings settings;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step = 0;
};

OptimizerState make_optimizer_state(std::span<const NamedParameter> params, const AdamWSettings& settings);

/// One decoupled-weight-decay Adam update of a single tensor; `step` is 1-based.
void adamw_update(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v, std::uint64_t step,
                  const AdamWSettings& settings, double lr);

/// Updates every parameter from its current gradient (absent gradient = zero)
/// and advances the step counter by one.
void adamw_step(std::span<const NamedParameter> params, OptimizerState& state, double lr);

struct ClipResult {
  double pre_clip_norm = 0.0;
  double post_clip_norm = 0.0;
  bool finite = true;  // false: gradients untouched, caller must skip the step
};

/// Global-L2 clipping: scales all gradients by max_norm / g when g > max_norm.
ClipResult clip_gradients(std::span<Matrix* const> grads, double max_norm);

/// Linear warm-up from 0 to base_lr over `warmup_steps`, then cosine decay to
/// min_lr at `total_steps`.
double cosine_lr(std::size_t step, std::size_t total_steps, std::size_t warmup_steps, double base_lr,
                 double min_lr);

struct TrainConfig {
  std::size_t batch_size = 128;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  double warmup_fraction = 0.05;
  double base_lr = 1e-4;
  double min_lr = 0.0;
  AdamWSettings adamw;
  double clip_norm = 5.0;
  LossWeights weights;
  std::size_t ramp_epochs = 5;
  double ramp_start_fraction = 0.1;
  ObjectiveOptions objective;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Regularizer weights ramp linearly from ramp_start_fraction of their target to
/// the target over `ramp_epochs`; the other weights are held fixed.
LossWeights lambda_schedule(std::size_t epoch, const TrainConfig& config);

/// Sample order for one training epoch; a pure function of (n, seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

struct EpochRecord {
  std::size_t epoch = 0;
  LossReport train;  // batch-size-weighted means; weights are the epoch's effective weights
  MetricSet val;
  double lr = 0.0;   // learning rate of the epoch's last update
  double max_post_clip_norm = 0.0;
  double max_pre_clip_norm = 0.0;
  std::size_t skipped_steps = 0;
  double seconds = 0.0;  // wall time; excluded from deterministic outputs
};

struct FitResult {
  std::vector<EpochRecord> records;
  std::size_t best_epoch = 0;
  double best_val_auc = 0.0;
  std::size_t total_steps = 0;
};

/// Scores for AUC/F1: softmax probability of class 1, computed in eval mode.
std::vector<double> predict_scores(const DsrsdModel& model, const MultimodalDataset& data,
                                   std::size_t batch_size = 256);
MetricSet evaluate(const DsrsdModel& model, const MultimodalDataset& data, std::size_t batch_size = 256);

/// Trains until max_epochs or until validation AUC fails to improve for
/// `patience` epochs, then restores the best-AUC parameters. Writes one JSON
/// object per epoch to `log` when given.
FitResult fit(DsrsdModel& model, const MultimodalDataset& train, const MultimodalDataset& val,
              const TrainConfig& config, std::ostream* log = nullptr);

/// Single JSON line for the epoch log (no wall time).
std::string epoch_record_json(const EpochRecord& record);

}  // namespace dsrsd
