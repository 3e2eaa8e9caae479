#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dsrsd/data.hpp"
#include "dsrsd/metrics.hpp"
#include "dsrsd/model.hpp"
#include "dsrsd/trainer.hpp"

namespace dsrsd {

// --- representation diagnostics ---------------------------------------------

struct DiagnosticsReport {
  double offdiag_energy = 0.0;  // sum_{i!=j} C_ij^2 of the h_A/h_B cross-covariance
  double diag_energy = 0.0;     // sum_i C_ii^2
  double orth_residual = 0.0;   // mean over samples and modalities of <s, p>^2, summed over modalities
  double gate_entropy = 0.0;    // mean entropy of the alpha rows, <= ln 2
  double h_norm_a = 0.0;
  double h_norm_b = 0.0;
  std::size_t samples = 0;
  bool has_streams = false;     // false for the backbone variant: all values stay 0
};

/// Eval-mode statistics over `data` in batches of `batch_size`, combined as a
/// batch-size-weighted mean. Batches of one row do not contribute covariance terms.
DiagnosticsReport diagnostics(const DsrsdModel& model, const MultimodalDataset& data,
                              std::size_t batch_size = 256);

// --- modality-dropout sweep --------------------------------------------------

struct SweepRow {
  Modality modality = Modality::kA;
  double p = 0.0;
  std::uint64_t seed = 0;
  MetricSet metrics;
};

struct SweepCell {
  Modality modality = Modality::kA;
  double p = 0.0;
  MetricSet mean;
  MetricSet stddev;
  MetricSet degradation;  // clean metrics minus mean; positive means worse
};

struct SweepResult {
  MetricSet clean;
  std::vector<SweepRow> rows;
  std::vector<SweepCell> cells;
};

/// Corrupts `test` once per (modality, p, seed) without retraining and evaluates.
/// For a fixed seed the dropped set at a smaller p is a subset of the set at a larger p.
SweepResult dropout_sweep(const DsrsdModel& model, const MultimodalDataset& test,
                          std::span<const double> p_grid, std::span<const Modality> modalities,
                          std::span<const std::uint64_t> seeds);

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep);

// --- ablation ------------------------------------------------------------------

enum class AblationVariant { kBackbone, kWithoutDecorrelation, kWithoutOrthogonality, kFull };

inline constexpr std::array<AblationVariant, 4> kAblationVariants{
    AblationVariant::kBackbone, AblationVariant::kWithoutDecorrelation,
    AblationVariant::kWithoutOrthogonality, AblationVariant::kFull};

std::string_view ablation_variant_name(AblationVariant v);

/// Variant-specific model and loss weights derived from a base configuration:
/// the backbone bypasses the dual-stream heads and trains on the task term only;
/// the "without" variants zero one regularizer weight.
std::pair<ModelConfig, LossWeights> ablation_variant_config(AblationVariant v, const ModelConfig& model,
                                                           const LossWeights& weights);

struct DropoutProbe {
  Modality modality = Modality::kB;
  double p = 0.5;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

struct AblationSetup {
  ModelConfig model;  // input dims are taken from the dataset
  TrainConfig train;
  std::array<double, 3> split_ratios{0.7, 0.1, 0.2};
  std::vector<std::uint64_t> seeds;
  std::optional<DropoutProbe> probe;
  std::size_t threads = 1;
};

struct AblationRun {
  AblationVariant variant = AblationVariant::kFull;
  std::uint64_t seed = 0;
  LossWeights weights;
  MetricSet test;
  DiagnosticsReport diagnostics;
  std::optional<MetricSet> probe;  // mean test metrics under the dropout probe
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  std::size_t parameter_count = 0;
  double seconds_per_epoch = 0.0;
};

struct AblationSummary {
  AblationVariant variant = AblationVariant::kFull;
  MetricSet mean;
  MetricSet stddev;
  double offdiag_energy_mean = 0.0;
  double orth_residual_mean = 0.0;
  double probe_auc_drop_mean = 0.0;  // clean AUC minus probe AUC, averaged over seeds
};

struct AblationResult {
  std::vector<AblationRun> runs;  // variant-major, seeds in the given order
  std::vector<AblationSummary> summaries;

  const AblationRun& run(AblationVariant v, std::uint64_t seed) const;
  const AblationSummary& summary(AblationVariant v) const;
};

/// Trains every variant on every seed. The split and the model initialization
/// depend only on the seed, so variants are compared on identical data.
AblationResult ablation_run(const AblationSetup& setup, const MultimodalDataset& data);

void write_ablation_csv(const std::filesystem::path& path, const AblationResult& result);

// --- embedding export ----------------------------------------------------------

struct ExportOptions {
  bool shared = false;
  bool priv = false;
  bool aligned = false;
};

/// CSV columns: sample_id, label, u_0..u_{d-1}, then optional s/p/h blocks per modality.
void export_embeddings(const DsrsdModel& model, const MultimodalDataset& data,
                       const std::filesystem::path& path, const ExportOptions& options = {});

}  // namespace dsrsd
