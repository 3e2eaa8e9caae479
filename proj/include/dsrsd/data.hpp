#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsrsd/matrix.hpp"
#include "dsrsd/modality.hpp"

namespace dsrsd {

/// Latent factors the synthetic generator drew; absent for loaded data.
struct GroundTruthFactors {
  Matrix shared;     // N x k_s
  Matrix private_a;  // N x k_p
  Matrix private_b;  // N x k_p
};

/// Paired two-modality dataset. A contextual third modality, when present, is
/// already concatenated into `features_a`.
struct MultimodalDataset {
  Matrix features_a;
  Matrix features_b;
  std::vector<int> labels;
  std::vector<std::uint8_t> present_a;
  std::vector<std::uint8_t> present_b;
  int num_classes = 2;
  std::optional<GroundTruthFactors> truth;

  std::size_t size() const noexcept { return labels.size(); }
  const Matrix& features(Modality m) const { return m == Modality::kA ? features_a : features_b; }

  /// Row counts agree and labels are in range. With `require_all_classes`, every
  /// class in [0, num_classes) must occur at least once.
  void validate(bool require_all_classes = false) const;

  MultimodalDataset subset(std::span<const std::size_t> rows) const;
};

struct SyntheticSpec {
  std::size_t n = 2000;
  std::size_t dim_a = 20;
  std::size_t dim_b = 20;
  std::size_t shared_dim = 4;
  std::size_t private_dim = 4;
  double noise = 0.5;
  /// Label direction over the shared factors; empty means a seeded Gaussian direction.
  std::vector<double> label_direction;

  void validate() const;
};

/// x^m = M_m [shared; private_m] + noise * eps with orthonormal-column mixing
/// matrices M_m, and label = 1{v . shared > 0}.
MultimodalDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

struct DataSplit {
  MultimodalDataset train;
  MultimodalDataset val;
  MultimodalDataset test;
};

/// Seeded permutation, then contiguous cuts of round(r0 N) and round(r1 N) rows.
DataSplit split(const MultimodalDataset& data, std::array<double, 3> ratios, std::uint64_t seed);
std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n, std::array<double, 3> ratios,
                                                      std::uint64_t seed);

/// Each sample independently loses `modality` with probability p: features are
/// zeroed and the presence flag cleared. The other modality is untouched.
MultimodalDataset apply_modality_dropout(const MultimodalDataset& data, Modality modality, double p,
                                         std::uint64_t seed);

// --- CSV ingestion -----------------------------------------------------------

/// Feature CSV: header `f0,f1,...`, one row per sample.
Matrix read_feature_csv(const std::filesystem::path& path);
/// Label CSV: header `label`, one integer per row.
std::vector<int> read_label_csv(const std::filesystem::path& path);

void write_feature_csv(const std::filesystem::path& path, const Matrix& features);
void write_label_csv(const std::filesystem::path& path, std::span<const int> labels);

/// Loads paired CSVs. `num_classes` <= 0 infers max(label) + 1 (at least 2).
MultimodalDataset load_csv(const std::filesystem::path& features_a,
                           const std::filesystem::path& features_b,
                           const std::filesystem::path& labels,
                           const std::optional<std::filesystem::path>& context = std::nullopt,
                           int num_classes = 0);

struct DatasetManifest {
  std::filesystem::path features_a;
  std::filesystem::path features_b;
  std::filesystem::path labels;
  std::optional<std::filesystem::path> context;
  std::size_t dim_a = 0;
  std::size_t dim_b = 0;
  std::size_t dim_context = 0;
  int num_classes = 2;
};

/// Relative paths in the manifest resolve against the manifest's directory.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
MultimodalDataset load_manifest(const std::filesystem::path& path);

/// Decimal form with 17 significant digits; parses back to the identical double.
std::string format_double(double v);

}  // namespace dsrsd
