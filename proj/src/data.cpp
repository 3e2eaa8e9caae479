#include "dsrsd/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dsrsd/error.hpp"
#include "dsrsd/rng.hpp"

namespace dsrsd {

namespace fs = std::filesystem;

void MultimodalDataset::validate(bool require_all_classes) const {
  const std::size_t n = labels.size();
  if (features_a.rows() != n || features_b.rows() != n || present_a.size() != n ||
      present_b.size() != n) {
    throw DataError("dataset: row counts disagree (A " + std::to_string(features_a.rows()) + ", B " +
                    std::to_string(features_b.rows()) + ", labels " + std::to_string(n) + ", presence " +
                    std::to_string(present_a.size()) + "/" + std::to_string(present_b.size()) + ")");
  }
  if (num_classes < 2) throw ConfigError("dataset: num_classes must be >= 2");
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw DataError("dataset: label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                      " outside [0," + std::to_string(num_classes) + ")");
    }
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  if (require_all_classes) {
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] == 0) throw DataError("dataset: class " + std::to_string(c) + " never occurs");
    }
  }
}

namespace {

Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

template <typename T>
std::vector<T> take(const std::vector<T>& v, std::span<const std::size_t> rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(v[r]);
  return out;
}

}  // namespace

MultimodalDataset MultimodalDataset::subset(std::span<const std::size_t> rows) const {
  for (std::size_t r : rows) {
    if (r >= size()) throw UsageError("subset: row " + std::to_string(r) + " out of range");
  }
  MultimodalDataset out;
  out.features_a = take_rows(features_a, rows);
  out.features_b = take_rows(features_b, rows);
  out.labels = take(labels, rows);
  out.present_a = take(present_a, rows);
  out.present_b = take(present_b, rows);
  out.num_classes = num_classes;
  if (truth) {
    out.truth = GroundTruthFactors{take_rows(truth->shared, rows), take_rows(truth->private_a, rows),
                                   take_rows(truth->private_b, rows)};
  }
  return out;
}

// --- synthetic -----------------------------------------------------------------

void SyntheticSpec::validate() const {
  if (n == 0) throw ConfigError("synthetic: n must be positive");
  if (shared_dim == 0) throw ConfigError("synthetic: shared_dim must be >= 1");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("synthetic: noise must be >= 0");
  const std::size_t k = shared_dim + private_dim;
  if (dim_a < k || dim_b < k) {
    throw ConfigError("synthetic: feature dims (" + std::to_string(dim_a) + ", " + std::to_string(dim_b) +
                      ") must be >= shared_dim + private_dim = " + std::to_string(k));
  }
  if (!label_direction.empty() && label_direction.size() != shared_dim) {
    throw ConfigError("synthetic: label_direction has " + std::to_string(label_direction.size()) +
                      " entries, expected shared_dim = " + std::to_string(shared_dim));
  }
}

namespace {

// Gaussian matrix orthonormalized column by column (modified Gram-Schmidt).
Matrix orthonormal_columns(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    for (;;) {
      for (std::size_t r = 0; r < rows; ++r) m(r, c) = rng.normal();
      for (std::size_t prev = 0; prev < c; ++prev) {
        double dot = 0.0;
        for (std::size_t r = 0; r < rows; ++r) dot += m(r, c) * m(r, prev);
        for (std::size_t r = 0; r < rows; ++r) m(r, c) -= dot * m(r, prev);
      }
      double norm = 0.0;
      for (std::size_t r = 0; r < rows; ++r) norm += m(r, c) * m(r, c);
      norm = std::sqrt(norm);
      if (norm < 1e-8) continue;
      for (std::size_t r = 0; r < rows; ++r) m(r, c) /= norm;
      break;
    }
  }
  return m;
}

Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

// x_i = M [shared_i; private_i] + noise * eps_i
Matrix mix(const Matrix& shared, const Matrix& priv, const Matrix& mixing, double noise, Rng& rng) {
  const std::size_t n = shared.rows(), ks = shared.cols(), kp = priv.cols();
  Matrix x(n, mixing.rows());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < mixing.rows(); ++r) {
      double v = 0.0;
      for (std::size_t c = 0; c < ks; ++c) v += mixing(r, c) * shared(i, c);
      for (std::size_t c = 0; c < kp; ++c) v += mixing(r, ks + c) * priv(i, c);
      x(i, r) = v;
    }
  }
  if (noise > 0.0) {
    for (double& v : x.values()) v += noise * rng.normal();
  }
  return x;
}

}  // namespace

MultimodalDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng factor_rng = Rng::derive(seed, 101);
  Rng mixing_rng = Rng::derive(seed, 102);
  Rng noise_rng = Rng::derive(seed, 103);
  Rng label_rng = Rng::derive(seed, 104);

  GroundTruthFactors truth{gaussian(spec.n, spec.shared_dim, factor_rng),
                           gaussian(spec.n, spec.private_dim, factor_rng),
                           gaussian(spec.n, spec.private_dim, factor_rng)};
  const std::size_t k = spec.shared_dim + spec.private_dim;
  const Matrix mixing_a = orthonormal_columns(spec.dim_a, k, mixing_rng);
  const Matrix mixing_b = orthonormal_columns(spec.dim_b, k, mixing_rng);

  std::vector<double> direction = spec.label_direction;
  if (direction.empty()) {
    direction.resize(spec.shared_dim);
    for (double& v : direction) v = label_rng.normal();
  }

  MultimodalDataset data;
  data.features_a = mix(truth.shared, truth.private_a, mixing_a, spec.noise, noise_rng);
  data.features_b = mix(truth.shared, truth.private_b, mixing_b, spec.noise, noise_rng);
  data.labels.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double score = 0.0;
    for (std::size_t c = 0; c < spec.shared_dim; ++c) score += direction[c] * truth.shared(i, c);
    data.labels[i] = score > 0.0 ? 1 : 0;
  }
  data.present_a.assign(spec.n, 1);
  data.present_b.assign(spec.n, 1);
  data.num_classes = 2;
  data.truth = std::move(truth);
  return data;
}

// --- splitting and corruption -------------------------------------------------

std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n, std::array<double, 3> ratios,
                                                      std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ConfigError("split: ratios must be non-negative");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw ConfigError("split: ratios must sum to 1");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = Rng::derive(seed, 201);
  rng.shuffle(std::span<std::size_t>(perm));

  const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n)));
  if (n_train + n_val >= n || n_train == 0 || n_val == 0) {
    throw ConfigError("split: " + std::to_string(n) + " samples leave an empty split");
  }
  std::array<std::vector<std::size_t>, 3> parts;
  parts[0].assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  parts[1].assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                  perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  parts[2].assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  return parts;
}

DataSplit split(const MultimodalDataset& data, std::array<double, 3> ratios, std::uint64_t seed) {
  auto parts = split_indices(data.size(), ratios, seed);
  return {data.subset(parts[0]), data.subset(parts[1]), data.subset(parts[2])};
}

MultimodalDataset apply_modality_dropout(const MultimodalDataset& data, Modality modality, double p,
                                         std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("modality dropout: p must lie in [0,1]");
  MultimodalDataset out = data;
  Matrix& features = modality == Modality::kA ? out.features_a : out.features_b;
  auto& present = modality == Modality::kA ? out.present_a : out.present_b;
  Rng rng = Rng::derive(seed, modality == Modality::kA ? 301 : 302);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (rng.uniform() < p) {
      for (double& v : features.row(i)) v = 0.0;
      present[i] = 0;
    }
  }
  return out;
}

// --- CSV -----------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, end);
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

Matrix read_feature_csv(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file, expected a header row");
  const std::size_t width = split_csv_line(line).size();
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != width) {
      throw DataError(where(path, lineno) + ": expected " + std::to_string(width) + " cells, found " +
                      std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty() || !std::isfinite(v)) {
        throw DataError(where(path, lineno) + ": non-numeric cell '" + cell + "' in column " +
                        std::to_string(c));
      }
      values.push_back(v);
    }
    ++rows;
  }
  return Matrix(rows, width, std::move(values));
}

std::vector<int> read_label_csv(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file, expected a header row");
  std::vector<int> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string cell = trim(line);
    if (cell.empty()) continue;
    int v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw DataError(where(path, lineno) + ": label '" + cell + "' is not an integer");
    }
    labels.push_back(v);
  }
  return labels;
}

namespace {
std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}
}  // namespace

void write_feature_csv(const fs::path& path, const Matrix& features) {
  std::ofstream out = open_output(path);
  for (std::size_t c = 0; c < features.cols(); ++c) out << (c ? "," : "") << 'f' << c;
  out << '\n';
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c) out << (c ? "," : "") << format_double(features(r, c));
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_label_csv(const fs::path& path, std::span<const int> labels) {
  std::ofstream out = open_output(path);
  out << "label\n";
  for (int y : labels) out << y << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

MultimodalDataset load_csv(const fs::path& features_a, const fs::path& features_b, const fs::path& labels,
                           const std::optional<fs::path>& context, int num_classes) {
  MultimodalDataset data;
  data.features_a = read_feature_csv(features_a);
  data.features_b = read_feature_csv(features_b);
  data.labels = read_label_csv(labels);
  const std::size_t n = data.labels.size();
  auto check_rows = [n, &labels](const fs::path& p, std::size_t rows) {
    if (rows != n) {
      throw DataError("row-count mismatch: " + p.string() + " has " + std::to_string(rows) + " rows, " +
                      labels.string() + " has " + std::to_string(n));
    }
  };
  check_rows(features_a, data.features_a.rows());
  check_rows(features_b, data.features_b.rows());
  if (context) {
    Matrix ctx = read_feature_csv(*context);
    check_rows(*context, ctx.rows());
    Matrix joined(n, data.features_a.cols() + ctx.cols());
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = joined.row(i);
      auto a = data.features_a.row(i);
      auto c = ctx.row(i);
      std::copy(a.begin(), a.end(), dst.begin());
      std::copy(c.begin(), c.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.size()));
    }
    data.features_a = std::move(joined);
  }
  if (num_classes <= 0) {
    int mx = 1;
    for (int y : data.labels) mx = std::max(mx, y);
    num_classes = mx + 1;
  }
  data.num_classes = num_classes;
  for (std::size_t i = 0; i < n; ++i) {
    if (data.labels[i] < 0 || data.labels[i] >= num_classes) {
      throw DataError(where(labels, i + 2) + ": label " + std::to_string(data.labels[i]) + " outside [0," +
                      std::to_string(num_classes) + ")");
    }
  }
  data.present_a.assign(n, 1);
  data.present_b.assign(n, 1);
  data.validate(true);
  return data;
}

// --- manifest ------------------------------------------------------------------

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest " + path.string() + ": " + e.what());
  }
  static const std::vector<std::string> known{"features_a", "features_b", "labels", "context",
                                              "dim_a",      "dim_b",      "dim_context", "num_classes"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("manifest " + path.string() + ": unknown key '" + key + "'");
    }
  }
  const fs::path base = path.parent_path();
  auto resolve = [&base](const std::string& p) {
    fs::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  DatasetManifest m;
  try {
    m.features_a = resolve(j.at("features_a").get<std::string>());
    m.features_b = resolve(j.at("features_b").get<std::string>());
    m.labels = resolve(j.at("labels").get<std::string>());
    if (j.contains("context") && !j["context"].is_null()) m.context = resolve(j["context"].get<std::string>());
    m.dim_a = j.value("dim_a", std::size_t{0});
    m.dim_b = j.value("dim_b", std::size_t{0});
    m.dim_context = j.value("dim_context", std::size_t{0});
    m.num_classes = j.value("num_classes", 2);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest " + path.string() + ": " + e.what());
  }
  return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["features_a"] = m.features_a.string();
  j["features_b"] = m.features_b.string();
  j["labels"] = m.labels.string();
  j["context"] = m.context ? nlohmann::ordered_json(m.context->string()) : nlohmann::ordered_json(nullptr);
  j["dim_a"] = m.dim_a;
  j["dim_b"] = m.dim_b;
  j["dim_context"] = m.dim_context;
  j["num_classes"] = m.num_classes;
  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
}

MultimodalDataset load_manifest(const fs::path& path) {
  const DatasetManifest m = read_manifest(path);
  MultimodalDataset data = load_csv(m.features_a, m.features_b, m.labels, m.context, m.num_classes);
  const std::size_t expect_a = m.dim_a + (m.context ? m.dim_context : 0);
  if (m.dim_a != 0 && data.features_a.cols() != expect_a) {
    throw DataError("manifest " + path.string() + ": modality A has " +
                    std::to_string(data.features_a.cols()) + " columns, manifest declares " +
                    std::to_string(expect_a));
  }
  if (m.dim_b != 0 && data.features_b.cols() != m.dim_b) {
    throw DataError("manifest " + path.string() + ": modality B has " +
                    std::to_string(data.features_b.cols()) + " columns, manifest declares " +
                    std::to_string(m.dim_b));
  }
  return data;
}

}  // namespace dsrsd
