#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "dsrsd/data.hpp"
#include "dsrsd/error.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace dsrsd;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dsrsd_test_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// Least-squares fit of every column of y on the column space of x, via
// Gram-Schmidt on the columns of x. Returns the largest absolute residual.
double regression_residual(const Matrix& x, const Matrix& y) {
  const std::size_t n = x.rows();
  std::vector<std::vector<double>> basis;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = x(i, j);
    const double scale = std::sqrt(oracle::dot(col, col));
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) {
        const double c = oracle::dot(col, q);
        for (std::size_t i = 0; i < n; ++i) col[i] -= c * q[i];
      }
    const double norm = std::sqrt(oracle::dot(col, col));
    if (norm <= 1e-9 * std::max(scale, 1.0)) continue;
    for (double& v : col) v /= norm;
    basis.push_back(col);
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < y.cols(); ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = y(i, j);
    for (const auto& q : basis) {
      const double c = oracle::dot(col, q);
      for (std::size_t i = 0; i < n; ++i) col[i] -= c * q[i];
    }
    for (double v : col) worst = std::max(worst, std::abs(v));
  }
  return worst;
}

}  // namespace

TEST_CASE("generator is deterministic per seed") {
  SyntheticSpec spec;
  spec.n = 300;
  const auto a = generate_synthetic(spec, 5), b = generate_synthetic(spec, 5), c = generate_synthetic(spec, 6);
  CHECK(a.features_a == b.features_a);
  CHECK(a.features_b == b.features_b);
  CHECK(a.labels == b.labels);
  CHECK_FALSE(a.features_a == c.features_a);
  REQUIRE(a.truth.has_value());
  CHECK(a.truth->shared.rows() == 300);
  CHECK(a.truth->shared.cols() == 4);
  CHECK(a.features_a.cols() == 20);
  CHECK(std::all_of(a.present_a.begin(), a.present_a.end(), [](auto v) { return v == 1; }));
}

TEST_CASE("default spec is class balanced within 45 to 55 percent") {
  const SyntheticSpec spec;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = generate_synthetic(spec, seed);
    CHECK(d.size() == 2000);
    const double pos = static_cast<double>(std::count(d.labels.begin(), d.labels.end(), 1)) / 2000.0;
    INFO("seed " << seed << " positive fraction " << pos);
    CHECK(pos >= 0.45);
    CHECK(pos <= 0.55);
  }
}

TEST_CASE("noiseless shared-only features are linear images of each other") {
  SyntheticSpec spec;
  spec.n = 200;
  spec.dim_a = 7;
  spec.dim_b = 5;
  spec.shared_dim = 3;
  spec.private_dim = 0;
  spec.noise = 0.0;
  const auto d = generate_synthetic(spec, 2);
  CHECK(regression_residual(d.features_a, d.features_b) < 1e-9);
  CHECK(regression_residual(d.features_b, d.features_a) < 1e-9);

  // With private factors present the cross-modal fit leaves a residual.
  spec.private_dim = 2;
  const auto p = generate_synthetic(spec, 2);
  CHECK(regression_residual(p.features_a, p.features_b) > 1e-3);
}

TEST_CASE("labels follow the sign of the label direction") {
  SyntheticSpec spec;
  spec.n = 500;
  spec.noise = 0.0;
  spec.label_direction = {1.0, 0.0, 0.0, 0.0};
  const auto d = generate_synthetic(spec, 3);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d.labels[i] == (d.truth->shared(i, 0) > 0.0 ? 1 : 0));
  spec.label_direction = {1.0, 0.0};
  CHECK_THROWS_AS(generate_synthetic(spec, 3), ConfigError);
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec;
  spec.n = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = SyntheticSpec{};
  spec.dim_a = 3;  // smaller than shared + private
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = SyntheticSpec{};
  spec.noise = -1.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("CSV round trip is bit exact") {
  const fs::path dir = scratch_dir("roundtrip");
  SyntheticSpec spec;
  spec.n = 50;
  const auto d = generate_synthetic(spec, 9);
  write_feature_csv(dir / "a.csv", d.features_a);
  write_feature_csv(dir / "b.csv", d.features_b);
  write_label_csv(dir / "y.csv", d.labels);
  const auto back = load_csv(dir / "a.csv", dir / "b.csv", dir / "y.csv");
  CHECK(back.features_a == d.features_a);
  CHECK(back.features_b == d.features_b);
  CHECK(back.labels == d.labels);
  CHECK(back.num_classes == 2);

  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 5e-324})
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);

  std::ifstream header(dir / "a.csv");
  std::string first;
  std::getline(header, first);
  CHECK(first.rfind("f0,f1,", 0) == 0);
}

TEST_CASE("CSV ingestion errors carry locations") {
  const fs::path dir = scratch_dir("errors");
  write_text(dir / "a.csv", "f0,f1\n1,2\n3,4\n5,6\n");
  write_text(dir / "b.csv", "f0\n1\n2\n3\n");
  write_text(dir / "y.csv", "label\n0\n1\n2\n");
  const auto three = [&] { return load_csv(dir / "a.csv", dir / "b.csv", dir / "y.csv", std::nullopt, 2); };
  try {
    three();
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("y.csv:4") != std::string::npos);
  }

  write_text(dir / "y.csv", "label\n0\n1\n1\n");
  const auto ok = three();
  CHECK(ok.size() == 3);

  write_text(dir / "bad.csv", "f0,f1\n1,2\n3,x\n5,6\n");
  try {
    read_feature_csv(dir / "bad.csv");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("bad.csv:3") != std::string::npos);
  }

  write_text(dir / "short.csv", "f0\n1\n2\n");
  CHECK_THROWS_AS(load_csv(dir / "a.csv", dir / "short.csv", dir / "y.csv"), DataError);
  CHECK_THROWS_AS(read_feature_csv(dir / "missing.csv"), DataError);
  write_text(dir / "ragged.csv", "f0,f1\n1,2\n3\n");
  CHECK_THROWS_AS(read_feature_csv(dir / "ragged.csv"), DataError);
}

TEST_CASE("context features are appended to modality A") {
  const fs::path dir = scratch_dir("context");
  write_text(dir / "a.csv", "f0\n1\n2\n");
  write_text(dir / "b.csv", "f0\n3\n4\n");
  write_text(dir / "c.csv", "f0,f1\n5,6\n7,8\n");
  write_text(dir / "y.csv", "label\n0\n1\n");
  const auto d = load_csv(dir / "a.csv", dir / "b.csv", dir / "y.csv", dir / "c.csv");
  CHECK(d.features_a == Matrix::from_rows({{1, 5, 6}, {2, 7, 8}}));
}

TEST_CASE("manifest round trip") {
  const fs::path dir = scratch_dir("manifest");
  SyntheticSpec spec;
  spec.n = 20;
  spec.dim_a = 9;
  spec.dim_b = 8;
  const auto d = generate_synthetic(spec, 1);
  write_feature_csv(dir / "features_a.csv", d.features_a);
  write_feature_csv(dir / "features_b.csv", d.features_b);
  write_label_csv(dir / "labels.csv", d.labels);
  DatasetManifest m;
  m.features_a = "features_a.csv";
  m.features_b = "features_b.csv";
  m.labels = "labels.csv";
  m.dim_a = 9;
  m.dim_b = 8;
  write_manifest(dir / "manifest.json", m);
  const auto back = load_manifest(dir / "manifest.json");
  CHECK(back.features_a == d.features_a);
  CHECK(back.labels == d.labels);

  m.dim_b = 3;
  write_manifest(dir / "wrong.json", m);
  CHECK_THROWS_AS(load_manifest(dir / "wrong.json"), DataError);
  write_text(dir / "unknown.json", "{\"features_a\":\"a\",\"bogus\":1}");
  CHECK_THROWS_AS(read_manifest(dir / "unknown.json"), ConfigError);
}

TEST_CASE("split sizes and partition") {
  const auto idx = split_indices(10, {0.7, 0.1, 0.2}, 0);
  CHECK(idx[0].size() == 7);
  CHECK(idx[1].size() == 1);
  CHECK(idx[2].size() == 2);
  CHECK(split_indices(10, {0.7, 0.1, 0.2}, 0) == idx);

  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    testgen::Gen gen(seed);
    const std::size_t n = gen.size(10, 500);
    const auto parts = split_indices(n, {0.7, 0.1, 0.2}, seed);
    std::set<std::size_t> all;
    std::size_t total = 0;
    for (const auto& part : parts) {
      CHECK_FALSE(part.empty());
      total += part.size();
      all.insert(part.begin(), part.end());
    }
    CHECK(total == n);
    CHECK(all.size() == n);
    CHECK(*all.rbegin() == n - 1);
  }

  CHECK_THROWS_AS(split_indices(10, {0.5, 0.1, 0.2}, 0), ConfigError);
  CHECK_THROWS_AS(split_indices(3, {0.9, 0.05, 0.05}, 0), ConfigError);

  SyntheticSpec spec;
  spec.n = 100;
  const auto d = generate_synthetic(spec, 0);
  const DataSplit s = split(d, {0.7, 0.1, 0.2}, 4);
  CHECK(s.train.size() == 70);
  CHECK(s.val.size() == 10);
  CHECK(s.test.size() == 20);
  const auto parts = split_indices(100, {0.7, 0.1, 0.2}, 4);
  for (std::size_t k = 0; k < 20; ++k) CHECK(s.test.labels[k] == d.labels[parts[2][k]]);
}

TEST_CASE("modality dropout") {
  SyntheticSpec spec;
  spec.n = 10000;
  spec.dim_a = 8;
  spec.dim_b = 8;
  const auto d = generate_synthetic(spec, 0);

  const auto none = apply_modality_dropout(d, Modality::kA, 0.0, 1);
  CHECK(none.features_a == d.features_a);
  CHECK(none.present_a == d.present_a);

  const auto all = apply_modality_dropout(d, Modality::kB, 1.0, 1);
  CHECK(all.features_b == Matrix(10000, 8));
  CHECK(std::all_of(all.present_b.begin(), all.present_b.end(), [](auto v) { return v == 0; }));
  CHECK(all.features_a == d.features_a);

  const auto part = apply_modality_dropout(d, Modality::kA, 0.3, 7);
  const auto dropped = static_cast<double>(std::count(part.present_a.begin(), part.present_a.end(), 0));
  CHECK(std::abs(dropped / 10000.0 - 0.3) <= 0.02);
  CHECK(part.features_b == d.features_b);
  CHECK(part.present_b == d.present_b);
  CHECK(part.labels == d.labels);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto row = part.features_a.row(i);
    if (part.present_a[i] == 0) {
      CHECK(std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; }));
    } else {
      CHECK(std::equal(row.begin(), row.end(), d.features_a.row(i).begin()));
    }
  }

  // For a fixed seed the dropped set grows with p.
  const auto low = apply_modality_dropout(d, Modality::kA, 0.1, 7);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (low.present_a[i] == 0) CHECK(part.present_a[i] == 0);

  CHECK_THROWS_AS(apply_modality_dropout(d, Modality::kA, 1.5, 0), ConfigError);
  CHECK_THROWS_AS(parse_modality("C"), ConfigError);
  CHECK(parse_modality("b") == Modality::kB);
}

TEST_CASE("dataset validation") {
  MultimodalDataset d;
  d.features_a = Matrix(2, 1);
  d.features_b = Matrix(3, 1);
  d.labels = {0, 1};
  CHECK_THROWS_AS(d.validate(), DataError);
  d.features_b = Matrix(2, 1);
  d.labels = {1, 1};
  d.present_a = {1, 1};
  d.present_b = {1, 0};
  CHECK_NOTHROW(d.validate());
  CHECK_THROWS_AS(d.validate(true), DataError);
}
