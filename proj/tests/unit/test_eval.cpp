#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dsrsd/error.hpp"
#include "dsrsd/eval.hpp"
#include "dsrsd/losses.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace dsrsd;
using testgen::Gen;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> cells(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) out.push_back(c);
  return out;
}

struct Small {
  DataSplit data;
  ModelConfig model;
};

Small small(std::uint64_t seed = 0, std::size_t n = 300) {
  SyntheticSpec spec;
  spec.n = n;
  spec.dim_a = 8;
  spec.dim_b = 8;
  spec.shared_dim = 2;
  spec.private_dim = 2;
  Small s;
  s.data = split(generate_synthetic(spec, seed), {0.7, 0.1, 0.2}, seed);
  s.model.input_dim_a = 8;
  s.model.input_dim_b = 8;
  s.model.latent_dim = 4;
  s.model.encoder_hidden = 8;
  s.model.head_hidden = 8;
  return s;
}

}  // namespace

TEST_CASE("auc worked examples") {
  const std::vector<int> y{1, 0, 1};
  CHECK(auc(std::vector<double>{0.9, 0.8, 0.3}, y) == 0.5);
  CHECK(auc(std::vector<double>{0.9, 0.1, 0.8}, y) == 1.0);
  CHECK(auc(std::vector<double>{0.4, 0.4, 0.4}, y) == 0.5);
  CHECK(auc(std::vector<double>{0.1, 0.9, 0.2}, y) == 0.0);
  CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), DataError);
  CHECK_THROWS_AS(auc(std::vector<double>{0.1}, std::vector<int>{1, 0}), ShapeError);
}

TEST_CASE("rank-sum auc equals the pairwise oracle exactly") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Gen gen(seed);
    const std::size_t n = gen.size(2, 200);
    const std::vector<int> labels = gen.labels(n);
    std::vector<double> scores(n);
    // Coarse grid values force many ties.
    for (double& s : scores) s = gen.coin() ? std::round(gen.uniform(0, 8)) / 8.0 : gen.uniform(0, 1);
    CHECK(auc(scores, labels) == oracle::pairwise_auc(scores, labels));
  }
}

TEST_CASE("auc is invariant under strictly monotone transforms") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Gen gen(seed);
    const std::size_t n = gen.size(2, 150);
    const std::vector<int> labels = gen.labels(n);
    std::vector<double> scores(n), expd(n), affine(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = std::round(gen.uniform(-3, 3) * 4) / 4;
      expd[i] = std::exp(scores[i]);
      affine[i] = 2.5 * scores[i] - 7.0;
    }
    const double base = auc(scores, labels);
    CHECK(auc(expd, labels) == base);
    CHECK(auc(affine, labels) == base);
  }
}

TEST_CASE("accuracy and f1") {
  const std::vector<int> y{1, 1, 1, 0, 0};
  const AccuracyF1 r = accuracy_f1(std::vector<double>{0.9, 0.8, 0.1, 0.7, 0.2}, y);
  // TP 2, FP 1, FN 1.
  CHECK(std::abs(r.f1 - 2.0 / 3.0) < 1e-15);
  CHECK(r.acc == 0.6);
  CHECK_FALSE(r.no_predicted_positive);

  const AccuracyF1 perfect = accuracy_f1(std::vector<double>{0.9, 0.6, 0.5, 0.4, 0.0}, y);
  CHECK(perfect.acc == 1.0);
  CHECK(perfect.f1 == 1.0);
  const AccuracyF1 inverted = accuracy_f1(std::vector<double>{0.1, 0.2, 0.3, 0.9, 0.8}, y);
  CHECK(inverted.acc == 0.0);

  const AccuracyF1 none = accuracy_f1(std::vector<double>{0.1, 0.1, 0.1, 0.1, 0.1}, y);
  CHECK(none.no_predicted_positive);
  CHECK(none.f1 == 0.0);
  CHECK(none.acc == 0.4);
}

TEST_CASE("diagnostics agree with the loss functions on a single batch") {
  const Small s = small();
  DsrsdModel model(s.model, 3);
  const auto& test = s.data.test;
  const DiagnosticsReport d = diagnostics(model, test);
  CHECK(d.has_streams);
  CHECK(d.samples == test.size());

  GraphScope no_grad(nullptr);
  const auto out = model.forward(test.features_a, test.features_b, ForwardMode::eval());
  const double expected = decorrelation_loss(cross_covariance(out.a.aligned, out.b.aligned)).item();
  CHECK(std::abs(d.offdiag_energy - expected) < 1e-10);
  const double orth = orthogonality_loss(out.a.shared, out.a.priv, out.b.shared, out.b.priv).item();
  CHECK(std::abs(d.orth_residual - orth) < 1e-10);
  CHECK(d.gate_entropy <= std::log(2.0) + 1e-15);
  CHECK(d.gate_entropy >= 0.0);
}

TEST_CASE("diagnostics with a zeroed private head report no orthogonality residual") {
  const Small s = small();
  DsrsdModel model(s.model, 4);
  for (Modality m : {Modality::kA, Modality::kB})
    for (auto& layer : model.heads(m).private_head.layers) {
      layer.weight.assign(Matrix(layer.weight.rows(), layer.weight.cols()));
      layer.bias.assign(Matrix(1, layer.bias.cols()));
    }
  CHECK(diagnostics(model, s.data.test).orth_residual == 0.0);
}

TEST_CASE("diagnostics gate entropy bound holds for random gates") {
  const Small s = small();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    DsrsdModel model(s.model, seed);
    Gen gen(seed);
    model.gate().weight_a.assign(gen.matrix(1, 4, -5, 5));
    model.gate().weight_b.assign(gen.matrix(1, 4, -5, 5));
    const auto d = diagnostics(model, s.data.train, 64);
    CHECK(d.gate_entropy <= std::log(2.0) + 1e-15);
  }
  ModelConfig backbone = s.model;
  backbone.variant = Variant::kBackbone;
  const auto d = diagnostics(DsrsdModel(backbone, 0), s.data.test);
  CHECK_FALSE(d.has_streams);
  CHECK(d.offdiag_energy == 0.0);
}

TEST_CASE("training with the decorrelation weight lowers off-diagonal energy") {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Small s = small(seed, 400);
    TrainConfig c;
    c.batch_size = 64;
    c.max_epochs = 15;
    c.base_lr = 3e-3;
    c.seed = seed;
    c.weights.dec = 0.5;
    DsrsdModel trained(s.model, seed);
    fit(trained, s.data.train, s.data.val, c);
    const DsrsdModel untrained(s.model, seed);
    wins += diagnostics(trained, s.data.test).offdiag_energy < diagnostics(untrained, s.data.test).offdiag_energy;
  }
  CHECK(wins >= 4);
}

TEST_CASE("sweep at p = 0 equals clean metrics and is reproducible") {
  const Small s = small();
  DsrsdModel model(s.model, 1);
  const std::vector<double> grid{0.0, 0.5, 1.0};
  const std::vector<Modality> mods{Modality::kA, Modality::kB};
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  const SweepResult r = dropout_sweep(model, s.data.test, grid, mods, seeds);
  const MetricSet clean = evaluate(model, s.data.test);
  CHECK(r.clean.auc == clean.auc);
  CHECK(r.rows.size() == 2 * 3 * 3);
  CHECK(r.cells.size() == 2 * 3);
  for (const auto& cell : r.cells) {
    CHECK(std::isfinite(cell.mean.auc));
    CHECK(std::isfinite(cell.mean.f1));
    if (cell.p == 0.0) {
      CHECK(cell.mean.auc == clean.auc);
      CHECK(cell.degradation.auc == 0.0);
      CHECK(cell.stddev.auc == 0.0);
    }
  }
  const SweepResult again = dropout_sweep(model, s.data.test, grid, mods, seeds);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    CHECK(r.rows[i].metrics.auc == again.rows[i].metrics.auc);
    CHECK(r.rows[i].metrics.f1 == again.rows[i].metrics.f1);
  }

  const fs::path dir = fs::temp_directory_path() / "dsrsd_test_eval_sweep";
  fs::create_directories(dir);
  write_sweep_csv(dir / "sweep.csv", r);
  const auto lines = read_lines(dir / "sweep.csv");
  CHECK(lines.front() == "modality,p,seed,auc,acc,f1");
  CHECK(lines.size() == 1 + 1 + r.rows.size() + 3 * r.cells.size());

  CHECK_THROWS_AS(dropout_sweep(model, s.data.test, std::vector<double>{}, mods, seeds), ConfigError);
  CHECK_THROWS_AS(dropout_sweep(model, s.data.test, std::vector<double>{1.5}, mods, seeds), ConfigError);
}

TEST_CASE("a model that relies on one view stays above chance when the other is fully missing") {
  const Small s = small(2, 600);
  DsrsdModel model(s.model, 2);
  TrainConfig c;
  c.batch_size = 64;
  c.max_epochs = 20;
  c.base_lr = 3e-3;
  c.seed = 2;
  fit(model, s.data.train, s.data.val, c);
  const std::vector<double> grid{1.0};
  const std::vector<Modality> mods{Modality::kB};
  const std::vector<std::uint64_t> seeds{0};
  const SweepResult r = dropout_sweep(model, s.data.test, grid, mods, seeds);
  CHECK(r.cells[0].mean.auc > 0.6);
}

TEST_CASE("ablation variants and their loss weights") {
  const ModelConfig base;
  const LossWeights w;
  const auto [bm, bw] = ablation_variant_config(AblationVariant::kBackbone, base, w);
  CHECK(bm.variant == Variant::kBackbone);
  CHECK(bw == LossWeights{0, 0, 0, 0, 1});
  const auto [dm, dw] = ablation_variant_config(AblationVariant::kWithoutDecorrelation, base, w);
  CHECK(dm.variant == Variant::kFull);
  CHECK(dw == LossWeights{1, 0.5, 0, 0.05, 1});
  CHECK(ablation_variant_config(AblationVariant::kWithoutOrthogonality, base, w).second == LossWeights{1, 0.5, 0.05, 0, 1});
  CHECK(ablation_variant_config(AblationVariant::kFull, base, w).second == w);
  CHECK(ablation_variant_name(AblationVariant::kWithoutDecorrelation) == "wo_dec");
}

TEST_CASE("ablation run covers four variants on identical splits") {
  SyntheticSpec spec;
  spec.n = 200;
  spec.dim_a = 8;
  spec.dim_b = 8;
  const auto data = generate_synthetic(spec, 0);
  AblationSetup setup;
  setup.model.latent_dim = 4;
  setup.model.encoder_hidden = 8;
  setup.model.head_hidden = 8;
  setup.train.max_epochs = 2;
  setup.train.batch_size = 64;
  setup.train.base_lr = 3e-3;
  setup.seeds = {0, 1, 2};
  setup.probe = DropoutProbe{Modality::kB, 0.5, {0, 1}};
  setup.threads = 2;
  const AblationResult r = ablation_run(setup, data);
  CHECK(r.runs.size() == 12);
  CHECK(r.summaries.size() == 4);
  for (AblationVariant v : kAblationVariants) {
    CHECK(r.summary(v).variant == v);
    for (std::uint64_t seed : setup.seeds) {
      const AblationRun& run = r.run(v, seed);
      CHECK(run.weights == ablation_variant_config(v, setup.model, setup.train.weights).second);
      CHECK(run.probe.has_value());
      CHECK(run.epochs_run == 2);
    }
  }
  CHECK(r.run(AblationVariant::kBackbone, 0).parameter_count < r.run(AblationVariant::kFull, 0).parameter_count);

  // Serial execution gives the same numbers.
  AblationSetup serial = setup;
  serial.threads = 1;
  const AblationResult r1 = ablation_run(serial, data);
  for (std::size_t i = 0; i < r.runs.size(); ++i) CHECK(r.runs[i].test.auc == r1.runs[i].test.auc);

  const fs::path dir = fs::temp_directory_path() / "dsrsd_test_eval_ablation";
  fs::create_directories(dir);
  write_ablation_csv(dir / "ablation.csv", r);
  const auto lines = read_lines(dir / "ablation.csv");
  CHECK(lines.size() == 1 + 12 + 8);
  const auto header = cells(lines.front());
  CHECK(header[0] == "variant");
  CHECK(std::find(header.begin(), header.end(), "lambda_dec") != header.end());
  CHECK(cells(lines[1])[0] == "backbone");

  setup.seeds = {0, 1};
  CHECK_THROWS_AS(ablation_run(setup, data), ConfigError);
}

TEST_CASE("embedding export") {
  const fs::path dir = fs::temp_directory_path() / "dsrsd_test_eval_export";
  fs::create_directories(dir);
  SyntheticSpec spec;
  spec.n = 3;
  spec.dim_a = 8;
  spec.dim_b = 8;
  const auto data = generate_synthetic(spec, 0);
  ModelConfig mc;
  mc.input_dim_a = 8;
  mc.input_dim_b = 8;
  mc.latent_dim = 2;
  mc.encoder_hidden = 4;
  mc.head_hidden = 4;
  const DsrsdModel model(mc, 0);

  export_embeddings(model, data, dir / "u.csv");
  const auto lines = read_lines(dir / "u.csv");
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "sample_id,label,u_0,u_1");
  for (std::size_t i = 1; i < 4; ++i) CHECK(cells(lines[i]).size() == 4);

  GraphScope no_grad(nullptr);
  const auto out = model.forward(data.features_a, data.features_b, ForwardMode::eval());
  for (std::size_t i = 0; i < 3; ++i) {
    const auto row = cells(lines[i + 1]);
    CHECK(row[0] == std::to_string(i));
    CHECK(std::stoi(row[1]) == data.labels[i]);
    for (std::size_t j = 0; j < 2; ++j) CHECK(std::strtod(row[2 + j].c_str(), nullptr) == out.fused.value()(i, j));
  }

  export_embeddings(model, data, dir / "u2.csv");
  CHECK(read_lines(dir / "u2.csv") == lines);

  export_embeddings(model, data, dir / "all.csv", ExportOptions{true, true, true});
  const auto all = read_lines(dir / "all.csv");
  CHECK(cells(all[0]).size() == 2 + 2 + 3 * 2 * 2);
  CHECK(all[0].find("s_a_0") != std::string::npos);
  CHECK(all[0].find("h_b_1") != std::string::npos);

  ModelConfig bb = mc;
  bb.variant = Variant::kBackbone;
  CHECK_THROWS_AS(export_embeddings(DsrsdModel(bb, 0), data, dir / "bb.csv"), ConfigError);
  CHECK_THROWS_AS(export_embeddings(model, data, dir / "u.csv" / "x.csv"), IoError);
}
