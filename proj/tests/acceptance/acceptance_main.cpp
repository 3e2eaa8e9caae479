// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "dsrsd/commands.hpp"
#include "dsrsd/error.hpp"
#include "dsrsd/eval.hpp"
#include "dsrsd/gradcheck_suite.hpp"
#include "dsrsd/log.hpp"
#include "dsrsd/losses.hpp"
#include "dsrsd/trainer.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace dsrsd;
using testgen::Gen;
using testgen::Grid;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (failures_++ < 3) detail_ << " [failed: " << what << "]";
    }
  }
  void note(const std::string& text) { detail_ << ' ' << text; }
  Outcome outcome() const { return {pass_, detail_.str()}; }

 private:
  bool pass_ = true;
  int failures_ = 0;
  std::ostringstream detail_;
};

std::string num(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Tensor c(const Grid& g) { return Tensor::constant(testgen::to_matrix(g)); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// --- shared ablation study (criteria 3-6) ---------------------------------------

constexpr std::uint64_t kDatasetSeed = 0;

AblationSetup acceptance_setup() {
  AblationSetup setup;
  setup.model.latent_dim = 16;
  setup.model.encoder_hidden = 32;
  setup.model.head_hidden = 32;
  setup.train.base_lr = 1e-3;
  setup.train.max_epochs = 60;
  setup.train.objective.tau = 0.1;
  setup.seeds = {0, 1, 2, 3, 4};
  setup.probe = DropoutProbe{Modality::kB, 0.5, {0, 1, 2, 3, 4}};
  return setup;
}

const AblationResult& ablation() {
  static const AblationResult result = [] {
    const auto t0 = std::chrono::steady_clock::now();
    const MultimodalDataset data = generate_synthetic(SyntheticSpec{}, kDatasetSeed);
    AblationResult r = ablation_run(acceptance_setup(), data);
    std::cout << "  (ablation study: 4 variants x 5 seeds in " << num(seconds_since(t0), 1) << " s)\n";
    return r;
  }();
  return result;
}

// --- criteria --------------------------------------------------------------------

Outcome gradient_correctness() {
  Checker ck;
  const auto t0 = std::chrono::steady_clock::now();
  GradCheckSuiteOptions options;  // B=8, d=6, default weights, eps 1e-5, tol 1e-4
  const auto results = run_gradcheck_suite(options);
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& r : results) {
    ck.expect(r.passed && r.worst.max_rel_error < 1e-4, r.name + " rel " + sci(r.worst.max_rel_error));
    if (r.worst.max_rel_error >= worst) worst = r.worst.max_rel_error, worst_name = r.name;
  }
  const bool has_composite = std::any_of(results.begin(), results.end(), [](const auto& r) { return r.name == "total_loss_full"; });
  ck.expect(has_composite, "composite objective case missing");
  ck.expect(elapsed < 60.0, "runtime " + num(elapsed, 1) + " s");
  ck.note(std::to_string(results.size()) + " cases, worst " + worst_name + " " + sci(worst) + ", " + num(elapsed, 2) + " s");
  return ck.outcome();
}

Outcome loss_oracles() {
  Checker ck;
  double worst = 0.0;
  auto compare = [&](double got, double want, const std::string& what) {
    const double err = std::abs(got - want);
    worst = std::max(worst, err);
    ck.expect(err <= 1e-10, what + " err " + sci(err));
  };
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Gen gen(0xACCE55 + seed);
    const std::size_t b = gen.size(2, 12), d = gen.size(1, 8), classes = gen.size(2, 4);
    const Grid ha = gen.grid(b, d), hb = gen.grid(b, d), sa = gen.grid(b, d), pa = gen.grid(b, d), sb = gen.grid(b, d),
               pb = gen.grid(b, d), logits = gen.grid(b, classes, -4, 4);
    std::vector<int> labels(b);
    for (int& y : labels) y = static_cast<int>(gen.index(classes));
    const double tau = gen.uniform(0.05, 1.0), eps = gen.uniform(0.0, 0.2);
    compare(contrastive_loss(c(ha), c(hb), tau).item(), oracle::infonce(ha, hb, tau), "contrastive");
    compare(align_loss(c(ha), c(hb)).item(), oracle::align(ha, hb), "align");
    compare(decorrelation_loss(cross_covariance(c(ha), c(hb))).item(),
            oracle::offdiag_energy(oracle::cross_covariance(ha, hb)), "decorrelation");
    compare(orthogonality_loss(c(sa), c(pa), c(sb), c(pb)).item(), oracle::orthogonality(sa, pa, sb, pb), "orthogonality");
    compare(task_loss(c(logits), labels, eps).item(), oracle::smoothed_cross_entropy(logits, labels, eps), "task");
  }
  const Grid e{{1, 0}, {0, 1}};
  compare(contrastive_loss(c(e), c(e), 1.0).item(), std::log(1.0 + std::exp(-1.0)), "ln(1+e^-1)");
  const Tensor cov = cross_covariance(c(Grid{{1, 0}, {-1, 0}}), c(Grid{{0, 1}, {0, -1}}));
  ck.expect(cov.value() == Matrix::from_rows({{0, 2}, {0, 0}}), "C=[[0,2],[0,0]]");
  compare(decorrelation_loss(cov).item(), 4.0, "decorrelation 4.0");
  compare(total_loss(LossComponents{1, 1, 1, 1, 1}, LossWeights{}).total, 2.6, "total 2.6");
  ck.note("5 losses x 50 instances, worst abs err " + sci(worst));
  return ck.outcome();
}

Outcome regularizer_efficacy(AblationVariant twin, bool decorrelation) {
  Checker ck;
  const AblationResult& r = ablation();
  int wins = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed : acceptance_setup().seeds) {
    const auto& full = r.run(AblationVariant::kFull, seed).diagnostics;
    const auto& other = r.run(twin, seed).diagnostics;
    const double a = decorrelation ? full.offdiag_energy : full.orth_residual;
    const double b = decorrelation ? other.offdiag_energy : other.orth_residual;
    wins += a < b;
    per_seed << ' ' << num(a) << "<" << num(b);
  }
  ck.expect(wins >= 4, std::to_string(wins) + "/5 seeds");
  ck.note(std::string(decorrelation ? "offdiag_energy" : "orth_residual") + " full<twin in " + std::to_string(wins) +
          "/5:" + per_seed.str());
  return ck.outcome();
}

Outcome ablation_direction() {
  Checker ck;
  const AblationResult& r = ablation();
  const double full = r.summary(AblationVariant::kFull).mean.auc;
  const double backbone = r.summary(AblationVariant::kBackbone).mean.auc;
  ck.expect(full >= backbone, "full " + num(full) + " < backbone " + num(backbone));
  ck.note("mean test AUC full " + num(full) + " vs backbone " + num(backbone) + " (wo_orth " +
          num(r.summary(AblationVariant::kWithoutOrthogonality).mean.auc) + ", wo_dec " +
          num(r.summary(AblationVariant::kWithoutDecorrelation).mean.auc) + ")");
  return ck.outcome();
}

Outcome dropout_direction() {
  Checker ck;
  const AblationResult& r = ablation();
  const double full = r.summary(AblationVariant::kFull).probe_auc_drop_mean;
  const double backbone = r.summary(AblationVariant::kBackbone).probe_auc_drop_mean;
  ck.expect(full <= backbone, "full drop " + num(full) + " > backbone drop " + num(backbone));
  ck.note("mean AUC drop at p=0.5 on B: full " + num(full) + " vs backbone " + num(backbone));
  return ck.outcome();
}

Outcome trainer_mechanics() {
  Checker ck;
  ck.expect(cosine_lr(50, 1000, 50, 1e-4, 0.0) == 1e-4, "lr at warm-up end");
  ck.expect(cosine_lr(1000, 1000, 50, 1e-4, 1e-6) == 1e-6, "lr at final step");
  ck.expect(cosine_lr(0, 1000, 50, 1e-4, 0.0) == 0.0, "lr at step 0");

  TrainConfig ramp;
  ck.expect(lambda_schedule(ramp.ramp_epochs, ramp).dec == 0.05 && lambda_schedule(ramp.ramp_epochs, ramp).orth == 0.05,
            "ramp reaches (0.05, 0.05)");
  ck.expect(lambda_schedule(ramp.ramp_epochs - 1, ramp).dec < 0.05, "ramp still rising before ramp_epochs");

  SyntheticSpec spec;
  spec.n = 600;
  const DataSplit d = split(generate_synthetic(spec, 1), {0.7, 0.1, 0.2}, 1);
  ModelConfig mc;
  mc.input_dim_a = spec.dim_a;
  mc.input_dim_b = spec.dim_b;
  mc.latent_dim = 8;
  mc.encoder_hidden = 16;
  mc.head_hidden = 16;
  double max_post = 0.0, max_pre = 0.0;
  std::size_t epochs = 0;
  for (double lr : {1e-3, 3e-2}) {
    TrainConfig tc;
    tc.batch_size = 64;
    tc.max_epochs = 12;
    tc.patience = 4;
    tc.base_lr = lr;
    DsrsdModel model(mc, 7);
    const FitResult fr = fit(model, d.train, d.val, tc);
    double best = -1.0;
    for (const auto& rec : fr.records) {
      ck.expect(rec.max_post_clip_norm <= 5.0 + 1e-9, "post-clip " + num(rec.max_post_clip_norm, 6));
      max_post = std::max(max_post, rec.max_post_clip_norm);
      max_pre = std::max(max_pre, rec.max_pre_clip_norm);
      best = std::max(best, rec.val.auc);
    }
    epochs += fr.records.size();
    ck.expect(fr.best_val_auc == best, "best AUC bookkeeping");
    ck.expect(evaluate(model, d.val).auc == best, "restored model does not reproduce the best validation AUC");
  }
  ck.note("lr endpoints exact; ramp exact at epoch " + std::to_string(ramp.ramp_epochs) + "; " + std::to_string(epochs) +
          " epochs, max pre-clip " + num(max_pre, 3) + ", max post-clip " + num(max_post, 6) +
          "; restored model matches best val AUC");
  return ck.outcome();
}

Outcome metric_correctness() {
  Checker ck;
  int exact = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Gen gen(0xA0C + seed);
    const std::size_t n = gen.size(2, 200);
    const std::vector<int> labels = gen.labels(n);
    std::vector<double> scores(n), expd(n), affine(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = gen.coin() ? std::round(gen.uniform(0, 10)) / 10 : gen.uniform(0, 1);
      expd[i] = std::exp(3 * scores[i]);
      affine[i] = -7 + 4 * scores[i];
    }
    const double a = auc(scores, labels);
    exact += a == oracle::pairwise_auc(scores, labels);
    ck.expect(auc(expd, labels) == a && auc(affine, labels) == a, "monotone invariance, seed " + std::to_string(seed));
  }
  ck.expect(exact == 100, std::to_string(exact) + "/100 exact");
  ck.note("rank-sum == pairwise oracle on " + std::to_string(exact) + "/100 instances; exp/affine invariant");
  return ck.outcome();
}

Outcome determinism() {
  Checker ck;
  const fs::path root = fs::temp_directory_path() / "dsrsd_acceptance_determinism";
  fs::remove_all(root);
  auto train = [&](const std::string& name) {
    std::ostringstream out, err;
    const int code = run_cli({"train", "--output_dir", (root / name).string(), "--n", "800", "--latent-dim", "8",
                              "--encoder-hidden", "16", "--head-hidden", "16", "--max-epochs", "4", "--lr", "0.001",
                              "--seed", "3"},
                             out, err);
    ck.expect(code == 0, "train exit " + std::to_string(code) + " " + err.str());
  };
  train("first");
  train("second");
  for (const char* f : {"metrics.json", "checkpoint.bin", "epochs.jsonl"}) {
    const std::string a = slurp(root / "first" / f), b = slurp(root / "second" / f);
    ck.expect(!a.empty() && a == b, std::string(f) + " differs");
  }
  ck.note("two train runs: metrics.json, checkpoint.bin (" + std::to_string(fs::file_size(root / "first" / "checkpoint.bin")) +
          " bytes) and epochs.jsonl byte-identical");
  return ck.outcome();
}

Outcome degenerate_handling() {
  Checker ck;
  SyntheticSpec spec;
  spec.n = 300;
  const MultimodalDataset data = generate_synthetic(spec, 2);
  ModelConfig mc;
  mc.input_dim_a = spec.dim_a;
  mc.input_dim_b = spec.dim_b;
  mc.latent_dim = 8;
  mc.encoder_hidden = 16;
  mc.head_hidden = 16;
  DsrsdModel model(mc, 0);

  // One-row batch through a real backward pass.
  {
    const std::vector<std::size_t> first{0};
    const MultimodalDataset one = data.subset(first);
    Graph g;
    GraphScope scope(g);
    Rng rng(1);
    const auto out = model.forward(one.features_a, one.features_b, ForwardMode{true, 0.0, &rng});
    const Objective obj = compute_objective(out, one.labels, LossWeights{}, ObjectiveOptions{});
    g.backward(obj.total);
    ck.expect(obj.report.dec_skipped, "B=1 did not skip decorrelation");
    ck.expect(std::isfinite(obj.report.total), "B=1 total not finite");
  }
  // A training set whose size leaves a final batch of one row.
  {
    const DataSplit d = split(data, {0.7, 0.1, 0.2}, 0);
    TrainConfig tc;
    tc.batch_size = d.train.size() - 1;
    tc.max_epochs = 2;
    DsrsdModel m(mc, 1);
    const FitResult fr = fit(m, d.train, d.val, tc);
    ck.expect(fr.records.size() == 2 && fr.records.back().skipped_steps == 0, "fit with a trailing one-row batch");
  }
  // Full modality dropout at evaluation time.
  std::string sweep_note;
  {
    const std::vector<double> grid{1.0};
    const std::vector<Modality> mods{Modality::kA, Modality::kB};
    const std::vector<std::uint64_t> seeds{0};
    const SweepResult r = dropout_sweep(model, data, grid, mods, seeds);
    for (const auto& cell : r.cells) {
      ck.expect(std::isfinite(cell.mean.auc) && std::isfinite(cell.mean.acc) && std::isfinite(cell.mean.f1),
                "p=1 produced a non-finite metric");
      sweep_note += " " + std::string(modality_name(cell.modality)) + ":" + num(cell.mean.auc);
    }
  }
  // Single-class validation rejected before any update.
  {
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data.labels[i] == 1) pos.push_back(i);
    const MultimodalDataset val = data.subset(pos);
    DsrsdModel m(mc, 2);
    const auto before = m.snapshot();
    bool rejected = false;
    try {
      fit(m, data, val, TrainConfig{});
    } catch (const ConfigError&) {
      rejected = true;
    }
    ck.expect(rejected, "single-class validation accepted");
    ck.expect(m.snapshot() == before, "parameters changed before rejection");
  }
  ck.note("B=1 skips decorrelation; p=1 AUC" + sweep_note + "; single-class validation rejected");
  return ck.outcome();
}

}  // namespace

int main() {
  set_warnings_enabled(false);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 gradient correctness", gradient_correctness},
      {"2 loss oracles", loss_oracles},
      {"3 decorrelation efficacy", [] { return regularizer_efficacy(AblationVariant::kWithoutDecorrelation, true); }},
      {"4 orthogonality efficacy", [] { return regularizer_efficacy(AblationVariant::kWithoutOrthogonality, false); }},
      {"5 ablation direction", ablation_direction},
      {"6 dropout robustness direction", dropout_direction},
      {"7 trainer mechanics", trainer_mechanics},
      {"8 metric correctness", metric_correctness},
      {"9 determinism", determinism},
      {"10 degenerate handling", degenerate_handling},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string(" [exception: ") + e.what() + "]"};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << ":" << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
