#include "dsrsd/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "dsrsd/error.hpp"

namespace dsrsd {

namespace {

std::vector<std::size_t> range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> rows(end - begin);
  std::iota(rows.begin(), rows.end(), begin);
  return rows;
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Sample standard deviation; 0 for fewer than two values.
double stddev_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

struct MetricStats {
  MetricSet mean;
  MetricSet stddev;
};

MetricStats summarize(std::span<const MetricSet> sets) {
  std::vector<double> auc, acc, f1;
  for (const auto& s : sets) {
    auc.push_back(s.auc);
    acc.push_back(s.acc);
    f1.push_back(s.f1);
  }
  return {{mean_of(auc), mean_of(acc), mean_of(f1)}, {stddev_of(auc), stddev_of(acc), stddev_of(f1)}};
}

double mean_row_norm(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double sq = 0.0;
    for (double v : m.row(i)) sq += v * v;
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(m.rows());
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

void write_metrics(std::ostream& out, const MetricSet& m) {
  out << format_double(m.auc) << ',' << format_double(m.acc) << ',' << format_double(m.f1);
}

}  // namespace

// --- diagnostics -------------------------------------------------------------

DiagnosticsReport diagnostics(const DsrsdModel& model, const MultimodalDataset& data, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("diagnostics: batch size must be positive");
  DiagnosticsReport report;
  report.samples = data.size();
  if (model.config().variant == Variant::kBackbone || data.size() == 0) return report;
  report.has_streams = true;

  GraphScope no_grad(nullptr);
  double cov_weight = 0.0;
  double offdiag = 0.0, diag = 0.0, orth = 0.0, entropy = 0.0, norm_a = 0.0, norm_b = 0.0;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const auto rows = range(start, std::min(data.size(), start + batch_size));
    const MultimodalDataset batch = data.subset(rows);
    const auto out = model.forward(batch.features_a, batch.features_b, ForwardMode::eval());
    const auto n = static_cast<double>(rows.size());

    orth += n * orthogonality_loss(out.a.shared, out.a.priv, out.b.shared, out.b.priv).item();
    norm_a += n * mean_row_norm(out.a.aligned.value());
    norm_b += n * mean_row_norm(out.b.aligned.value());
    const Matrix& alpha = out.alpha.value();
    for (std::size_t i = 0; i < alpha.rows(); ++i) {
      for (double a : alpha.row(i)) {
        if (a > 0.0) entropy -= a * std::log(a);
      }
    }
    if (rows.size() >= 2) {
      const Matrix cov = cross_covariance(out.a.aligned, out.b.aligned).value();
      double off = 0.0, on = 0.0;
      for (std::size_t i = 0; i < cov.rows(); ++i) {
        for (std::size_t j = 0; j < cov.cols(); ++j) (i == j ? on : off) += cov(i, j) * cov(i, j);
      }
      offdiag += n * off;
      diag += n * on;
      cov_weight += n;
    }
  }
  const auto total = static_cast<double>(data.size());
  report.orth_residual = orth / total;
  report.gate_entropy = entropy / total;
  report.h_norm_a = norm_a / total;
  report.h_norm_b = norm_b / total;
  if (cov_weight > 0.0) {
    report.offdiag_energy = offdiag / cov_weight;
    report.diag_energy = diag / cov_weight;
  }
  return report;
}

// --- dropout sweep -------------------------------------------------------------

SweepResult dropout_sweep(const DsrsdModel& model, const MultimodalDataset& test, std::span<const double> p_grid,
                          std::span<const Modality> modalities, std::span<const std::uint64_t> seeds) {
  if (p_grid.empty()) throw ConfigError("dropout_sweep: p grid is empty");
  if (modalities.empty()) throw ConfigError("dropout_sweep: no modalities given");
  if (seeds.empty()) throw ConfigError("dropout_sweep: no seeds given");
  for (double p : p_grid) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("dropout_sweep: p must lie in [0,1], got " + std::to_string(p));
  }

  SweepResult result;
  result.clean = evaluate(model, test);
  for (Modality m : modalities) {
    for (double p : p_grid) {
      std::vector<MetricSet> per_seed;
      for (std::uint64_t seed : seeds) {
        const MetricSet metrics = p == 0.0 ? result.clean : evaluate(model, apply_modality_dropout(test, m, p, seed));
        result.rows.push_back({m, p, seed, metrics});
        per_seed.push_back(metrics);
      }
      const MetricStats stats = summarize(per_seed);
      SweepCell cell{m, p, stats.mean, stats.stddev, {}};
      cell.degradation = {result.clean.auc - stats.mean.auc, result.clean.acc - stats.mean.acc,
                          result.clean.f1 - stats.mean.f1};
      result.cells.push_back(cell);
    }
  }
  return result;
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep) {
  auto out = open_for_write(path);
  out << "modality,p,seed,auc,acc,f1\n";
  out << "none,0,clean,";
  write_metrics(out, sweep.clean);
  out << '\n';
  for (const auto& row : sweep.rows) {
    out << modality_name(row.modality) << ',' << format_double(row.p) << ',' << row.seed << ',';
    write_metrics(out, row.metrics);
    out << '\n';
  }
  for (const auto& cell : sweep.cells) {
    const auto prefix = std::string(modality_name(cell.modality)) + ',' + format_double(cell.p) + ',';
    out << prefix << "mean,";
    write_metrics(out, cell.mean);
    out << '\n' << prefix << "std,";
    write_metrics(out, cell.stddev);
    out << '\n' << prefix << "degradation,";
    write_metrics(out, cell.degradation);
    out << '\n';
  }
  finish_write(out, path);
}

// --- ablation --------------------------------------------------------------------

std::string_view ablation_variant_name(AblationVariant v) {
  switch (v) {
    case AblationVariant::kBackbone: return "backbone";
    case AblationVariant::kWithoutDecorrelation: return "wo_dec";
    case AblationVariant::kWithoutOrthogonality: return "wo_orth";
    case AblationVariant::kFull: return "full";
  }
  return "unknown";
}

std::pair<ModelConfig, LossWeights> ablation_variant_config(AblationVariant v, const ModelConfig& model,
                                                           const LossWeights& weights) {
  ModelConfig mc = model;
  LossWeights w = weights;
  mc.variant = Variant::kFull;
  switch (v) {
    case AblationVariant::kBackbone:
      mc.variant = Variant::kBackbone;
      w.con = w.align = w.dec = w.orth = 0.0;
      break;
    case AblationVariant::kWithoutDecorrelation: w.dec = 0.0; break;
    case AblationVariant::kWithoutOrthogonality: w.orth = 0.0; break;
    case AblationVariant::kFull: break;
  }
  return {mc, w};
}

const AblationRun& AblationResult::run(AblationVariant v, std::uint64_t seed) const {
  for (const auto& r : runs) {
    if (r.variant == v && r.seed == seed) return r;
  }
  throw UsageError("ablation result has no run for " + std::string(ablation_variant_name(v)) + " seed " +
                   std::to_string(seed));
}

const AblationSummary& AblationResult::summary(AblationVariant v) const {
  for (const auto& s : summaries) {
    if (s.variant == v) return s;
  }
  throw UsageError("ablation result has no summary for " + std::string(ablation_variant_name(v)));
}

namespace {

AblationRun run_one(const AblationSetup& setup, const MultimodalDataset& data, AblationVariant variant,
                    std::uint64_t seed) {
  const DataSplit parts = split(data, setup.split_ratios, seed);
  auto [model_config, weights] = ablation_variant_config(variant, setup.model, setup.train.weights);
  model_config.input_dim_a = data.features_a.cols();
  model_config.input_dim_b = data.features_b.cols();
  model_config.num_classes = static_cast<std::size_t>(data.num_classes);
  TrainConfig train = setup.train;
  train.weights = weights;
  train.seed = seed;

  DsrsdModel model(model_config, seed);
  const FitResult fitted = fit(model, parts.train, parts.val, train);

  AblationRun run;
  run.variant = variant;
  run.seed = seed;
  run.weights = weights;
  run.test = evaluate(model, parts.test);
  run.diagnostics = diagnostics(model, parts.test);
  run.epochs_run = fitted.records.size();
  run.best_epoch = fitted.best_epoch;
  run.parameter_count = model.parameter_count();
  double seconds = 0.0;
  for (const auto& r : fitted.records) seconds += r.seconds;
  run.seconds_per_epoch = fitted.records.empty() ? 0.0 : seconds / static_cast<double>(fitted.records.size());
  if (setup.probe) {
    std::vector<MetricSet> probed;
    for (std::uint64_t s : setup.probe->seeds) {
      probed.push_back(evaluate(model, apply_modality_dropout(parts.test, setup.probe->modality, setup.probe->p, s)));
    }
    run.probe = summarize(probed).mean;
  }
  return run;
}

}  // namespace

AblationResult ablation_run(const AblationSetup& setup, const MultimodalDataset& data) {
  if (setup.seeds.size() < 3) {
    throw ConfigError("ablation: need at least 3 seeds, got " + std::to_string(setup.seeds.size()));
  }
  if (setup.probe && setup.probe->seeds.empty()) throw ConfigError("ablation: dropout probe has no seeds");
  setup.train.validate();
  data.validate(true);

  const std::size_t total = kAblationVariants.size() * setup.seeds.size();
  AblationResult result;
  result.runs.resize(total);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      try {
        const AblationVariant v = kAblationVariants[job / setup.seeds.size()];
        result.runs[job] = run_one(setup, data, v, setup.seeds[job % setup.seeds.size()]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(setup.threads, 1, total);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (AblationVariant v : kAblationVariants) {
    std::vector<MetricSet> tests;
    std::vector<double> offdiag, orth, drop;
    for (const auto& r : result.runs) {
      if (r.variant != v) continue;
      tests.push_back(r.test);
      offdiag.push_back(r.diagnostics.offdiag_energy);
      orth.push_back(r.diagnostics.orth_residual);
      if (r.probe) drop.push_back(r.test.auc - r.probe->auc);
    }
    const MetricStats stats = summarize(tests);
    result.summaries.push_back({v, stats.mean, stats.stddev, mean_of(offdiag), mean_of(orth), mean_of(drop)});
  }
  return result;
}

void write_ablation_csv(const std::filesystem::path& path, const AblationResult& result) {
  auto out = open_for_write(path);
  out << "variant,seed,auc,acc,f1,lambda_con,lambda_align,lambda_dec,lambda_orth,lambda_task,"
         "offdiag_energy,orth_residual,gate_entropy,probe_auc,epochs,best_epoch,parameters\n";
  for (const auto& r : result.runs) {
    out << ablation_variant_name(r.variant) << ',' << r.seed << ',';
    write_metrics(out, r.test);
    for (double w : {r.weights.con, r.weights.align, r.weights.dec, r.weights.orth, r.weights.task}) {
      out << ',' << format_double(w);
    }
    if (r.diagnostics.has_streams) {
      out << ',' << format_double(r.diagnostics.offdiag_energy) << ',' << format_double(r.diagnostics.orth_residual)
          << ',' << format_double(r.diagnostics.gate_entropy);
    } else {
      out << ",,,";
    }
    out << ',' << (r.probe ? format_double(r.probe->auc) : std::string());
    out << ',' << r.epochs_run << ',' << r.best_epoch << ',' << r.parameter_count << '\n';
  }
  for (const auto& s : result.summaries) {
    out << ablation_variant_name(s.variant) << ",mean,";
    write_metrics(out, s.mean);
    out << ",,,,,,,,,,,,\n";
    out << ablation_variant_name(s.variant) << ",std,";
    write_metrics(out, s.stddev);
    out << ",,,,,,,,,,,,\n";
  }
  finish_write(out, path);
}

// --- embedding export ------------------------------------------------------------

void export_embeddings(const DsrsdModel& model, const MultimodalDataset& data, const std::filesystem::path& path,
                       const ExportOptions& options) {
  if (model.config().variant == Variant::kBackbone) {
    throw ConfigError("export_embeddings: the backbone variant has no fused representation");
  }
  const std::size_t d = model.config().latent_dim;
  auto out = open_for_write(path);

  out << "sample_id,label";
  auto header = [&](std::string_view prefix) {
    for (std::size_t j = 0; j < d; ++j) out << ',' << prefix << j;
  };
  header("u_");
  if (options.shared) { header("s_a_"); header("s_b_"); }
  if (options.priv) { header("p_a_"); header("p_b_"); }
  if (options.aligned) { header("h_a_"); header("h_b_"); }
  out << '\n';

  GraphScope no_grad(nullptr);
  constexpr std::size_t kBatch = 256;
  for (std::size_t start = 0; start < data.size(); start += kBatch) {
    const auto rows = range(start, std::min(data.size(), start + kBatch));
    const MultimodalDataset batch = data.subset(rows);
    const auto fwd = model.forward(batch.features_a, batch.features_b, ForwardMode::eval());
    std::vector<const Matrix*> blocks{&fwd.fused.value()};
    if (options.shared) { blocks.push_back(&fwd.a.shared.value()); blocks.push_back(&fwd.b.shared.value()); }
    if (options.priv) { blocks.push_back(&fwd.a.priv.value()); blocks.push_back(&fwd.b.priv.value()); }
    if (options.aligned) { blocks.push_back(&fwd.a.aligned.value()); blocks.push_back(&fwd.b.aligned.value()); }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out << rows[i] << ',' << batch.labels[i];
      for (const Matrix* block : blocks) {
        for (double v : block->row(i)) out << ',' << format_double(v);
      }
      out << '\n';
    }
  }
  finish_write(out, path);
}

}  // namespace dsrsd
