#include "dsrsd/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "dsrsd/checkpoint.hpp"
#include "dsrsd/error.hpp"

namespace dsrsd {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

Json metrics_json(const MetricSet& m) { return Json{{"auc", m.auc}, {"acc", m.acc}, {"f1", m.f1}}; }

Json diagnostics_json(const DiagnosticsReport& d) {
  if (!d.has_streams) return Json(nullptr);
  return Json{{"offdiag_energy", d.offdiag_energy}, {"diag_energy", d.diag_energy},
              {"orth_residual", d.orth_residual},   {"gate_entropy", d.gate_entropy},
              {"h_norm_a", d.h_norm_a},             {"h_norm_b", d.h_norm_b},
              {"samples", d.samples}};
}

ModelConfig model_for(const RunConfig& rc, const MultimodalDataset& data) {
  ModelConfig mc = rc.model;
  mc.input_dim_a = data.features_a.cols();
  mc.input_dim_b = data.features_b.cols();
  mc.num_classes = static_cast<std::size_t>(data.num_classes);
  return mc;
}

// Evaluation commands score the data the checkpoint was trained on: its stored
// run config decides dataset, split and seed.
struct CheckpointContext {
  LoadedCheckpoint checkpoint;
  DataSplit split;
  MultimodalDataset full;
};

CheckpointContext open_checkpoint(const RunConfig& rc) {
  LoadedCheckpoint ck = load_checkpoint(rc.checkpoint_path());
  const RunConfig trained = run_config_from_json(ck.run_config);
  MultimodalDataset data = load_run_dataset(trained);
  if (data.features_a.cols() != ck.model.config().input_dim_a ||
      data.features_b.cols() != ck.model.config().input_dim_b) {
    throw DataError("checkpoint " + rc.checkpoint_path().string() + " does not match the dimensions of its dataset");
  }
  DataSplit parts = split(data, trained.split, trained.seed);
  return {std::move(ck), std::move(parts), std::move(data)};
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

MultimodalDataset load_run_dataset(const RunConfig& rc) {
  if (!rc.manifest.empty()) return load_manifest(rc.manifest);
  return generate_synthetic(rc.synthetic, rc.seed);
}

int cmd_gen_data(const Json& doc, std::ostream& out) {
  const RunConfig rc = run_config_from_json(doc);
  rc.synthetic.validate();
  const MultimodalDataset data = generate_synthetic(rc.synthetic, rc.seed);
  ensure_dir(rc.output_dir);
  write_feature_csv(rc.output_dir / "features_a.csv", data.features_a);
  write_feature_csv(rc.output_dir / "features_b.csv", data.features_b);
  write_label_csv(rc.output_dir / "labels.csv", data.labels);
  DatasetManifest manifest;
  manifest.features_a = "features_a.csv";
  manifest.features_b = "features_b.csv";
  manifest.labels = "labels.csv";
  manifest.dim_a = data.features_a.cols();
  manifest.dim_b = data.features_b.cols();
  manifest.num_classes = data.num_classes;
  write_manifest(rc.output_dir / "manifest.json", manifest);

  std::size_t positives = 0;
  for (int y : data.labels) positives += (y == 1);
  out << "N=" << data.size() << " positive_fraction="
      << fixed(static_cast<double>(positives) / static_cast<double>(data.size())) << " written to "
      << rc.output_dir.string() << '\n';
  return 0;
}

int cmd_train(const Json& doc, std::ostream& out) {
  const RunConfig rc = run_config_from_json(doc);
  const MultimodalDataset data = load_run_dataset(rc);
  data.validate(true);
  const DataSplit parts = split(data, rc.split, rc.seed);
  DsrsdModel model(model_for(rc, data), rc.seed);

  ensure_dir(rc.output_dir);
  write_text(rc.output_dir / "config.json", doc.dump(2) + "\n");
  std::ofstream log(rc.output_dir / "epochs.jsonl", std::ios::binary | std::ios::trunc);
  if (!log) throw IoError("cannot write " + (rc.output_dir / "epochs.jsonl").string());
  const FitResult fitted = fit(model, parts.train, parts.val, rc.train, &log);
  log.close();

  const MetricSet test = evaluate(model, parts.test);
  // Output locations are not part of the run's identity.
  Json stored = doc;
  stored.erase("output_dir");
  stored.erase("checkpoint");
  save_checkpoint(rc.checkpoint_path(), model, stored);

  Json metrics;
  metrics["best_epoch"] = fitted.best_epoch;
  metrics["best_val_auc"] = fitted.best_val_auc;
  metrics["epochs_run"] = fitted.records.size();
  metrics["test"] = metrics_json(test);
  metrics["diagnostics"] = diagnostics_json(diagnostics(model, parts.test));
  write_text(rc.output_dir / "metrics.json", metrics.dump(2) + "\n");

  Json cost;
  double total = 0.0;
  cost["epochs"] = Json::array();
  for (const auto& r : fitted.records) {
    cost["epochs"].push_back({{"epoch", r.epoch}, {"seconds", r.seconds}});
    total += r.seconds;
  }
  cost["total_seconds"] = total;
  cost["parameters"] = model.parameter_count();
  write_text(rc.output_dir / "cost.json", cost.dump(2) + "\n");

  out << "epochs=" << fitted.records.size() << " best_epoch=" << fitted.best_epoch
      << " val_auc=" << fixed(fitted.best_val_auc) << " test_auc=" << fixed(test.auc) << " test_acc=" << fixed(test.acc)
      << " test_f1=" << fixed(test.f1) << '\n';
  return 0;
}

int cmd_eval(const Json& doc, std::ostream& out) {
  const RunConfig rc = run_config_from_json(doc);
  const CheckpointContext ctx = open_checkpoint(rc);
  const DsrsdModel& model = ctx.checkpoint.model;
  Json report;
  report["val"] = metrics_json(evaluate(model, ctx.split.val));
  const MetricSet test = evaluate(model, ctx.split.test);
  report["test"] = metrics_json(test);
  report["diagnostics"] = diagnostics_json(diagnostics(model, ctx.split.test));
  ensure_dir(rc.output_dir);
  write_text(rc.output_dir / "eval.json", report.dump(2) + "\n");
  out << "test_auc=" << fixed(test.auc) << " test_acc=" << fixed(test.acc) << " test_f1=" << fixed(test.f1) << '\n';
  return 0;
}

int cmd_sweep(const Json& doc, std::ostream& out) {
  const RunConfig rc = run_config_from_json(doc);
  const CheckpointContext ctx = open_checkpoint(rc);
  const SweepResult sweep =
      dropout_sweep(ctx.checkpoint.model, ctx.split.test, rc.eval.p_grid, rc.eval.modalities, rc.eval.seeds);
  ensure_dir(rc.output_dir);
  write_sweep_csv(rc.output_dir / "sweep.csv", sweep);
  out << "clean auc=" << fixed(sweep.clean.auc) << '\n';
  for (const auto& cell : sweep.cells) {
    out << "modality=" << modality_name(cell.modality) << " p=" << fixed(cell.p, 2) << " auc=" << fixed(cell.mean.auc)
        << " +- " << fixed(cell.stddev.auc) << " degradation=" << fixed(cell.degradation.auc) << '\n';
  }
  return 0;
}

int cmd_ablate(const Json& doc, std::ostream& out) {
  const RunConfig rc = run_config_from_json(doc);
  const MultimodalDataset data = load_run_dataset(rc);
  AblationSetup setup;
  setup.model = rc.model;
  setup.train = rc.train;
  setup.split_ratios = rc.split;
  setup.seeds = rc.eval.ablation_seeds;
  setup.probe = rc.eval.probe;
  setup.threads = rc.eval.threads;
  const AblationResult result = ablation_run(setup, data);
  ensure_dir(rc.output_dir);
  write_ablation_csv(rc.output_dir / "ablation.csv", result);
  for (const auto& s : result.summaries) {
    out << std::left << std::setw(9) << ablation_variant_name(s.variant) << " auc=" << fixed(s.mean.auc) << " +- "
        << fixed(s.stddev.auc) << " acc=" << fixed(s.mean.acc) << " f1=" << fixed(s.mean.f1)
        << " probe_drop=" << fixed(s.probe_auc_drop_mean) << '\n';
  }
  return 0;
}

int cmd_export(const Json& doc, std::ostream& out) {
  const RunConfig rc = run_config_from_json(doc);
  const CheckpointContext ctx = open_checkpoint(rc);
  const MultimodalDataset& data = rc.eval.export_split == "all" ? ctx.full : ctx.split.test;
  ensure_dir(rc.output_dir);
  const fs::path path = rc.output_dir / "embeddings.csv";
  export_embeddings(ctx.checkpoint.model, data, path, rc.eval.export_blocks);
  out << "exported " << data.size() << " rows to " << path.string() << '\n';
  return 0;
}

int cmd_gradcheck(const Json& doc, std::ostream& out) {
  const RunConfig rc = run_config_from_json(doc);
  GradCheckSuiteOptions options = rc.gradcheck;
  options.base_seed = rc.seed;
  const auto results = run_gradcheck_suite(options);
  bool all_passed = true;
  Json report = Json::array();
  for (const auto& r : results) {
    all_passed = all_passed && r.passed;
    out << (r.passed ? "ok   " : "FAIL ") << std::left << std::setw(28) << r.name << " max_rel_error=" << std::scientific
        << std::setprecision(3) << r.worst.max_rel_error << std::defaultfloat << " seeds=" << r.seeds_run << '\n';
    report.push_back({{"name", r.name},
                      {"passed", r.passed},
                      {"max_rel_error", r.worst.max_rel_error},
                      {"max_abs_error", r.worst.max_abs_error},
                      {"seeds", r.seeds_run}});
  }
  ensure_dir(rc.output_dir);
  write_text(rc.output_dir / "gradcheck.json", report.dump(2) + "\n");
  out << (all_passed ? "grad-check passed" : "grad-check FAILED") << " (tol " << options.tol << ")\n";
  return all_passed ? 0 : exit_code(ErrorKind::kNumerical);
}

namespace {

struct CommandSpec {
  const char* name;
  const char* description;
  int (*run)(const Json&, std::ostream&);
};

constexpr CommandSpec kCommands[] = {
    {"gen-data", "Generate a synthetic two-modality dataset (CSV files and manifest)", cmd_gen_data},
    {"train", "Train a model; writes checkpoint, epoch log, metrics, config and cost files", cmd_train},
    {"eval", "Evaluate a checkpoint on its validation and test splits", cmd_eval},
    {"sweep", "Test-time modality-dropout sweep of a checkpoint", cmd_sweep},
    {"ablate", "Train the four ablation variants over several seeds", cmd_ablate},
    {"export-embeddings", "Write fused and optional per-stream embeddings of a checkpoint", cmd_export},
    {"grad-check", "Finite-difference check of every primitive and the full objective", cmd_gradcheck},
};

// Splits `--key value` and `--key=value` items left over by CLI11.
std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& item = extras[i];
    if (item.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + item + "'");
    const auto eq = item.find('=');
    if (eq != std::string::npos) {
      pairs.emplace_back(item.substr(2, eq - 2), item.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size()) throw ConfigError("option '" + item + "' needs a value");
      pairs.emplace_back(item.substr(2), extras[++i]);
    }
  }
  return pairs;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-stream residual semantic decorrelation network: training and evaluation tools", "dsrsd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dsrsd 1.0.0");

  std::string config_file;
  std::vector<CLI::App*> subs;
  for (const auto& spec : kCommands) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.description);
    sub->add_option("--config", config_file, "JSON run config; its keys overlay the defaults");
    sub->allow_extras();
    sub->footer(config_reference());
    subs.push_back(sub);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(ErrorKind::kConfig);
  }

  for (std::size_t k = 0; k < subs.size(); ++k) {
    if (!subs[k]->parsed()) continue;
    try {
      ConfigSources sources;
      if (!config_file.empty()) sources.file = config_file;
      if (const char* env = std::getenv("DSRSD_SEED"); env != nullptr && *env != '\0') sources.env_seed = env;
      sources.overrides = parse_overrides(subs[k]->remaining());
      const Json doc = resolve_config(sources);
      return kCommands[k].run(doc, out);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return exit_code(e.kind());
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return exit_code(ErrorKind::kConfig);
    }
  }
  return exit_code(ErrorKind::kUsage);
}

}  // namespace dsrsd
