#include "dsrsd/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "dsrsd/error.hpp"

namespace dsrsd {

namespace {

Json build_defaults() {
  const ModelConfig m;
  const TrainConfig t;
  const SyntheticSpec s;
  const EvalOptions e;
  const GradCheckSuiteOptions g;
  Json j;
  j["seed"] = std::uint64_t{0};
  j["output_dir"] = "out";
  j["checkpoint"] = "";
  j["model"] = {{"latent_dim", m.latent_dim},
                {"encoder_hidden", m.encoder_hidden},
                {"encoder_layers", m.encoder_layers},
                {"head_hidden", m.head_hidden},
                {"dropout", m.dropout},
                {"use_private_in_head", m.use_private_in_head},
                {"residual_shared", m.residual_shared},
                {"variant", std::string(variant_name(m.variant))}};
  j["loss"] = {{"lambda_con", t.weights.con},
               {"lambda_align", t.weights.align},
               {"lambda_dec", t.weights.dec},
               {"lambda_orth", t.weights.orth},
               {"lambda_task", t.weights.task},
               {"tau", t.objective.tau},
               {"symmetric_infonce", t.objective.symmetric_infonce},
               {"label_smoothing", t.objective.smoothing}};
  j["train"] = {{"batch_size", t.batch_size},
                {"max_epochs", t.max_epochs},
                {"patience", t.patience},
                {"warmup_fraction", t.warmup_fraction},
                {"lr", t.base_lr},
                {"min_lr", t.min_lr},
                {"weight_decay", t.adamw.weight_decay},
                {"beta1", t.adamw.beta1},
                {"beta2", t.adamw.beta2},
                {"adam_eps", t.adamw.eps},
                {"clip_norm", t.clip_norm},
                {"ramp_epochs", t.ramp_epochs},
                {"ramp_start_fraction", t.ramp_start_fraction}};
  j["data"] = {{"manifest", ""},
               {"split", Json::array({0.7, 0.1, 0.2})},
               {"synthetic",
                {{"n", s.n},
                 {"dim_a", s.dim_a},
                 {"dim_b", s.dim_b},
                 {"shared_dim", s.shared_dim},
                 {"private_dim", s.private_dim},
                 {"noise", s.noise},
                 {"label_direction", Json::array()}}}};
  Json modalities = Json::array();
  for (Modality mod : e.modalities) modalities.push_back(std::string(modality_name(mod)));
  j["eval"] = {{"p_grid", e.p_grid},
               {"modalities", modalities},
               {"seeds", e.seeds},
               {"ablation_seeds", e.ablation_seeds},
               {"probe_modality", std::string(modality_name(e.probe.modality))},
               {"probe_p", e.probe.p},
               {"threads", e.threads},
               {"export_shared", e.export_blocks.shared},
               {"export_private", e.export_blocks.priv},
               {"export_aligned", e.export_blocks.aligned},
               {"export_split", e.export_split}};
  j["gradcheck"] = {{"seeds", g.seeds}, {"eps", g.eps}, {"tol", g.tol}, {"batch", g.batch}, {"dim", g.dim}};
  return j;
}

std::string type_label(const Json& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number_unsigned()) return "non-negative integer";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  if (v.is_object()) return "object";
  return "null";
}

bool compatible(const Json& expected, const Json& given) {
  if (expected.is_boolean()) return given.is_boolean();
  if (expected.is_number_unsigned()) return given.is_number_unsigned();
  if (expected.is_number_integer()) return given.is_number_integer();
  if (expected.is_number()) return given.is_number();
  if (expected.is_string()) return given.is_string();
  if (expected.is_array()) return given.is_array();
  if (expected.is_object()) return given.is_object();
  return false;
}

void merge_into(Json& base, const Json& over, const std::string& prefix) {
  if (!over.is_object()) throw ConfigError("config: '" + (prefix.empty() ? "<root>" : prefix) + "' must be an object");
  for (const auto& [key, value] : over.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("config: unknown key '" + path + "'");
    Json& slot = base[key];
    if (slot.is_object()) {
      merge_into(slot, value, path);
      continue;
    }
    if (!compatible(slot, value)) {
      throw ConfigError("config: '" + path + "' expects " + type_label(slot) + ", got " + type_label(value));
    }
    slot = value;
  }
}

void collect_leaves(const Json& node, const std::string& prefix, std::vector<std::pair<std::string, const Json*>>& out) {
  for (const auto& [key, value] : node.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      collect_leaves(value, path, out);
    } else {
      out.emplace_back(path, &value);
    }
  }
}

std::string dashes_to_underscores(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '-', '_');
  return out;
}

std::string underscores_to_dashes(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

Json* find_path(Json& doc, std::string_view dotted) {
  Json* node = &doc;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key(dotted.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return node;
}

template <typename T>
T parse_number(std::string_view text, std::string_view key) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config: cannot parse '" + std::string(text) + "' for '" + std::string(key) + "'");
  }
  return value;
}

Json parse_scalar(const Json& like, std::string_view text, std::string_view key) {
  if (like.is_boolean()) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("config: '" + std::string(key) + "' expects true or false, got '" + std::string(text) + "'");
  }
  if (like.is_number_unsigned()) return parse_number<std::uint64_t>(text, key);
  if (like.is_number_integer()) return parse_number<std::int64_t>(text, key);
  if (like.is_number()) return parse_number<double>(text, key);
  return std::string(text);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::uint64_t> to_seeds(const Json& j, std::string_view key) {
  std::vector<std::uint64_t> out;
  for (const auto& v : j) {
    if (!v.is_number_unsigned()) throw ConfigError("config: '" + std::string(key) + "' must hold non-negative integers");
    out.push_back(v.get<std::uint64_t>());
  }
  return out;
}

std::vector<double> to_doubles(const Json& j, std::string_view key) {
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError("config: '" + std::string(key) + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

const Json& default_config_json() {
  static const Json defaults = build_defaults();
  return defaults;
}

Json merge_config(const Json& base, const Json& overrides) {
  Json merged = base;
  merge_into(merged, overrides, "");
  return merged;
}

std::vector<std::pair<std::string, std::string>> config_aliases() {
  std::vector<std::pair<std::string, const Json*>> leaves;
  collect_leaves(default_config_json(), "", leaves);
  std::map<std::string, std::vector<std::string>> by_leaf;
  for (const auto& [path, _] : leaves) {
    const auto dot = path.rfind('.');
    by_leaf[path.substr(dot == std::string::npos ? 0 : dot + 1)].push_back(path);
  }
  std::vector<std::pair<std::string, std::string>> aliases;
  for (const auto& [path, _] : leaves) {
    if (path.find('.') == std::string::npos) continue;
    const std::string leaf = path.substr(path.rfind('.') + 1);
    if (by_leaf[leaf].size() == 1) aliases.emplace_back(underscores_to_dashes(leaf), path);
  }
  return aliases;
}

std::string resolve_config_key(std::string_view flag) {
  while (!flag.empty() && flag.front() == '-') flag.remove_prefix(1);
  const std::string key = dashes_to_underscores(flag);
  Json probe = default_config_json();
  if (Json* node = find_path(probe, key); node != nullptr && !node->is_object()) return key;
  for (const auto& [alias, path] : config_aliases()) {
    if (dashes_to_underscores(alias) == key) return path;
  }
  throw ConfigError("config: unknown option '--" + std::string(flag) + "'");
}

void set_config_value(Json& doc, std::string_view key, std::string_view text) {
  const std::string path = resolve_config_key(key);
  Json* slot = find_path(doc, path);
  if (slot == nullptr) throw ConfigError("config: unknown key '" + path + "'");
  if (slot->is_array()) {
    const std::string body = trim(text);
    if (!body.empty() && body.front() == '[') {
      Json parsed;
      try {
        parsed = Json::parse(body);
      } catch (const Json::exception& e) {
        throw ConfigError("config: '" + path + "': " + e.what());
      }
      if (!parsed.is_array()) throw ConfigError("config: '" + path + "' expects an array");
      *slot = parsed;
      return;
    }
    const Json defaults_probe = [&] {
      Json d = default_config_json();
      const Json* n = find_path(d, path);
      return n != nullptr && !n->empty() ? Json((*n)[0]) : Json(0.0);
    }();
    Json items = Json::array();
    std::stringstream ss(body);
    for (std::string item; std::getline(ss, item, ',');) {
      const std::string t = trim(item);
      if (!t.empty()) items.push_back(parse_scalar(defaults_probe, t, path));
    }
    *slot = items;
    return;
  }
  *slot = parse_scalar(*slot, trim(text), path);
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
}

Json resolve_config(const ConfigSources& sources) {
  Json doc = default_config_json();
  if (sources.file) doc = merge_config(doc, read_json_file(*sources.file));
  if (sources.env_seed) set_config_value(doc, "seed", *sources.env_seed);
  for (const auto& [key, value] : sources.overrides) set_config_value(doc, key, value);
  run_config_from_json(doc);  // validates
  return doc;
}

RunConfig run_config_from_json(const Json& input) {
  const Json doc = merge_config(default_config_json(), input);
  RunConfig rc;
  try {
    rc.seed = doc["seed"].get<std::uint64_t>();
    rc.output_dir = doc["output_dir"].get<std::string>();
    rc.checkpoint = doc["checkpoint"].get<std::string>();

    const Json& m = doc["model"];
    rc.model.latent_dim = m["latent_dim"].get<std::size_t>();
    rc.model.encoder_hidden = m["encoder_hidden"].get<std::size_t>();
    rc.model.encoder_layers = m["encoder_layers"].get<std::size_t>();
    rc.model.head_hidden = m["head_hidden"].get<std::size_t>();
    rc.model.dropout = m["dropout"].get<double>();
    rc.model.use_private_in_head = m["use_private_in_head"].get<bool>();
    rc.model.residual_shared = m["residual_shared"].get<bool>();
    rc.model.variant = parse_variant(m["variant"].get<std::string>());

    const Json& l = doc["loss"];
    TrainConfig& t = rc.train;
    t.weights = {l["lambda_con"].get<double>(), l["lambda_align"].get<double>(), l["lambda_dec"].get<double>(),
                 l["lambda_orth"].get<double>(), l["lambda_task"].get<double>()};
    t.objective.tau = l["tau"].get<double>();
    t.objective.symmetric_infonce = l["symmetric_infonce"].get<bool>();
    t.objective.smoothing = l["label_smoothing"].get<double>();

    const Json& tr = doc["train"];
    t.batch_size = tr["batch_size"].get<std::size_t>();
    t.max_epochs = tr["max_epochs"].get<std::size_t>();
    t.patience = tr["patience"].get<std::size_t>();
    t.warmup_fraction = tr["warmup_fraction"].get<double>();
    t.base_lr = tr["lr"].get<double>();
    t.min_lr = tr["min_lr"].get<double>();
    t.adamw.weight_decay = tr["weight_decay"].get<double>();
    t.adamw.beta1 = tr["beta1"].get<double>();
    t.adamw.beta2 = tr["beta2"].get<double>();
    t.adamw.eps = tr["adam_eps"].get<double>();
    t.clip_norm = tr["clip_norm"].get<double>();
    t.ramp_epochs = tr["ramp_epochs"].get<std::size_t>();
    t.ramp_start_fraction = tr["ramp_start_fraction"].get<double>();
    t.seed = rc.seed;

    const Json& d = doc["data"];
    rc.manifest = d["manifest"].get<std::string>();
    const auto split = to_doubles(d["split"], "data.split");
    if (split.size() != 3) throw ConfigError("config: 'data.split' needs exactly three ratios");
    rc.split = {split[0], split[1], split[2]};
    const Json& s = d["synthetic"];
    rc.synthetic.n = s["n"].get<std::size_t>();
    rc.synthetic.dim_a = s["dim_a"].get<std::size_t>();
    rc.synthetic.dim_b = s["dim_b"].get<std::size_t>();
    rc.synthetic.shared_dim = s["shared_dim"].get<std::size_t>();
    rc.synthetic.private_dim = s["private_dim"].get<std::size_t>();
    rc.synthetic.noise = s["noise"].get<double>();
    rc.synthetic.label_direction = to_doubles(s["label_direction"], "data.synthetic.label_direction");

    const Json& e = doc["eval"];
    rc.eval.p_grid = to_doubles(e["p_grid"], "eval.p_grid");
    rc.eval.modalities.clear();
    for (const auto& v : e["modalities"]) {
      if (!v.is_string()) throw ConfigError("config: 'eval.modalities' must hold strings");
      rc.eval.modalities.push_back(parse_modality(v.get<std::string>()));
    }
    rc.eval.seeds = to_seeds(e["seeds"], "eval.seeds");
    rc.eval.ablation_seeds = to_seeds(e["ablation_seeds"], "eval.ablation_seeds");
    rc.eval.probe.modality = parse_modality(e["probe_modality"].get<std::string>());
    rc.eval.probe.p = e["probe_p"].get<double>();
    rc.eval.probe.seeds = rc.eval.seeds;
    rc.eval.threads = e["threads"].get<std::size_t>();
    rc.eval.export_blocks = {e["export_shared"].get<bool>(), e["export_private"].get<bool>(),
                             e["export_aligned"].get<bool>()};
    rc.eval.export_split = e["export_split"].get<std::string>();

    const Json& g = doc["gradcheck"];
    rc.gradcheck.seeds = g["seeds"].get<std::size_t>();
    rc.gradcheck.eps = g["eps"].get<double>();
    rc.gradcheck.tol = g["tol"].get<double>();
    rc.gradcheck.batch = g["batch"].get<std::size_t>();
    rc.gradcheck.dim = g["dim"].get<std::size_t>();
    rc.gradcheck.weights = t.weights;
    rc.gradcheck.objective = t.objective;
  } catch (const Json::exception& ex) {
    throw ConfigError(std::string("config: ") + ex.what());
  }

  if (rc.output_dir.empty()) throw ConfigError("config: 'output_dir' must not be empty");
  if (rc.eval.export_split != "test" && rc.eval.export_split != "all") {
    throw ConfigError("config: 'eval.export_split' must be \"test\" or \"all\"");
  }
  if (!(rc.eval.probe.p >= 0.0 && rc.eval.probe.p <= 1.0)) throw ConfigError("config: 'eval.probe_p' must lie in [0,1]");
  for (double p : rc.eval.p_grid) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("config: 'eval.p_grid' entries must lie in [0,1]");
  }
  if (rc.eval.threads == 0) throw ConfigError("config: 'eval.threads' must be >= 1");
  rc.train.validate();
  return rc;
}

std::string config_reference() {
  std::vector<std::pair<std::string, const Json*>> leaves;
  collect_leaves(default_config_json(), "", leaves);
  std::map<std::string, std::string> alias_of;
  for (const auto& [alias, path] : config_aliases()) alias_of[path] = alias;
  std::ostringstream out;
  out << "Config keys (set in the JSON file or as --key value; defaults shown):\n";
  for (const auto& [path, value] : leaves) {
    std::string flag = "--" + path;
    if (auto it = alias_of.find(path); it != alias_of.end()) flag += " | --" + it->second;
    out << "  " << flag;
    if (flag.size() < 44) out << std::string(44 - flag.size(), ' ');
    out << ' ' << value->dump() << '\n';
  }
  out << "Env DSRSD_SEED overrides 'seed' from the file; command-line flags override both.\n";
  return out.str();
}

std::uint64_t config_hash(const Json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace dsrsd
