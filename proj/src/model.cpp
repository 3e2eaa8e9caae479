#include "dsrsd/model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "dsrsd/error.hpp"
#include "dsrsd/log.hpp"

namespace dsrsd {

Modality parse_modality(std::string_view name) {
  if (name == "A" || name == "a") return Modality::kA;
  if (name == "B" || name == "b") return Modality::kB;
  throw ConfigError("unknown modality '" + std::string(name) + "' (expected A or B)");
}

std::string_view variant_name(Variant v) { return v == Variant::kFull ? "full" : "backbone"; }

Variant parse_variant(std::string_view name) {
  if (name == "full") return Variant::kFull;
  if (name == "backbone") return Variant::kBackbone;
  throw ConfigError("unknown model variant '" + std::string(name) + "' (expected full or backbone)");
}

void ModelConfig::validate() const {
  if (input_dim_a == 0 || input_dim_b == 0) throw ConfigError("model: input dims must be positive");
  if (latent_dim == 0) throw ConfigError("model: latent_dim must be positive");
  if (encoder_layers == 0) throw ConfigError("model: encoder_layers must be >= 1");
  if (encoder_layers > 1 && encoder_hidden == 0) throw ConfigError("model: encoder_hidden must be positive");
  if (head_hidden == 0) throw ConfigError("model: head_hidden must be positive");
  if (num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model: dropout must lie in [0,1)");
}

DsrsdModel::DsrsdModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const std::size_t d = config_.latent_dim;
  // One stream per component so variants sharing a seed share the common parts.
  Rng enc_a = Rng::derive(seed, 1), enc_b = Rng::derive(seed, 2);
  Rng proj_rng = Rng::derive(seed, 3);
  Rng heads_a = Rng::derive(seed, 4), heads_b = Rng::derive(seed, 5);
  Rng cls_rng = Rng::derive(seed, 6);

  encoder_a_ = make_mlp(config_.input_dim_a, config_.encoder_hidden, d, config_.encoder_layers, enc_a);
  encoder_b_ = make_mlp(config_.input_dim_b, config_.encoder_hidden, d, config_.encoder_layers, enc_b);
  proj_a_ = make_projection(d, proj_rng);
  proj_b_ = make_projection(d, proj_rng);

  std::size_t head_in = 2 * d;
  if (config_.variant == Variant::kFull) {
    heads_a_ = make_stream_heads(d, config_.head_hidden, heads_a);
    heads_b_ = make_stream_heads(d, config_.head_hidden, heads_b);
    gate_ = make_gate(d);
    head_in = config_.use_private_in_head ? 3 * d : d;
  }
  classifier_ = make_mlp(head_in, 0, config_.num_classes, 1, cls_rng).layers.front();
  register_parameters();
}

void DsrsdModel::register_parameters() {
  params_.clear();
  auto add_mlp = [this](const std::string& prefix, const MlpParams& mlp) {
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
      params_.push_back({prefix + "." + std::to_string(l) + ".weight", mlp.layers[l].weight});
      params_.push_back({prefix + "." + std::to_string(l) + ".bias", mlp.layers[l].bias});
    }
  };
  add_mlp("encoder_a", encoder_a_);
  add_mlp("encoder_b", encoder_b_);
  params_.push_back({"projection_a", proj_a_.weight});
  params_.push_back({"projection_b", proj_b_.weight});
  if (config_.variant == Variant::kFull) {
    for (auto [tag, heads] : std::array<std::pair<const char*, StreamHeads*>, 2>{
             {{"heads_a", &heads_a_}, {"heads_b", &heads_b_}}}) {
      if (config_.residual_shared) add_mlp(std::string(tag) + ".shared", heads->shared_residual);
      add_mlp(std::string(tag) + ".private", heads->private_head);
      params_.push_back({std::string(tag) + ".alignment", heads->alignment});
    }
    params_.push_back({"gate.a", gate_.weight_a});
    params_.push_back({"gate.b", gate_.weight_b});
  }
  params_.push_back({"classifier.weight", classifier_.weight});
  params_.push_back({"classifier.bias", classifier_.bias});
}

std::size_t DsrsdModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.value().size();
  return n;
}

std::vector<Matrix> DsrsdModel::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.tensor.value());
  return out;
}

void DsrsdModel::restore(std::span<const Matrix> values) {
  if (values.size() != params_.size()) {
    throw ShapeError("restore: " + std::to_string(values.size()) + " tensors for " +
                     std::to_string(params_.size()) + " parameters");
  }
  for (std::size_t i = 0; i < values.size(); ++i) params_[i].tensor.assign(values[i]);
}

void DsrsdModel::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

DualStreamOutput DsrsdModel::forward(const Tensor& x_a, const Tensor& x_b, const ForwardMode& mode) const {
  if (x_a.rows() != x_b.rows()) {
    throw ShapeError("forward: modality A has " + std::to_string(x_a.rows()) + " rows, B has " +
                     std::to_string(x_b.rows()));
  }
  ForwardMode m = mode;
  m.dropout_rate = mode.train ? config_.dropout : 0.0;

  DualStreamOutput out;
  out.a.base = encode(x_a, encoder_a_, m, "A");
  out.b.base = encode(x_b, encoder_b_, m, "B");
  out.a.projected = project(out.a.base, proj_a_.weight);
  out.b.projected = project(out.b.base, proj_b_.weight);

  if (config_.variant == Variant::kBackbone) {
    const std::array<Tensor, 2> late{out.a.projected, out.b.projected};
    out.logits = ops::add_row_bias(ops::matmul_nt(ops::concat_cols(late), classifier_.weight),
                                   classifier_.bias);
    return out;
  }

  auto [s_a, p_a] = decompose(out.a.projected, heads_a_, m, config_.residual_shared);
  auto [s_b, p_b] = decompose(out.b.projected, heads_b_, m, config_.residual_shared);
  out.a.shared = s_a;
  out.a.priv = p_a;
  out.b.shared = s_b;
  out.b.priv = p_b;
  out.a.aligned = project_shared(s_a, heads_a_.alignment);
  out.b.aligned = project_shared(s_b, heads_b_.alignment);

  auto fused = gated_fuse(out.a.aligned, out.b.aligned, gate_);
  out.fused = fused.fused;
  out.alpha = fused.alpha;
  out.augmented = augment(out.fused, p_a, p_b);
  const Tensor& head_input = config_.use_private_in_head ? out.augmented : out.fused;
  out.logits = ops::add_row_bias(ops::matmul_nt(head_input, classifier_.weight), classifier_.bias);
  return out;
}

Objective compute_objective(const DualStreamOutput& out, std::span<const int> labels,
                            const LossWeights& weights, const ObjectiveOptions& options) {
  weights.validate();
  LossWeights effective = weights;
  LossComponents values;
  bool dec_skipped = false;

  std::vector<std::pair<double, Tensor>> terms;
  Tensor con, align, dec, orth;
  if (out.has_streams()) {
    con = contrastive_loss(out.a.aligned, out.b.aligned, options.tau, options.symmetric_infonce);
    align = align_loss(out.a.aligned, out.b.aligned);
    if (out.a.aligned.rows() >= 2) {
      dec = decorrelation_loss(cross_covariance(out.a.aligned, out.b.aligned));
    } else {
      dec_skipped = true;
      log_warning("batch of one sample: decorrelation term skipped");
    }
    orth = orthogonality_loss(out.a.shared, out.a.priv, out.b.shared, out.b.priv);
    values.con = con.item();
    values.align = align.item();
    values.dec = dec.defined() ? dec.item() : 0.0;
    values.orth = orth.item();
  } else {
    effective.con = effective.align = effective.dec = effective.orth = 0.0;
  }
  if (dec_skipped) effective.dec = 0.0;
  Tensor task = task_loss(out.logits, labels, options.smoothing);
  values.task = task.item();

  LossReport report = total_loss(values, effective);
  report.dec_skipped = dec_skipped;

  Tensor total;
  auto attach = [&total](double w, const Tensor& term) {
    if (w == 0.0 || !term.defined()) return;
    Tensor weighted = ops::scale(term, w);
    total = total.defined() ? ops::add(total, weighted) : weighted;
  };
  attach(effective.con, con);
  attach(effective.align, align);
  attach(effective.dec, dec);
  attach(effective.orth, orth);
  attach(effective.task, task);
  if (!total.defined()) total = ops::scale(task, 0.0);
  return {total, report};
}

}  // namespace dsrsd
