#include "dsrsd/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "dsrsd/error.hpp"
#include "dsrsd/log.hpp"

namespace dsrsd {

OptimizerState make_optimizer_state(std::span<const NamedParameter> params, const AdamWSettings& settings) {
  OptimizerState state;
  state.settings = settings;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.tensor.rows(), p.tensor.cols());
    state.second_moment.emplace_back(p.tensor.rows(), p.tensor.cols());
  }
  return state;
}

void adamw_update(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v, std::uint64_t step,
                  const AdamWSettings& s, double lr) {
  if (!param.same_shape(grad) || !param.same_shape(m) || !param.same_shape(v)) {
    throw ShapeError("adamw_update: parameter " + shape_string(param) + ", gradient " + shape_string(grad) +
                     " and moments must share a shape");
  }
  if (step == 0) throw UsageError("adamw_update: step is 1-based");
  if (!(lr >= 0.0)) throw ConfigError("adamw_update: learning rate must be >= 0");
  const double t = static_cast<double>(step);
  const double bias1 = 1.0 - std::pow(s.beta1, t);
  const double bias2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    param[i] -= lr * s.weight_decay * param[i];
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

void adamw_step(std::span<const NamedParameter> params, OptimizerState& state, double lr) {
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adamw_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                     " tensors, got " + std::to_string(params.size()));
  }
  ++state.step;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor t = params[k].tensor;
    Matrix value = t.value();
    const Matrix zero(value.rows(), value.cols());
    const Matrix& grad = t.grad() ? *t.grad() : zero;
    adamw_update(value, grad, state.first_moment[k], state.second_moment[k], state.step, state.settings, lr);
    t.assign(std::move(value));
  }
}

ClipResult clip_gradients(std::span<Matrix* const> grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("clip_gradients: max_norm must be positive");
  double sq = 0.0;
  for (const Matrix* g : grads) {
    if (g) sq += frobenius_sq(*g);
  }
  ClipResult r;
  r.pre_clip_norm = std::sqrt(sq);
  if (!std::isfinite(r.pre_clip_norm)) {
    r.finite = false;
    r.post_clip_norm = r.pre_clip_norm;
    return r;
  }
  r.post_clip_norm = r.pre_clip_norm;
  if (r.pre_clip_norm > max_norm) {
    const double factor = max_norm / r.pre_clip_norm;
    double post = 0.0;
    for (Matrix* g : grads) {
      if (!g) continue;
      for (double& v : g->values()) v *= factor;
      post += frobenius_sq(*g);
    }
    r.post_clip_norm = std::sqrt(post);
  }
  return r;
}

double cosine_lr(std::size_t step, std::size_t total_steps, std::size_t warmup_steps, double base_lr,
                 double min_lr) {
  if (warmup_steps > 0 && step < warmup_steps) {
    return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  if (total_steps <= warmup_steps) return base_lr;
  const double progress =
      std::min(1.0, static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps));
  return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (max_epochs == 0) throw ConfigError("train: max_epochs must be positive");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw ConfigError("train: warmup_fraction must lie in [0,1)");
  if (!(base_lr >= 0.0) || !(min_lr >= 0.0)) throw ConfigError("train: learning rates must be >= 0");
  if (!(clip_norm > 0.0)) throw ConfigError("train: clip_norm must be positive");
  if (!(ramp_start_fraction >= 0.0 && ramp_start_fraction <= 1.0)) {
    throw ConfigError("train: ramp_start_fraction must lie in [0,1]");
  }
  if (!(objective.tau > 0.0)) throw ConfigError("train: tau must be positive");
  if (!(objective.smoothing >= 0.0 && objective.smoothing < 1.0)) throw ConfigError("train: label smoothing must lie in [0,1)");
  if (!(adamw.beta1 >= 0.0 && adamw.beta1 < 1.0) || !(adamw.beta2 >= 0.0 && adamw.beta2 < 1.0)) {
    throw ConfigError("train: AdamW betas must lie in [0,1)");
  }
  if (!(adamw.eps > 0.0) || !(adamw.weight_decay >= 0.0)) throw ConfigError("train: invalid AdamW eps/weight_decay");
  weights.validate();
}

LossWeights lambda_schedule(std::size_t epoch, const TrainConfig& config) {
  LossWeights w = config.weights;
  if (config.ramp_epochs == 0 || epoch >= config.ramp_epochs) return w;
  const double progress = static_cast<double>(epoch) / static_cast<double>(config.ramp_epochs);
  const double factor = config.ramp_start_fraction + (1.0 - config.ramp_start_fraction) * progress;
  w.dec *= factor;
  w.orth *= factor;
  return w;
}

std::vector<double> predict_scores(const DsrsdModel& model, const MultimodalDataset& data, std::size_t batch_size) {
  GraphScope no_grad(nullptr);
  std::vector<double> scores;
  scores.reserve(data.size());
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    rows.resize(end - start);
    std::iota(rows.begin(), rows.end(), start);
    const MultimodalDataset batch = data.subset(rows);
    const auto out = model.forward(batch.features_a, batch.features_b, ForwardMode::eval());
    const Tensor probs = ops::row_softmax(out.logits);
    for (std::size_t i = 0; i < probs.rows(); ++i) scores.push_back(probs.value()(i, 1));
  }
  return scores;
}

MetricSet evaluate(const DsrsdModel& model, const MultimodalDataset& data, std::size_t batch_size) {
  const auto scores = predict_scores(model, data, batch_size);
  return compute_metrics(scores, data.labels);
}

namespace {

bool has_both_classes(const std::vector<int>& labels) {
  bool pos = false, neg = false;
  for (int y : labels) (y == 1 ? pos : neg) = true;
  return pos && neg;
}

}  // namespace

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = Rng::derive(seed, 0x5EED0000ULL + epoch);
  rng.shuffle(std::span<std::size_t>(perm));
  return perm;
}

FitResult fit(DsrsdModel& model, const MultimodalDataset& train, const MultimodalDataset& val,
              const TrainConfig& config, std::ostream* log) {
  config.validate();
  if (train.size() == 0 || val.size() == 0) throw ConfigError("fit: train and validation sets must be non-empty");
  if (!has_both_classes(val.labels)) {
    throw ConfigError("fit: validation set has a single class, AUC is undefined");
  }
  if (static_cast<std::size_t>(train.num_classes) != model.config().num_classes) {
    throw ConfigError("fit: dataset has " + std::to_string(train.num_classes) + " classes, model expects " +
                      std::to_string(model.config().num_classes));
  }

  const std::size_t steps_per_epoch = (train.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * config.max_epochs;
  const auto warmup_steps =
      static_cast<std::size_t>(std::floor(config.warmup_fraction * static_cast<double>(total_steps)));

  const auto& params = model.parameters();
  OptimizerState optimizer = make_optimizer_state(params, config.adamw);
  Rng dropout_rng = Rng::derive(config.seed, 0xD80);

  FitResult result;
  result.total_steps = total_steps;
  double best_auc = -std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_params = model.snapshot();
  std::size_t since_best = 0;
  std::size_t consecutive_aborts = 0;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    const LossWeights weights = lambda_schedule(epoch, config);
    LossComponents sums;
    double total_sum = 0.0;
    double counted = 0.0;
    LossWeights effective = weights;

    const auto order = epoch_order(train.size(), config.seed, epoch);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const MultimodalDataset batch = train.subset(rows);
      ++step;
      const double lr = cosine_lr(step, total_steps, warmup_steps, config.base_lr, config.min_lr);
      rec.lr = lr;

      model.zero_grad();
      Graph graph;
      Objective objective;
      bool aborted = false;
      try {
        GraphScope scope(graph);
        ForwardMode mode{true, 0.0, &dropout_rng};
        const auto out = model.forward(batch.features_a, batch.features_b, mode);
        objective = compute_objective(out, batch.labels, weights, config.objective);
        if (!std::isfinite(objective.total.item())) throw NumericalError("total loss is not finite");
        graph.backward(objective.total);
      } catch (const NumericalError& e) {
        aborted = true;
        log_warning(std::string("epoch ") + std::to_string(epoch) + ": step skipped: " + e.what());
      }

      if (!aborted) {
        std::vector<Matrix*> grads;
        for (const auto& p : params) {
          Tensor t = p.tensor;
          grads.push_back(t.mutable_grad());
        }
        const ClipResult clip = clip_gradients(grads, config.clip_norm);
        if (!clip.finite) {
          aborted = true;
          log_warning("epoch " + std::to_string(epoch) + ": step skipped: non-finite gradient");
        } else {
          rec.max_pre_clip_norm = std::max(rec.max_pre_clip_norm, clip.pre_clip_norm);
          rec.max_post_clip_norm = std::max(rec.max_post_clip_norm, clip.post_clip_norm);
          adamw_step(params, optimizer, lr);
        }
      }

      if (aborted) {
        ++rec.skipped_steps;
        if (++consecutive_aborts >= 3) {
          throw NumericalError("fit: three consecutive steps aborted on non-finite values (epoch " +
                               std::to_string(epoch) + ")");
        }
        continue;
      }
      consecutive_aborts = 0;

      const auto& c = objective.report.components;
      const double w = static_cast<double>(rows.size());
      sums.con += w * c.con;
      sums.align += w * c.align;
      sums.dec += w * c.dec;
      sums.orth += w * c.orth;
      sums.task += w * c.task;
      total_sum += w * objective.report.total;
      counted += w;
      // Effective weights differ from the schedule only for the backbone or a skipped
      // decorrelation term; keep the last full-batch view for the record.
      if (!objective.report.dec_skipped) effective = objective.report.weights;
    }

    if (counted > 0.0) {
      rec.train.components = {sums.con / counted, sums.align / counted, sums.dec / counted,
                              sums.orth / counted, sums.task / counted};
      rec.train.total = total_sum / counted;
    }
    rec.train.weights = effective;
    rec.val = evaluate(model, val);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.records.push_back(rec);
    if (log) *log << epoch_record_json(rec) << '\n';

    if (rec.val.auc > best_auc) {
      best_auc = rec.val.auc;
      best_params = model.snapshot();
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  model.restore(best_params);
  model.zero_grad();
  result.best_val_auc = best_auc;
  return result;
}

std::string epoch_record_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  const auto& c = r.train.components;
  j["losses"] = {{"con", c.con}, {"align", c.align}, {"dec", c.dec}, {"orth", c.orth}, {"task", c.task},
                 {"total", r.train.total}};
  j["val"] = {{"auc", r.val.auc}, {"acc", r.val.acc}, {"f1", r.val.f1}};
  j["lr"] = r.lr;
  const auto& w = r.train.weights;
  j["lambda"] = {{"con", w.con}, {"align", w.align}, {"dec", w.dec}, {"orth", w.orth}, {"task", w.task}};
  j["max_grad_norm"] = {{"pre_clip", r.max_pre_clip_norm}, {"post_clip", r.max_post_clip_norm}};
  j["skipped_steps"] = r.skipped_steps;
  return j.dump();
}

}  // namespace dsrsd
