#include "fsed/trainer.hpp"

#include <chrono>
#include <cmath>

#include "fsed/json_io.hpp"
#include "fsed/rng.hpp"

namespace fsed {

std::size_t AdamW::add(const Matrix& like, Options opts) {
  states_.push_back({opts, Matrix::Zero(like.rows(), like.cols()), Matrix::Zero(like.rows(), like.cols())});
  return states_.size() - 1;
}

void AdamW::step(std::size_t slot, Matrix& param, const Matrix& grad) {
  if (t_ == 0) throw UsageError("AdamW::step before tick()");
  auto& s = states_.at(slot);
  const auto& o = s.opts;
  param *= 1.0 - o.lr * o.weight_decay;
  s.m = o.beta1 * s.m + (1.0 - o.beta1) * grad;
  s.v = o.beta2 * s.v + (1.0 - o.beta2) * grad.cwiseAbs2();
  const double t = static_cast<double>(t_);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  param.array() -= o.lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + o.eps);
}

EarlyStopper::EarlyStopper(std::size_t patience, double min_delta) : patience_(patience), min_delta_(min_delta) {
  if (patience == 0) throw UsageError("early-stop patience must be >= 1");
}

bool EarlyStopper::update(double loss) {
  if (loss < best_ - min_delta_) {
    best_ = loss;
    since_ = 0;
    return false;
  }
  return ++since_ >= patience_;
}

std::string_view to_string(StopReason r) { return r == StopReason::kMaxEpochs ? "max-epochs" : "early-stop"; }

void TrainConfig::validate() const {
  if (epochs == 0) throw UsageError("epochs must be positive");
  if (batch_train == 0 || batch_eval == 0) throw UsageError("batch sizes must be positive");
  if (!(lr_encoder > 0) || !(lr_other > 0)) throw UsageError("learning rates must be positive");
  if (weight_decay < 0) throw UsageError("weight decay must be non-negative");
  if (early_stop_patience == 0) throw UsageError("early-stop patience must be >= 1");
  if (seeds.empty()) throw UsageError("at least one seed is required");
  if (dim < 2) throw UsageError("dim must be >= 2");
}

nlohmann::ordered_json train_config_json(const TrainConfig& cfg) {
  ojson j;
  j["epochs"] = cfg.epochs;
  j["batch_train"] = cfg.batch_train;
  j["batch_eval"] = cfg.batch_eval;
  j["lr_encoder"] = cfg.lr_encoder;
  j["lr_other"] = cfg.lr_other;
  j["weight_decay"] = cfg.weight_decay;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["early_stop_patience"] = cfg.early_stop_patience;
  j["early_stop_min_delta"] = cfg.early_stop_min_delta;
  j["monitor"] = cfg.monitor == Monitor::kTrainLoss ? "train_loss" : "valid_loss";
  j["seeds"] = cfg.seeds;
  j["ablations"] = model_options_json(cfg.model_options())["ablations"];
  j["distance"] = std::string(to_string(cfg.distance));
  j["dim"] = cfg.dim;
  j["max_tokens"] = cfg.max_tokens;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  auto opt = [&](const char* key, auto& dst) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return;
    try {
      dst = it->get<std::decay_t<decltype(dst)>>();
    } catch (const nlohmann::json::exception&) {
      throw UsageError(std::string("config key '") + key + "' has the wrong type");
    }
  };
  opt("epochs", cfg.epochs);
  opt("batch_train", cfg.batch_train);
  opt("batch_eval", cfg.batch_eval);
  opt("lr_encoder", cfg.lr_encoder);
  opt("lr_other", cfg.lr_other);
  opt("weight_decay", cfg.weight_decay);
  opt("alpha", cfg.alpha);
  opt("beta", cfg.beta);
  opt("early_stop_patience", cfg.early_stop_patience);
  opt("early_stop_min_delta", cfg.early_stop_min_delta);
  std::string monitor;
  opt("monitor", monitor);
  if (monitor == "valid_loss")
    cfg.monitor = Monitor::kValidLoss;
  else if (!monitor.empty() && monitor != "train_loss")
    throw UsageError("monitor must be train_loss or valid_loss");
  opt("seeds", cfg.seeds);
  std::string distance;
  opt("distance", distance);
  if (!distance.empty()) cfg.distance = parse_distance(distance);
  opt("dim", cfg.dim);
  opt("max_tokens", cfg.max_tokens);
  nlohmann::json wrapped;
  if (auto it = j.find("ablations"); it != j.end()) wrapped["ablations"] = *it;
  cfg.ablations = model_options_from_json(wrapped).ablations;
  cfg.validate();
  return cfg;
}

std::string train_log_jsonl(const TrainLog& log) {
  std::string out;
  for (const auto& it : log.iterations) {
    ojson j{{"type", "iteration"},       {"iteration", it.iteration}, {"epoch", it.epoch},
            {"trigger_loss", it.trigger_loss}, {"event_loss", it.event_loss}, {"loss", it.loss}};
    out += j.dump() + "\n";
  }
  for (const auto& e : log.epochs) {
    ojson j{{"type", "epoch"}, {"epoch", e.epoch}, {"valid_loss", e.valid_loss}};
    j["valid"] = e.valid ? report_json(*e.valid) : ojson(nullptr);
    out += j.dump() + "\n";
  }
  ojson end{{"type", "end"},
            {"stop_reason", std::string(to_string(log.stop_reason))},
            {"best_epoch", log.best_epoch},
            {"iterations", log.iterations.size()},
            {"truncated_trigger_examples", log.truncated_trigger_examples}};
  out += end.dump() + "\n";
  return out;
}

namespace {

double mean_loss(const PromptModel& model, const std::vector<EventMention>& mentions) {
  double sum = 0.0;
  for (const auto& m : mentions) sum += model.loss(m).total;
  return mentions.empty() ? 0.0 : sum / static_cast<double>(mentions.size());
}

}  // namespace

TrainResult train(PromptModel model, const FewShotSplit& split, const Corpus& corpus, const TrainConfig& cfg,
                  std::uint64_t seed) {
  cfg.validate();
  if (split.train.empty()) throw DataError("split has no training mentions");
  for (const auto& label : split.kept_labels.labels())
    if (!model.labels().contains(label)) throw UsageError("model label space lacks split label '" + label + "'");

  const auto start = std::chrono::steady_clock::now();
  const auto train_set = gather(corpus, split.train);
  const auto valid_set = gather(corpus, split.valid);

  AdamW opt;
  std::vector<std::size_t> slots;
  for (const auto& t : model.encoder().parameters())
    slots.push_back(opt.add(t.value, {.lr = cfg.lr_encoder, .weight_decay = cfg.weight_decay}));
  const std::size_t proto_slot =
      opt.add(model.prototypes().vectors, {.lr = cfg.lr_other, .weight_decay = cfg.weight_decay});

  TrainLog log;
  EarlyStopper stopper(cfg.early_stop_patience, cfg.early_stop_min_delta);
  std::optional<double> latest_valid_loss;
  auto best = std::make_shared<const PromptModel>(model);
  double best_f1 = -1.0;
  double best_valid_loss = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto grads = model.zero_gradients();
  bool stop = false;

  for (std::size_t epoch = 1; epoch <= cfg.epochs && !stop; ++epoch) {
    rng.shuffle(order);
    for (std::size_t b = 0; b < order.size() && !stop; b += cfg.batch_train) {
      const std::size_t end = std::min(order.size(), b + cfg.batch_train);
      grads.set_zero();
      IterationRecord rec;
      rec.iteration = log.iterations.size() + 1;
      rec.epoch = epoch;
      for (std::size_t i = b; i < end; ++i) {
        const auto step = model.accumulate_gradients(train_set[order[i]], grads);
        if (step.trigger_truncated) ++log.truncated_trigger_examples;
        rec.trigger_loss += step.trigger;
        rec.event_loss += step.event;
        rec.loss += step.total;
      }
      const double scale = 1.0 / static_cast<double>(end - b);
      rec.trigger_loss *= scale;
      rec.event_loss *= scale;
      rec.loss *= scale;
      grads.encoder *= scale;
      grads.prototypes *= scale;
      if (!std::isfinite(rec.loss) || !grads.encoder.all_finite() || !grads.prototypes.allFinite()) {
        log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        throw TrainingDiverged("non-finite loss at iteration " + std::to_string(rec.iteration), best, log);
      }

      opt.tick();
      auto& params = model.encoder().parameters();
      for (std::size_t p = 0; p < params.size(); ++p) opt.step(slots[p], params[p].value, grads.encoder[p].value);
      opt.step(proto_slot, model.prototypes().vectors, grads.prototypes);
      log.iterations.push_back(rec);

      if (cfg.monitor == Monitor::kTrainLoss)
        stop = stopper.update(rec.loss);
      else if (latest_valid_loss)
        stop = stopper.update(*latest_valid_loss);
    }

    EpochRecord er;
    er.epoch = epoch;
    if (!valid_set.empty()) {
      const auto preds = predict(model, valid_set, cfg.batch_eval);
      er.valid = compute_metrics(preds, valid_set);
      er.valid_loss = mean_loss(model, valid_set);
      latest_valid_loss = er.valid_loss;
      // Ties on F1 go to the lower validation loss.
      if (er.valid->weighted_f1 > best_f1 || (er.valid->weighted_f1 == best_f1 && er.valid_loss < best_valid_loss)) {
        best_f1 = er.valid->weighted_f1;
        best_valid_loss = er.valid_loss;
        best = std::make_shared<const PromptModel>(model);
        log.best_epoch = epoch;
      }
    }
    log.epochs.push_back(std::move(er));
    if (stop) log.stop_reason = StopReason::kEarlyStop;
  }

  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (valid_set.empty()) {
    log.best_epoch = log.epochs.size();
    return {std::move(model), std::move(log)};
  }
  return {PromptModel(*best), std::move(log)};
}

TrainResult train_toy(const FewShotSplit& split, const Corpus& corpus, const TrainConfig& cfg,
                      const PromptConfig& prompt, std::uint64_t seed) {
  cfg.validate();
  auto model = make_toy_model(corpus, split.kept_labels, prompt, cfg.model_options(), cfg.dim, seed, cfg.max_tokens);
  return train(std::move(model), split, corpus, cfg, seed);
}

SeedAggregate aggregate_reports(const std::vector<std::uint64_t>& seeds, const std::vector<EvalReport>& reports) {
  SeedAggregate a;
  a.seeds = seeds;
  a.per_seed = reports;
  auto summarize = [&](auto field) {
    MetricSummary s;
    if (reports.empty()) return s;
    for (const auto& r : reports) s.mean += field(r);
    s.mean /= static_cast<double>(reports.size());
    for (const auto& r : reports) s.stddev += (field(r) - s.mean) * (field(r) - s.mean);
    s.stddev = std::sqrt(s.stddev / static_cast<double>(reports.size()));
    return s;
  };
  a.accuracy = summarize([](const EvalReport& r) { return r.accuracy; });
  a.weighted_precision = summarize([](const EvalReport& r) { return r.weighted_precision; });
  a.weighted_recall = summarize([](const EvalReport& r) { return r.weighted_recall; });
  a.weighted_f1 = summarize([](const EvalReport& r) { return r.weighted_f1; });
  a.trigger_accuracy = summarize([](const EvalReport& r) { return r.trigger_accuracy; });
  return a;
}

SeedAggregate run_seeds(const FewShotSplit& split, const Corpus& corpus, const TrainConfig& cfg,
                        const PromptConfig& prompt) {
  cfg.validate();
  const auto test_set = gather(corpus, split.test);
  std::vector<std::uint64_t> ok_seeds;
  std::vector<EvalReport> reports;
  std::vector<std::string> errors;
  for (auto seed : cfg.seeds) {
    try {
      auto result = train_toy(split, corpus, cfg, prompt, seed);
      const auto preds = predict(result.model, test_set, cfg.batch_eval);
      reports.push_back(compute_metrics(preds, test_set));
      ok_seeds.push_back(seed);
    } catch (const std::exception& e) {
      errors.push_back("seed " + std::to_string(seed) + ": " + e.what());
    }
  }
  auto agg = aggregate_reports(ok_seeds, reports);
  agg.errors = std::move(errors);
  agg.complete = agg.errors.empty();
  return agg;
}

nlohmann::ordered_json seed_aggregate_json(const SeedAggregate& a) {
  ojson j;
  j["complete"] = a.complete;
  j["seeds"] = a.seeds;
  ojson per = ojson::array();
  for (const auto& r : a.per_seed) per.push_back(report_json(r));
  j["per_seed"] = per;
  auto ms = [](const MetricSummary& s) { return ojson{{"mean", s.mean}, {"std", s.stddev}}; };
  j["accuracy"] = ms(a.accuracy);
  j["weighted_precision"] = ms(a.weighted_precision);
  j["weighted_recall"] = ms(a.weighted_recall);
  j["weighted_f1"] = ms(a.weighted_f1);
  j["trigger_accuracy"] = ms(a.trigger_accuracy);
  j["errors"] = a.errors;
  return j;
}

}  // namespace fsed
