#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsed/corpus.hpp"
#include "fsed/error.hpp"
#include "fsed/evaluator.hpp"
#include "fsed/model.hpp"
#include "fsed/sampler.hpp"

namespace fsed {

// Adam with decoupled weight decay. Each parameter group has its own rate.
class AdamW {
 public:
  struct Options {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
  };

  // Registers a tensor; returns its slot for step().
  std::size_t add(const Matrix& like, Options opts);
  // p <- p - lr*wd*p, then the bias-corrected Adam update.
  void step(std::size_t slot, Matrix& param, const Matrix& grad);
  // Advances the shared step counter; call once per iteration before step().
  void tick() { ++t_; }
  std::size_t steps() const { return t_; }

 private:
  struct State {
    Options opts;
    Matrix m, v;
  };
  std::vector<State> states_;
  std::size_t t_ = 0;
};

// Counts iterations since the monitored loss last improved by at least
// min_delta; fires once that count reaches patience.
class EarlyStopper {
 public:
  EarlyStopper(std::size_t patience, double min_delta = 1e-6);
  // Returns true when training should stop.
  bool update(double loss);
  double best() const { return best_; }
  std::size_t since_best() const { return since_; }

 private:
  std::size_t patience_;
  double min_delta_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t since_ = 0;
};

enum class Monitor { kTrainLoss, kValidLoss };

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_train = 32;
  std::size_t batch_eval = 128;
  double lr_encoder = 1e-2;
  double lr_other = 1e-2;
  double weight_decay = 0.01;
  double alpha = 1.0;
  double beta = 1.0;
  std::size_t early_stop_patience = 1000;
  double early_stop_min_delta = 1e-6;
  Monitor monitor = Monitor::kTrainLoss;
  std::vector<std::uint64_t> seeds{42};
  Ablations ablations;
  Distance distance = Distance::kEuclidean;
  // Toy backend shape.
  std::size_t dim = 32;
  std::size_t max_tokens = 512;

  // Throws UsageError on non-positive counts or rates.
  void validate() const;
  ModelOptions model_options() const { return {distance, alpha, beta, ablations}; }
};

nlohmann::ordered_json train_config_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based, strictly increasing
  std::size_t epoch = 0;
  double trigger_loss = 0.0;
  double event_loss = 0.0;
  double loss = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::optional<EvalReport> valid;
  double valid_loss = 0.0;
};

enum class StopReason { kMaxEpochs, kEarlyStop };
std::string_view to_string(StopReason r);

struct TrainLog {
  std::vector<IterationRecord> iterations;
  std::vector<EpochRecord> epochs;
  StopReason stop_reason = StopReason::kMaxEpochs;
  std::size_t best_epoch = 0;  // epoch whose state the returned model holds; 0 = initial
  double wall_seconds = 0.0;
  std::size_t truncated_trigger_examples = 0;
};

// One JSON object per line: iteration records, epoch records, a final summary.
// Wall-clock time is not included so the log is reproducible.
std::string train_log_jsonl(const TrainLog& log);

struct TrainResult {
  PromptModel model;
  TrainLog log;
};

// Raised when a batch loss becomes non-finite. Holds the last model state
// that had a finite loss.
class TrainingDiverged : public RuntimeFailure {
 public:
  TrainingDiverged(const std::string& what, std::shared_ptr<const PromptModel> last_finite, TrainLog log)
      : RuntimeFailure(what), last_finite_(std::move(last_finite)), log_(std::move(log)) {}
  const PromptModel& last_finite() const { return *last_finite_; }
  const TrainLog& log() const { return log_; }

 private:
  std::shared_ptr<const PromptModel> last_finite_;
  TrainLog log_;
};

// Jointly optimizes the encoder (lr_encoder) and prototypes (lr_other) on the
// split's train ids with teacher-forced triggers. Validation runs once per
// epoch with predicted triggers; the returned model is the state with the best
// validation weighted F1. `seed` drives batch order.
TrainResult train(PromptModel model, const FewShotSplit& split, const Corpus& corpus, const TrainConfig& cfg,
                  std::uint64_t seed);

// Builds a seeded toy model over the split's labels and trains it.
TrainResult train_toy(const FewShotSplit& split, const Corpus& corpus, const TrainConfig& cfg,
                      const PromptConfig& prompt, std::uint64_t seed);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

struct SeedAggregate {
  std::vector<std::uint64_t> seeds;
  std::vector<EvalReport> per_seed;
  std::vector<std::string> errors;  // one entry per failed seed
  bool complete = true;
  MetricSummary accuracy, weighted_precision, weighted_recall, weighted_f1, trigger_accuracy;
};

SeedAggregate aggregate_reports(const std::vector<std::uint64_t>& seeds, const std::vector<EvalReport>& reports);

// Trains one toy model per cfg.seeds entry and evaluates it on the split's test ids.
SeedAggregate run_seeds(const FewShotSplit& split, const Corpus& corpus, const TrainConfig& cfg,
                        const PromptConfig& prompt);

nlohmann::ordered_json seed_aggregate_json(const SeedAggregate& a);

}  // namespace fsed
