#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fsed/corpus.hpp"
#include "fsed/model.hpp"
#include "fsed/sampler.hpp"

namespace fsed {

struct LabelMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  double trigger_accuracy = 0.0;
  std::map<std::string, LabelMetrics> per_label;  // labels with gold support only
};

// Runs the two-step inference over `mentions` in chunks of `batch_size`.
std::vector<Prediction> predict(const PromptModel& model, std::span<const EventMention> mentions,
                                std::size_t batch_size = 128);
std::vector<Prediction> predict(const PromptModel& model, const Corpus& c, const std::vector<std::string>& ids,
                                std::size_t batch_size = 128);

// Predictions and gold mentions are matched by mention id. Per-label metrics use
// 0/0 := 0; weighted metrics weight each label by its gold support. A predicted
// trigger counts as correct when it equals (case-folded) any word of the gold span.
EvalReport compute_metrics(std::span<const Prediction> preds, std::span<const EventMention> golds);

struct LengthBucket {
  std::size_t lo = 0;  // exclusive
  std::size_t hi = 0;  // inclusive
  std::size_t count = 0;
  std::optional<EvalReport> report;  // absent for empty buckets
};

struct BucketedReport {
  std::vector<LengthBucket> buckets;
  std::size_t out_of_range = 0;
};

using LengthIntervals = std::vector<std::pair<std::size_t, std::size_t>>;
// (10,20], (20,30], ..., (50,60]
LengthIntervals default_length_intervals();

BucketedReport length_bucket_eval(std::span<const Prediction> preds, std::span<const EventMention> golds,
                                  const LengthIntervals& intervals = default_length_intervals());
BucketedReport length_bucket_eval(const PromptModel& model, std::span<const EventMention> pool,
                                  const LengthIntervals& intervals = default_length_intervals(),
                                  std::size_t batch_size = 128);

struct MethodResult {
  std::string method;  // Full-Test, IUS, TUS, COS
  std::optional<EvalReport> report;
  std::string error;  // set when the sampler failed for this method
  std::vector<SkippedLabel> skipped;
};

// One report per method over the split's test pool. Sampler failures are
// recorded per method and do not stop the others.
std::vector<MethodResult> debias_eval(const PromptModel& model, const Corpus& c, const FewShotSplit& split,
                                      std::size_t k, std::uint64_t seed = Rng::kDefaultSeed,
                                      std::size_t batch_size = 128);

std::vector<EventMention> gather(const Corpus& c, const std::vector<std::string>& ids);

std::string report_to_json(const EvalReport& r, int indent = 2);
std::string bucketed_to_json(const BucketedReport& r);
std::string debias_to_json(const std::vector<MethodResult>& results);
std::string predictions_to_jsonl(std::span<const Prediction> preds);

// Aligned plain-text table with one row per named report (percentages).
std::string render_table(const std::vector<std::pair<std::string, EvalReport>>& rows);

}  // namespace fsed
