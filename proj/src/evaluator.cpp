#include "fsed/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "fsed/error.hpp"
#include "fsed/json_io.hpp"

namespace fsed {

std::vector<EventMention> gather(const Corpus& c, const std::vector<std::string>& ids) {
  std::vector<EventMention> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(c.by_id(id));
  return out;
}

std::vector<Prediction> predict(const PromptModel& model, std::span<const EventMention> mentions,
                                std::size_t batch_size) {
  if (batch_size == 0) throw UsageError("batch size must be positive");
  std::vector<Prediction> out;
  out.reserve(mentions.size());
  for (std::size_t start = 0; start < mentions.size(); start += batch_size) {
    const auto batch = mentions.subspan(start, std::min(batch_size, mentions.size() - start));
    for (const auto& m : batch) out.push_back(model.predict(m));
  }
  return out;
}

std::vector<Prediction> predict(const PromptModel& model, const Corpus& c, const std::vector<std::string>& ids,
                                std::size_t batch_size) {
  const auto mentions = gather(c, ids);
  return predict(model, mentions, batch_size);
}

EvalReport compute_metrics(std::span<const Prediction> preds, std::span<const EventMention> golds) {
  if (golds.empty()) throw UsageError("compute_metrics: empty evaluation set");
  if (preds.size() != golds.size()) throw UsageError("compute_metrics: prediction and gold counts differ");
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const auto& p : preds)
    if (!by_id.emplace(p.mention_id, &p).second) throw UsageError("compute_metrics: repeated prediction id");

  std::map<std::string, std::size_t> support, predicted, correct;
  std::size_t right = 0, trig_right = 0;
  for (const auto& g : golds) {
    auto it = by_id.find(g.id);
    if (it == by_id.end()) throw UsageError("compute_metrics: no prediction for '" + g.id + "'");
    const Prediction& p = *it->second;
    ++support[g.label];
    ++predicted[p.label];
    if (p.label == g.label) {
      ++correct[g.label];
      ++right;
    }
    const auto word = casefold(p.trigger_word);
    for (std::size_t i = g.trigger_start; i < g.trigger_end; ++i) {
      if (casefold(g.words[i]) == word) {
        ++trig_right;
        break;
      }
    }
  }

  EvalReport r;
  r.n = golds.size();
  const double n = static_cast<double>(r.n);
  r.accuracy = static_cast<double>(right) / n;
  r.trigger_accuracy = static_cast<double>(trig_right) / n;
  for (const auto& [label, sup] : support) {
    LabelMetrics lm;
    lm.support = sup;
    const double tp = static_cast<double>(correct[label]);
    const double pc = static_cast<double>(predicted[label]);
    lm.precision = pc > 0 ? tp / pc : 0.0;
    lm.recall = tp / static_cast<double>(sup);
    lm.f1 = lm.precision + lm.recall > 0 ? 2.0 * lm.precision * lm.recall / (lm.precision + lm.recall) : 0.0;
    const double w = static_cast<double>(sup) / n;
    r.weighted_precision += w * lm.precision;
    r.weighted_recall += w * lm.recall;
    r.weighted_f1 += w * lm.f1;
    r.per_label.emplace(label, lm);
  }
  return r;
}

LengthIntervals default_length_intervals() { return {{10, 20}, {20, 30}, {30, 40}, {40, 50}, {50, 60}}; }

BucketedReport length_bucket_eval(std::span<const Prediction> preds, std::span<const EventMention> golds,
                                  const LengthIntervals& intervals) {
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (intervals[i].first >= intervals[i].second) throw UsageError("length interval must satisfy lo < hi");
    for (std::size_t j = 0; j < i; ++j)
      if (intervals[i].first < intervals[j].second && intervals[j].first < intervals[i].second)
        throw UsageError("length intervals overlap");
  }
  if (preds.size() != golds.size()) throw UsageError("length_bucket_eval: prediction and gold counts differ");
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const auto& p : preds) by_id.emplace(p.mention_id, &p);

  BucketedReport out;
  std::vector<std::vector<Prediction>> bp(intervals.size());
  std::vector<std::vector<EventMention>> bg(intervals.size());
  for (const auto& g : golds) {
    const auto len = g.length();
    auto it = std::find_if(intervals.begin(), intervals.end(),
                           [len](const auto& iv) { return len > iv.first && len <= iv.second; });
    if (it == intervals.end()) {
      ++out.out_of_range;
      continue;
    }
    const auto b = static_cast<std::size_t>(it - intervals.begin());
    bg[b].push_back(g);
    bp[b].push_back(*by_id.at(g.id));
  }
  for (std::size_t b = 0; b < intervals.size(); ++b) {
    LengthBucket lb{intervals[b].first, intervals[b].second, bg[b].size(), std::nullopt};
    if (!bg[b].empty()) lb.report = compute_metrics(bp[b], bg[b]);
    out.buckets.push_back(std::move(lb));
  }
  return out;
}

BucketedReport length_bucket_eval(const PromptModel& model, std::span<const EventMention> pool,
                                  const LengthIntervals& intervals, std::size_t batch_size) {
  const auto preds = predict(model, pool, batch_size);
  return length_bucket_eval(preds, pool, intervals);
}

std::vector<MethodResult> debias_eval(const PromptModel& model, const Corpus& c, const FewShotSplit& split,
                                      std::size_t k, std::uint64_t seed, std::size_t batch_size) {
  // Predict the whole pool once; every subset is drawn from it.
  const auto pool = gather(c, split.test);
  const auto preds = predict(model, pool, batch_size);
  std::unordered_map<std::string, std::size_t> at;
  for (std::size_t i = 0; i < pool.size(); ++i) at.emplace(pool[i].id, i);

  auto evaluate = [&](const std::vector<std::string>& ids) {
    std::vector<Prediction> p;
    std::vector<EventMention> g;
    for (const auto& id : ids) {
      p.push_back(preds[at.at(id)]);
      g.push_back(pool[at.at(id)]);
    }
    return compute_metrics(p, g);
  };

  std::vector<MethodResult> out;
  MethodResult full{"Full-Test", std::nullopt, {}, {}};
  if (pool.empty())
    full.error = "empty test pool";
  else
    full.report = evaluate(split.test);
  out.push_back(std::move(full));

  using SamplerFn = TestSubset (*)(const Corpus&, const std::vector<std::string>&, std::size_t, std::uint64_t);
  const std::pair<SamplerMethod, SamplerFn> samplers[] = {
      {SamplerMethod::kIus, &sample_ius}, {SamplerMethod::kTus, &sample_tus}, {SamplerMethod::kCos, &sample_cos}};
  for (const auto& [method, fn] : samplers) {
    MethodResult r{std::string(to_string(method)), std::nullopt, {}, {}};
    try {
      const auto subset = fn(c, split.test, k, seed);
      r.skipped = subset.skipped;
      if (subset.ids.empty())
        r.error = "sampler returned no mentions";
      else
        r.report = evaluate(subset.ids);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string report_to_json(const EvalReport& r, int indent) { return report_json(r).dump(indent); }

std::string bucketed_to_json(const BucketedReport& r) { return bucketed_json(r).dump(2); }

std::string debias_to_json(const std::vector<MethodResult>& results) { return debias_json(results).dump(2); }

std::string predictions_to_jsonl(std::span<const Prediction> preds) {
  std::string out;
  for (const auto& p : preds) {
    ojson j;
    j["id"] = p.mention_id;
    j["trigger_index"] = p.trigger_index;
    j["trigger"] = p.trigger_word;
    j["label"] = p.label;
    j["distribution"] = std::vector<double>(p.label_distribution.data(),
                                            p.label_distribution.data() + p.label_distribution.size());
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string render_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::size_t name_w = 8;
  for (const auto& [name, _] : rows) name_w = std::max(name_w, name.size());
  auto line = [&](const std::string& name, const std::array<std::string, 6>& cols) {
    std::string s = name + std::string(name_w - name.size(), ' ');
    for (const auto& c : cols) s += "  " + std::string(c.size() < 9 ? 9 - c.size() : 0, ' ') + c;
    return s + '\n';
  };
  auto pct = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return std::string(buf);
  };
  std::string out = line("", {"N", "TrigAcc", "Acc", "Precision", "Recall", "F1"});
  out += std::string(name_w + 6 * 11, '-') + '\n';
  for (const auto& [name, r] : rows)
    out += line(name, {std::to_string(r.n), pct(r.trigger_accuracy), pct(r.accuracy), pct(r.weighted_precision),
                       pct(r.weighted_recall), pct(r.weighted_f1)});
  return out;
}

}  // namespace fsed
