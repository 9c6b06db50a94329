#pragma once

// Shared fixtures and brute-force oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fsed/corpus.hpp"
#include "fsed/evaluator.hpp"
#include "fsed/rng.hpp"
#include "fsed/sampler.hpp"

namespace fsed::testing {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(FSED_FIXTURE_DIR) / rel; }

inline std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline EventMention mention(std::string id, const std::string& sentence, std::size_t start, std::size_t end,
                            std::string label) {
  EventMention m;
  m.id = std::move(id);
  m.words = split_words(sentence);
  m.trigger_start = start;
  m.trigger_end = end;
  for (std::size_t i = start; i < end && i < m.words.size(); ++i) m.trigger_text += (i > start ? " " : "") + m.words[i];
  m.label = std::move(label);
  return m;
}

// Mention whose trigger is an explicit word; the sentence is "<trigger> happened here".
inline EventMention keyed(std::string id, const std::string& trigger, std::string label) {
  return mention(std::move(id), trigger + " happened here", 0, 1, std::move(label));
}

inline std::vector<std::string> agree_words() {
  return {"And", "I", "agree", "that", "we", "shouldn't", "send", "people", "over", "there", "."};
}

inline EventMention agree_mention() {
  EventMention m;
  m.id = "agree";
  m.words = agree_words();
  m.trigger_start = 6;
  m.trigger_end = 7;
  m.trigger_text = "send";
  m.label = "Movement.Transport";
  return m;
}

// Re-derives a K-shot split by direct enumeration: labels in order of first
// appearance, ids of each label scanned from the corpus, one generator shared
// across labels in that order.
inline FewShotSplit brute_force_split(const Corpus& c, std::size_t k, std::uint64_t seed) {
  std::vector<std::string> order;
  for (const auto& m : c.mentions())
    if (std::find(order.begin(), order.end(), m.label) == order.end()) order.push_back(m.label);
  FewShotSplit s;
  s.k = k;
  s.seed = seed;
  Rng rng(seed);
  std::set<std::string> kept, picked;
  for (const auto& label : order) {
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c.at(i).label == label) pos.push_back(i);
    if (pos.size() <= 2 * k) continue;
    kept.insert(label);
    s.kept_labels.add(label);
    rng.shuffle(pos);
    for (std::size_t i = 0; i < 2 * k; ++i) {
      (i < k ? s.train : s.valid).push_back(c.at(pos[i]).id);
      picked.insert(c.at(pos[i]).id);
    }
  }
  for (const auto& m : c.mentions())
    if (kept.count(m.label) && !picked.count(m.id)) s.test.push_back(m.id);
  return s;
}

struct OracleMetrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};

// Weighted metrics straight from a dense confusion matrix (rows gold, cols predicted).
inline OracleMetrics metrics_from_confusion(const std::vector<std::vector<long>>& cm) {
  const std::size_t n = cm.size();
  long total = 0, diag = 0;
  for (std::size_t g = 0; g < n; ++g)
    for (std::size_t p = 0; p < n; ++p) {
      total += cm[g][p];
      if (g == p) diag += cm[g][p];
    }
  OracleMetrics o;
  o.accuracy = static_cast<double>(diag) / static_cast<double>(total);
  for (std::size_t j = 0; j < n; ++j) {
    long support = 0, predicted = 0;
    for (std::size_t i = 0; i < n; ++i) {
      support += cm[j][i];
      predicted += cm[i][j];
    }
    if (support == 0) continue;
    const double tp = static_cast<double>(cm[j][j]);
    const double p = predicted == 0 ? 0.0 : tp / static_cast<double>(predicted);
    const double r = tp / static_cast<double>(support);
    const double f = (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    const double w = static_cast<double>(support) / static_cast<double>(total);
    o.precision += w * p;
    o.recall += w * r;
    o.f1 += w * f;
  }
  return o;
}

// Predictions and gold mentions realizing a confusion matrix over labels "L0".."Ln-1".
inline void realize_confusion(const std::vector<std::vector<long>>& cm, std::vector<Prediction>& preds,
                              std::vector<EventMention>& golds) {
  std::size_t id = 0;
  for (std::size_t g = 0; g < cm.size(); ++g)
    for (std::size_t p = 0; p < cm.size(); ++p)
      for (long r = 0; r < cm[g][p]; ++r) {
        auto m = keyed("x" + std::to_string(id++), "w", "L" + std::to_string(g));
        Prediction pr;
        pr.mention_id = m.id;
        pr.label_index = p;
        pr.label = "L" + std::to_string(p);
        pr.trigger_word = "w";
        golds.push_back(m);
        preds.push_back(pr);
      }
}

}  // namespace fsed::testing

#include "fsed/model.hpp"

namespace fsed::testing {

struct GradCheck {
  double worst = 0.0;       // largest relative error seen
  std::string worst_name;   // tensor holding it
  std::size_t checked = 0;  // entries compared
};

// Central-difference check of PromptModel::accumulate_gradients over every
// entry of every encoder tensor and the prototypes. Relative error is
// |a - n| / max(|a| + |n|, floor).
inline GradCheck check_gradients(PromptModel& model, const EventMention& m, double h = 1e-5, double floor = 1e-7) {
  auto g = model.zero_gradients();
  model.accumulate_gradients(m, g);
  GradCheck out;
  auto visit = [&](Matrix& param, const Matrix& grad, const std::string& name) {
    for (Eigen::Index r = 0; r < param.rows(); ++r)
      for (Eigen::Index c = 0; c < param.cols(); ++c) {
        const double old = param(r, c);
        param(r, c) = old + h;
        const double up = model.loss(m).total;
        param(r, c) = old - h;
        const double down = model.loss(m).total;
        param(r, c) = old;
        const double numeric = (up - down) / (2 * h);
        const double rel = std::abs(numeric - grad(r, c)) / std::max(std::abs(numeric) + std::abs(grad(r, c)), floor);
        ++out.checked;
        if (rel > out.worst) {
          out.worst = rel;
          out.worst_name = name;
        }
      }
  };
  auto& params = model.encoder().parameters();
  for (std::size_t i = 0; i < params.size(); ++i) visit(params[i].value, g.encoder[i].value, params[i].name);
  visit(model.prototypes().vectors, g.prototypes, "prototypes");
  return out;
}

}  // namespace fsed::testing
