#include "fsed/synth.hpp"

#include <array>
#include <string_view>

#include "fsed/error.hpp"
#include "fsed/rng.hpp"

namespace fsed::synth {

namespace {

constexpr std::array<std::string_view, 48> kFiller{
    "the",     "a",      "of",     "in",      "on",      "at",    "by",     "with",  "from",    "after",
    "before",  "during", "city",   "people",  "group",   "report", "officials", "yesterday", "today", "morning",
    "evening", "week",   "year",   "local",   "several", "many",  "two",    "three", "new",     "old",
    "north",   "south",  "river",  "market",  "school",  "office", "family", "team",  "police",  "border",
    "region",  "country", "village", "capital", "station", "bridge", "road",  "house"};

constexpr std::array<std::string_view, 32> kKeywords{
    "attacked", "bombed",   "married",  "wed",       "died",     "killed",   "elected",  "voted",
    "arrested", "detained", "sued",     "charged",   "met",      "talked",   "traveled", "moved",
    "injured",  "wounded",  "fired",    "resigned",  "born",     "delivered", "divorced", "separated",
    "merged",   "acquired", "launched", "founded",   "convicted", "sentenced", "paid",    "donated"};

std::string type_name(std::size_t i) { return "Type." + std::string(1, static_cast<char>('A' + i % 26)) +
                                              (i >= 26 ? std::to_string(i / 26) : std::string()); }

std::string keyword(std::size_t i) {
  if (i < kKeywords.size()) return std::string(kKeywords[i]);
  return "kw" + std::to_string(i);
}

EventMention make_mention(std::string id, std::string label, const std::string& trigger, Rng& rng) {
  const std::size_t len = 6 + static_cast<std::size_t>(rng.below(9));  // 6..14
  EventMention m;
  m.id = std::move(id);
  m.label = std::move(label);
  for (std::size_t i = 0; i + 1 < len; ++i) m.words.emplace_back(kFiller[rng.below(kFiller.size())]);
  const std::size_t pos = static_cast<std::size_t>(rng.below(len));
  m.words.insert(m.words.begin() + static_cast<std::ptrdiff_t>(pos), trigger);
  m.words.emplace_back(".");
  m.trigger_start = pos;
  m.trigger_end = pos + 1;
  m.trigger_text = trigger;
  return m;
}

}  // namespace

Corpus separable_corpus(std::size_t n_types, std::size_t per_type, std::size_t keywords_per_type, std::uint64_t seed) {
  if (n_types == 0 || per_type == 0 || keywords_per_type == 0) throw UsageError("separable_corpus: empty shape");
  Rng rng(seed);
  std::vector<EventMention> out;
  for (std::size_t t = 0; t < n_types; ++t) {
    for (std::size_t i = 0; i < per_type; ++i) {
      const auto kw = keyword(t * keywords_per_type + i % keywords_per_type);
      out.push_back(make_mention("sep-" + std::to_string(t) + "-" + std::to_string(i), type_name(t), kw, rng));
    }
  }
  return Corpus(std::move(out), Provenance{"synthetic:separable", "fsed-jsonl/1"});
}

Corpus shortcut_corpus(std::size_t n_types, std::size_t per_type, std::size_t confusing_per_type, std::uint64_t seed) {
  if (n_types < 2 || n_types % 2 != 0 || confusing_per_type >= per_type)
    throw UsageError("shortcut_corpus: bad shape");
  Rng rng(seed);
  std::vector<EventMention> out;
  for (std::size_t t = 0; t < n_types; ++t) {
    // Types 2j and 2j+1 share keyword n_types + j; each type also owns keyword t.
    const auto own = keyword(t);
    const auto shared = keyword(n_types + t / 2);
    for (std::size_t i = 0; i < per_type; ++i) {
      const auto& kw = i < confusing_per_type ? shared : own;
      out.push_back(make_mention("cut-" + std::to_string(t) + "-" + std::to_string(i), type_name(t), kw, rng));
    }
  }
  return Corpus(std::move(out), Provenance{"synthetic:shortcut", "fsed-jsonl/1"});
}

Corpus counts_corpus(const std::map<std::string, std::size_t>& counts, std::size_t triggers_per_label,
                     std::uint64_t seed) {
  if (triggers_per_label == 0) throw UsageError("counts_corpus: triggers_per_label must be positive");
  Rng rng(seed);
  std::vector<EventMention> out;
  std::size_t label_no = 0;
  for (const auto& [label, n] : counts) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto trig = "trig" + std::to_string(label_no) + "x" + std::to_string(i % triggers_per_label);
      out.push_back(make_mention(label + "-" + std::to_string(i), label, trig, rng));
    }
    ++label_no;
  }
  return Corpus(std::move(out), Provenance{"synthetic:counts", "fsed-jsonl/1"});
}

Corpus random_counts_corpus(std::size_t n_labels, std::size_t max_count, std::uint64_t seed) {
  Rng rng(seed);
  std::map<std::string, std::size_t> counts;
  for (std::size_t i = 0; i < n_labels; ++i)
    counts["L" + std::to_string(100 + i)] = 1 + static_cast<std::size_t>(rng.below(max_count));
  return counts_corpus(counts, 1 + static_cast<std::size_t>(rng.below(4)), seed + 1);
}

}  // namespace fsed::synth
