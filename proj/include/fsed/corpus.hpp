#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fsed {

// One annotated sentence. The trigger span is a half-open word interval.
struct EventMention {
  std::string id;
  std::vector<std::string> words;
  std::size_t trigger_start = 0;
  std::size_t trigger_end = 0;
  std::string trigger_text;
  std::string label;

  std::size_t length() const { return words.size(); }
  // First word of the gold span; the recognizer is trained to emit one word.
  const std::string& gold_trigger_word() const { return words.at(trigger_start); }
  bool operator==(const EventMention&) const = default;
};

// ASCII case folding; bytes outside ASCII are left untouched.
std::string casefold(std::string_view s);

// Grouping key for trigger-level statistics and samplers.
inline std::string trigger_key(const EventMention& m) { return casefold(m.trigger_text); }

enum class Violation {
  kEmptyWords,
  kEmptySpan,
  kSpanOutOfRange,
  kTextMismatch,
  kEmptyLabel,
  kEmptyId,
};

std::string_view to_string(Violation v);

struct ValidationReport {
  bool valid = true;
  std::vector<Violation> reasons;
};

ValidationReport validate_mention(const EventMention& m);

class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<std::string> labels);

  // Appends the label if absent; returns its position.
  std::size_t add(const std::string& label);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  bool contains(const std::string& label) const { return index_.count(label) != 0; }
  std::optional<std::size_t> find(const std::string& label) const;
  // Throws std::out_of_range for unknown labels.
  std::size_t index_of(const std::string& label) const;
  const std::string& at(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }

  bool operator==(const LabelSpace& o) const { return labels_ == o.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct DroppedRecord {
  std::size_t line = 0;  // 1-based
  std::string id;
  std::vector<std::string> reasons;
};

struct Provenance {
  std::string source;
  std::string format_version = "fsed-jsonl/1";
};

class Corpus {
 public:
  Corpus() = default;
  // Throws DataError if ids repeat. Labels are ordered by first appearance.
  explicit Corpus(std::vector<EventMention> mentions, Provenance provenance = {});

  const std::vector<EventMention>& mentions() const { return mentions_; }
  const LabelSpace& labels() const { return labels_; }
  const Provenance& provenance() const { return provenance_; }
  const std::vector<DroppedRecord>& dropped() const { return dropped_; }
  void set_dropped(std::vector<DroppedRecord> d) { dropped_ = std::move(d); }

  std::size_t size() const { return mentions_.size(); }
  bool empty() const { return mentions_.empty(); }
  const EventMention& at(std::size_t i) const { return mentions_.at(i); }
  // Position of a mention id; throws std::out_of_range when absent.
  std::size_t position_of(const std::string& id) const;
  const EventMention& by_id(const std::string& id) const { return mentions_[position_of(id)]; }

 private:
  std::vector<EventMention> mentions_;
  LabelSpace labels_;
  Provenance provenance_;
  std::vector<DroppedRecord> dropped_;
  std::unordered_map<std::string, std::size_t> id_index_;
};

enum class CorpusFormat { kJsonl };

// Loads a JSONL corpus. Structurally malformed records throw DataError;
// records that violate mention invariants (or repeat an id) are dropped and
// listed in Corpus::dropped().
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format = CorpusFormat::kJsonl);
Corpus parse_corpus(std::string_view jsonl, std::string source = "<memory>");

std::string serialize_mention(const EventMention& m);
std::string serialize_corpus(const Corpus& c);
void write_corpus(const Corpus& c, const std::filesystem::path& path);

// Source, format version, loaded and dropped counts with reasons.
std::string manifest_json(const Corpus& c);

struct CorpusStats {
  std::size_t n_types = 0;
  std::size_t n_mentions = 0;
  double mean_mentions_per_type = 0.0;
  double mean_mention_length = 0.0;
  double mean_trigger_length = 0.0;
  std::map<std::string, std::size_t> per_type_counts;
};

CorpusStats corpus_stats(const Corpus& c);

struct BiasProfile {
  std::size_t k = 0;
  std::map<std::string, std::map<std::string, std::size_t>> per_type_trigger_hist;
  std::map<std::string, std::map<std::string, std::size_t>> per_trigger_type_hist;
  std::map<std::string, double> topk_trigger_share;
  std::map<std::string, double> topk_type_share;
};

BiasProfile trigger_bias_profile(const Corpus& c, std::size_t k);

// Sum of the k largest counts over the total.
double topk_share(const std::map<std::string, std::size_t>& hist, std::size_t k);

std::string stats_json(const CorpusStats& s);
std::string bias_json(const BiasProfile& b);

}  // namespace fsed
