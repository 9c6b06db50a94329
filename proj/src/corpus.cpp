#include "fsed/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fsed/error.hpp"

namespace fsed {

using ojson = nlohmann::ordered_json;

std::string casefold(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string_view to_string(Violation v) {
  switch (v) {
    case Violation::kEmptyWords: return "empty-words";
    case Violation::kEmptySpan: return "empty-span";
    case Violation::kSpanOutOfRange: return "span-out-of-range";
    case Violation::kTextMismatch: return "text-mismatch";
    case Violation::kEmptyLabel: return "empty-label";
    case Violation::kEmptyId: return "empty-id";
  }
  return "unknown";
}

ValidationReport validate_mention(const EventMention& m) {
  ValidationReport r;
  auto fail = [&r](Violation v) {
    r.valid = false;
    r.reasons.push_back(v);
  };
  if (m.id.empty()) fail(Violation::kEmptyId);
  if (m.label.empty()) fail(Violation::kEmptyLabel);
  if (m.words.empty()) fail(Violation::kEmptyWords);
  bool span_ok = true;
  if (m.trigger_start >= m.trigger_end) {
    fail(Violation::kEmptySpan);
    span_ok = false;
  }
  if (m.trigger_end > m.words.size()) {
    fail(Violation::kSpanOutOfRange);
    span_ok = false;
  }
  if (span_ok) {
    std::string joined;
    for (std::size_t i = m.trigger_start; i < m.trigger_end; ++i) {
      if (i > m.trigger_start) joined += ' ';
      joined += m.words[i];
    }
    if (casefold(joined) != casefold(m.trigger_text)) fail(Violation::kTextMismatch);
  }
  return r;
}

LabelSpace::LabelSpace(std::vector<std::string> labels) {
  for (auto& l : labels) {
    if (contains(l)) throw UsageError("LabelSpace: duplicate label '" + l + "'");
    add(l);
  }
}

std::size_t LabelSpace::add(const std::string& label) {
  auto it = index_.find(label);
  if (it != index_.end()) return it->second;
  index_.emplace(label, labels_.size());
  labels_.push_back(label);
  return labels_.size() - 1;
}

std::optional<std::size_t> LabelSpace::find(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelSpace::index_of(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw std::out_of_range("unknown label '" + label + "'");
  return it->second;
}

Corpus::Corpus(std::vector<EventMention> mentions, Provenance provenance)
    : mentions_(std::move(mentions)), provenance_(std::move(provenance)) {
  for (std::size_t i = 0; i < mentions_.size(); ++i) {
    const auto& m = mentions_[i];
    if (!id_index_.emplace(m.id, i).second) throw DataError("duplicate mention id '" + m.id + "'");
    labels_.add(m.label);
  }
}

std::size_t Corpus::position_of(const std::string& id) const {
  auto it = id_index_.find(id);
  if (it == id_index_.end()) throw std::out_of_range("unknown mention id '" + id + "'");
  return it->second;
}

namespace {

template <typename T>
T required(const nlohmann::json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end())
    throw DataError("line " + std::to_string(line) + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError("line " + std::to_string(line) + ": field '" + key + "' has the wrong type");
  }
}

EventMention parse_record(const std::string& text, std::size_t line) {
  nlohmann::json rec;
  try {
    rec = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("line " + std::to_string(line) + ": invalid JSON (" + e.what() + ")");
  }
  if (!rec.is_object()) throw DataError("line " + std::to_string(line) + ": record is not an object");
  EventMention m;
  m.id = required<std::string>(rec, "id", line);
  m.words = required<std::vector<std::string>>(rec, "words", line);
  auto start = required<long long>(rec, "trigger_start", line);
  auto end = required<long long>(rec, "trigger_end", line);
  if (start < 0 || end < 0)
    throw DataError("line " + std::to_string(line) + ": negative trigger offsets");
  m.trigger_start = static_cast<std::size_t>(start);
  m.trigger_end = static_cast<std::size_t>(end);
  m.trigger_text = required<std::string>(rec, "trigger", line);
  m.label = required<std::string>(rec, "label", line);
  return m;
}

Corpus parse_stream(std::istream& in, std::string source) {
  std::vector<EventMention> kept;
  std::vector<DroppedRecord> dropped;
  std::unordered_map<std::string, std::size_t> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); }))
      continue;
    EventMention m = parse_record(text, line);
    auto report = validate_mention(m);
    DroppedRecord drop{line, m.id, {}};
    for (auto v : report.reasons) drop.reasons.emplace_back(to_string(v));
    if (report.valid && seen.count(m.id)) drop.reasons.emplace_back("duplicate-id");
    if (!drop.reasons.empty()) {
      dropped.push_back(std::move(drop));
      continue;
    }
    seen.emplace(m.id, kept.size());
    kept.push_back(std::move(m));
  }
  Corpus c(std::move(kept), Provenance{std::move(source), "fsed-jsonl/1"});
  c.set_dropped(std::move(dropped));
  return c;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  if (format != CorpusFormat::kJsonl) throw UsageError("unsupported corpus format");
  std::ifstream in(path);
  if (!in) throw DataError("cannot read corpus file '" + path.string() + "'");
  return parse_stream(in, path.string());
}

Corpus parse_corpus(std::string_view jsonl, std::string source) {
  std::istringstream in{std::string(jsonl)};
  return parse_stream(in, std::move(source));
}

std::string serialize_mention(const EventMention& m) {
  ojson rec;
  rec["id"] = m.id;
  rec["words"] = m.words;
  rec["trigger_start"] = m.trigger_start;
  rec["trigger_end"] = m.trigger_end;
  rec["trigger"] = m.trigger_text;
  rec["label"] = m.label;
  return rec.dump();
}

std::string serialize_corpus(const Corpus& c) {
  std::string out;
  for (const auto& m : c.mentions()) {
    out += serialize_mention(m);
    out += '\n';
  }
  return out;
}

void write_corpus(const Corpus& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << serialize_corpus(c);
}

std::string manifest_json(const Corpus& c) {
  ojson j;
  j["source"] = c.provenance().source;
  j["format_version"] = c.provenance().format_version;
  j["loaded"] = c.size();
  j["dropped"] = c.dropped().size();
  std::map<std::string, std::size_t> by_reason;
  ojson records = ojson::array();
  for (const auto& d : c.dropped()) {
    for (const auto& r : d.reasons) ++by_reason[r];
    records.push_back({{"line", d.line}, {"id", d.id}, {"reasons", d.reasons}});
  }
  j["drop_reasons"] = by_reason;
  j["dropped_records"] = records;
  return j.dump(2);
}

CorpusStats corpus_stats(const Corpus& c) {
  if (c.empty()) throw DataError("corpus_stats: empty corpus");
  CorpusStats s;
  double len_sum = 0.0;
  double trig_sum = 0.0;
  for (const auto& m : c.mentions()) {
    ++s.per_type_counts[m.label];
    len_sum += static_cast<double>(m.length());
    trig_sum += static_cast<double>(m.trigger_end - m.trigger_start);
  }
  s.n_types = s.per_type_counts.size();
  s.n_mentions = c.size();
  s.mean_mentions_per_type = static_cast<double>(s.n_mentions) / static_cast<double>(s.n_types);
  s.mean_mention_length = len_sum / static_cast<double>(s.n_mentions);
  s.mean_trigger_length = trig_sum / static_cast<double>(s.n_mentions);
  return s;
}

double topk_share(const std::map<std::string, std::size_t>& hist, std::size_t k) {
  std::vector<std::size_t> counts;
  counts.reserve(hist.size());
  for (const auto& [_, n] : hist) counts.push_back(n);
  std::sort(counts.begin(), counts.end(), std::greater<>());
  const auto total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) return 0.0;
  const auto take = std::min(k, counts.size());
  const auto top = std::accumulate(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(take),
                                   std::size_t{0});
  return static_cast<double>(top) / static_cast<double>(total);
}

BiasProfile trigger_bias_profile(const Corpus& c, std::size_t k) {
  if (k == 0) throw UsageError("trigger_bias_profile: k must be >= 1");
  if (c.empty()) throw DataError("trigger_bias_profile: empty corpus");
  BiasProfile b;
  b.k = k;
  for (const auto& m : c.mentions()) {
    const auto key = trigger_key(m);
    ++b.per_type_trigger_hist[m.label][key];
    ++b.per_trigger_type_hist[key][m.label];
  }
  for (const auto& [type, hist] : b.per_type_trigger_hist) b.topk_trigger_share[type] = topk_share(hist, k);
  for (const auto& [trig, hist] : b.per_trigger_type_hist) b.topk_type_share[trig] = topk_share(hist, k);
  return b;
}

std::string stats_json(const CorpusStats& s) {
  ojson j;
  j["n_types"] = s.n_types;
  j["n_mentions"] = s.n_mentions;
  j["mean_mentions_per_type"] = s.mean_mentions_per_type;
  j["mean_mention_length"] = s.mean_mention_length;
  j["mean_trigger_length"] = s.mean_trigger_length;
  j["per_type_counts"] = s.per_type_counts;
  return j.dump(2);
}

std::string bias_json(const BiasProfile& b) {
  ojson j;
  j["k"] = b.k;
  j["topk_trigger_share"] = b.topk_trigger_share;
  j["topk_type_share"] = b.topk_type_share;
  j["per_type_trigger_hist"] = b.per_type_trigger_hist;
  j["per_trigger_type_hist"] = b.per_trigger_type_hist;
  return j.dump(2);
}

}  // namespace fsed
