#include "fsed/promptkit.hpp"

#include <algorithm>
#include <cctype>

#include "fsed/error.hpp"

namespace fsed {

namespace {

constexpr std::array<std::string_view, 3> kMarkers{kClsToken, kSepToken, kMaskToken};

bool is_marker(std::string_view w) {
  return std::find(kMarkers.begin(), kMarkers.end(), w) != kMarkers.end();
}

char segment_letter(Segment s) {
  switch (s) {
    case Segment::kMention: return 'M';
    case Segment::kOntology: return 'O';
    case Segment::kTrigger: return 'T';
  }
  return '?';
}

std::vector<Segment> parse_order(std::string_view s) {
  std::vector<Segment> out;
  for (char c : s) {
    switch (c) {
      case '+':
      case ' ': break;
      case 'M': out.push_back(Segment::kMention); break;
      case 'O': out.push_back(Segment::kOntology); break;
      case 'T': out.push_back(Segment::kTrigger); break;
      default: throw UsageError("bad segment order '" + std::string(s) + "'");
    }
  }
  return out;
}

std::size_t count_masks(std::string_view s) {
  std::size_t n = 0;
  for (auto pos = s.find(kMaskToken); pos != std::string_view::npos; pos = s.find(kMaskToken, pos + 1)) ++n;
  return n;
}

// Whitespace split with special markers separated from attached characters,
// so "[MASK]." yields "[MASK]" and ".".
std::vector<std::string> template_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    const std::string_view chunk = text.substr(i, j - i);
    std::string current;
    std::size_t k = 0;
    while (k < chunk.size()) {
      auto marker = std::find_if(kMarkers.begin(), kMarkers.end(),
                                 [&](std::string_view m) { return chunk.substr(k, m.size()) == m; });
      if (marker == kMarkers.end()) {
        current += chunk[k++];
        continue;
      }
      if (!current.empty()) out.push_back(std::exchange(current, {}));
      out.emplace_back(*marker);
      k += marker->size();
    }
    if (!current.empty()) out.push_back(std::move(current));
    i = j;
  }
  return out;
}

bool attaches_left(std::string_view w) {
  if (w.empty()) return false;
  if (w[0] == '\'' || casefold(w) == "n't") return true;
  return std::all_of(w.begin(), w.end(),
                     [](char c) { return std::string_view(".,;:!?)]}%").find(c) != std::string_view::npos; });
}

bool attaches_right(std::string_view w) { return w == "(" || w == "[" || w == "{" || w == "$"; }

// Accumulates the rendered text and the word sequence in lockstep.
class Builder {
 public:
  void raw(std::string_view text) {
    text_ += text;
    for (auto& w : template_words(text)) words_.push_back(std::move(w));
  }

  void mention(const EventMention& m) {
    text_ += detokenize(m.words);
    map_.clear();
    for (const auto& w : m.words) {
      map_.push_back(words_.size());
      words_.push_back(w);
    }
  }

  // A single prompt word, never split.
  void word(std::string_view w) {
    text_ += w;
    words_.emplace_back(w);
  }

  PromptInstance finish() && {
    PromptInstance p;
    p.text = std::move(text_);
    p.words = std::move(words_);
    p.mention_word_map = map_;
    p.candidate_word_indices = std::move(map_);
    auto it = std::find(p.words.begin(), p.words.end(), kMaskToken);
    p.mask_word_index = it == p.words.end() ? 0 : static_cast<std::size_t>(it - p.words.begin());
    return p;
  }

 private:
  std::string text_;
  std::vector<std::string> words_;
  std::vector<std::size_t> map_;
};

// "[CLS] " + template + " [SEP] " + body + " [SEP]"
PromptInstance assemble(std::string_view tmpl, const EventMention& m, std::span<const Segment> order,
                        std::string_view ontology, const PromptConfig& cfg, std::string_view trigger_word) {
  Builder b;
  b.raw(std::string(kClsToken) + " ");
  b.raw(tmpl);
  b.raw(" " + std::string(kSepToken) + " ");
  bool first = true;
  for (Segment s : order) {
    if (s == Segment::kOntology && !cfg.use_ontology) continue;
    if (!first) b.raw(cfg.inner_separator);
    first = false;
    switch (s) {
      case Segment::kMention: b.mention(m); break;
      case Segment::kOntology: b.raw(ontology); break;
      case Segment::kTrigger:
        b.raw("Trigger word is ");
        b.word(trigger_word);
        b.raw(".");
        break;
    }
  }
  b.raw(" " + std::string(kSepToken));
  return std::move(b).finish();
}

}  // namespace

std::string order_name(std::span<const Segment> order) {
  std::string out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) out += '+';
    out += segment_letter(order[i]);
  }
  return out;
}

TriggerOrder parse_trigger_order(std::string_view s) {
  const auto v = parse_order(s);
  if (v.size() != 2 || std::count(v.begin(), v.end(), Segment::kMention) != 1 ||
      std::count(v.begin(), v.end(), Segment::kOntology) != 1)
    throw UsageError("trigger order must be M+O or O+M, got '" + std::string(s) + "'");
  return {v[0], v[1]};
}

EventOrder parse_event_order(std::string_view s) {
  const auto v = parse_order(s);
  if (v.size() != 3 || std::count(v.begin(), v.end(), Segment::kMention) != 1 ||
      std::count(v.begin(), v.end(), Segment::kOntology) != 1 || std::count(v.begin(), v.end(), Segment::kTrigger) != 1)
    throw UsageError("event order must be a permutation of M, O, T, got '" + std::string(s) + "'");
  return {v[0], v[1], v[2]};
}

const std::array<TriggerOrder, 2>& all_trigger_orders() {
  static const std::array<TriggerOrder, 2> orders{parse_trigger_order("M+O"), parse_trigger_order("O+M")};
  return orders;
}

const std::array<EventOrder, 6>& all_event_orders() {
  static const std::array<EventOrder, 6> orders{
      parse_event_order("M+O+T"), parse_event_order("M+T+O"), parse_event_order("O+M+T"),
      parse_event_order("O+T+M"), parse_event_order("T+M+O"), parse_event_order("T+O+M")};
  return orders;
}

void PromptConfig::validate() const {
  if (count_masks(trigger_template) != 1) throw UsageError("trigger template must contain exactly one [MASK]");
  if (count_masks(event_template) != 1) throw UsageError("event template must contain exactly one [MASK]");
  for (const auto* onto : {&ontology_trigger, &ontology_event})
    if (count_masks(*onto) != 0) throw UsageError("ontology text must not contain [MASK]");
}

std::string detokenize(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0 && !attaches_left(words[i]) && !attaches_right(words[i - 1])) out += ' ';
    out += words[i];
  }
  return out;
}

PromptInstance assemble_trigger_prompt(const EventMention& m, const PromptConfig& cfg) {
  cfg.validate();
  return assemble(cfg.trigger_template, m, cfg.trigger_order, cfg.ontology_trigger, cfg, {});
}

PromptInstance assemble_event_prompt(const EventMention& m, std::string_view trigger_word, const PromptConfig& cfg) {
  cfg.validate();
  if (trigger_word.empty()) throw UsageError("trigger word must be nonempty");
  return assemble(cfg.event_template, m, cfg.event_order, cfg.ontology_event, cfg, trigger_word);
}

PromptInstance assemble_event_prompt_without_trigger(const EventMention& m, const PromptConfig& cfg) {
  cfg.validate();
  std::vector<Segment> order;
  for (Segment s : cfg.event_order)
    if (s != Segment::kTrigger) order.push_back(s);
  return assemble(cfg.event_template, m, order, cfg.ontology_event, cfg, {});
}

PromptInstance assemble_plain_prompt(const EventMention& m) {
  Builder b;
  b.raw(std::string(kClsToken) + " ");
  b.mention(m);
  b.raw(" " + std::string(kSepToken));
  return std::move(b).finish();
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() {
  for (auto s : {kPadToken, kUnkToken, kClsToken, kSepToken, kMaskToken}) add(std::string(s));
}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
  for (const auto& t : tokens) add(t);
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(token);
  return id;
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? unk_id() : it->second;
}

std::vector<std::string> basic_pieces(std::string_view text, bool lowercase) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::exchange(cur, {}));
  };
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      flush();
    } else if (uc < 128 && std::ispunct(uc)) {
      flush();
      out.emplace_back(1, c);
    } else {
      cur += lowercase && uc < 128 ? static_cast<char>(std::tolower(uc)) : c;
    }
  }
  flush();
  return out;
}

std::vector<std::string> WordPieceSegmenter::segment(std::string_view word) const {
  std::vector<std::string> out;
  for (const auto& piece : basic_pieces(word, lowercase_)) {
    if (piece.size() > max_chars_) {
      out.emplace_back(kUnkToken);
      continue;
    }
    std::vector<std::string> sub;
    std::size_t start = 0;
    bool bad = false;
    while (start < piece.size()) {
      std::size_t end = piece.size();
      std::string found;
      while (end > start) {
        std::string cand = piece.substr(start, end - start);
        if (start > 0) cand = "##" + cand;
        if (vocab_->contains(cand)) {
          found = std::move(cand);
          break;
        }
        --end;
      }
      if (found.empty()) {
        bad = true;
        break;
      }
      sub.push_back(std::move(found));
      start = end;
    }
    if (bad)
      out.emplace_back(kUnkToken);
    else
      out.insert(out.end(), sub.begin(), sub.end());
  }
  // A word made only of whitespace still occupies one position.
  if (out.empty()) out.emplace_back(kUnkToken);
  return out;
}

TokenizedPrompt map_words_to_tokens(const PromptInstance& p, const Segmenter& segmenter, const Vocabulary& vocab,
                                    std::size_t max_tokens) {
  std::vector<std::vector<int>> word_ids(p.words.size());
  for (std::size_t i = 0; i < p.words.size(); ++i) {
    const auto& w = p.words[i];
    if (is_marker(w)) {
      word_ids[i] = {vocab.id(w)};
      continue;
    }
    for (const auto& t : segmenter.segment(w)) word_ids[i].push_back(vocab.id(t));
    if (word_ids[i].empty()) throw RuntimeFailure("segmenter produced no tokens for '" + w + "'");
  }

  std::vector<bool> dropped(p.words.size(), false);
  std::size_t total = 0;
  for (const auto& ids : word_ids) total += ids.size();
  std::size_t kept = p.mention_word_map.size();
  while (total > max_tokens && kept > 0) {
    --kept;
    const auto w = p.mention_word_map[kept];
    dropped[w] = true;
    total -= word_ids[w].size();
  }
  if (total > max_tokens)
    throw DataError("prompt scaffolding alone needs " + std::to_string(total) + " tokens, limit is " +
                    std::to_string(max_tokens));

  TokenizedPrompt out;
  out.truncated_words = p.mention_word_map.size() - kept;
  std::vector<TokenSpan> spans(p.words.size());
  for (std::size_t i = 0; i < p.words.size(); ++i) {
    if (dropped[i]) continue;
    spans[i].begin = out.ids.size();
    out.ids.insert(out.ids.end(), word_ids[i].begin(), word_ids[i].end());
    spans[i].end = out.ids.size();
  }
  out.mask_token = spans[p.mask_word_index].begin;
  for (std::size_t j = 0; j < kept; ++j) out.mention_spans.push_back(spans[p.mention_word_map[j]]);
  return out;
}

}  // namespace fsed
