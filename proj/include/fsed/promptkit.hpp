#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fsed/corpus.hpp"

namespace fsed {

inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";

// Body segments of a prompt: mention, ontology text, trigger clause.
enum class Segment { kMention, kOntology, kTrigger };

// Recognizer body order (mention/ontology) and classifier body order (a
// permutation of mention/ontology/trigger), written as "M+O", "M+O+T", ...
using TriggerOrder = std::array<Segment, 2>;
using EventOrder = std::array<Segment, 3>;

std::string order_name(std::span<const Segment> order);
TriggerOrder parse_trigger_order(std::string_view s);
EventOrder parse_event_order(std::string_view s);
const std::array<TriggerOrder, 2>& all_trigger_orders();
const std::array<EventOrder, 6>& all_event_orders();

struct PromptConfig {
  std::string trigger_template = "Trigger word is [MASK].";
  std::string event_template = "This is event about [MASK].";
  std::string ontology_trigger =
      "Trigger word: a word that can trigger an event, usually a verb or noun in the sentence.";
  std::string ontology_event = "Event: which type the sentence or trigger belongs to.";
  TriggerOrder trigger_order{Segment::kMention, Segment::kOntology};
  EventOrder event_order{Segment::kMention, Segment::kOntology, Segment::kTrigger};
  bool use_ontology = true;
  std::string inner_separator = " [SEP] ";

  // Throws UsageError unless both templates carry exactly one [MASK].
  void validate() const;
  bool operator==(const PromptConfig&) const = default;
};

// An assembled cloze input. `words` is the prompt's word sequence (special
// markers are standalone words); `text` is its rendering.
struct PromptInstance {
  std::string text;
  std::vector<std::string> words;
  std::size_t mask_word_index = 0;
  std::vector<std::size_t> candidate_word_indices;
  std::vector<std::size_t> mention_word_map;
};

// Joins mention words with spaces, without a space before closing punctuation
// and clitics ("there ." renders as "there.").
std::string detokenize(std::span<const std::string> words);

PromptInstance assemble_trigger_prompt(const EventMention& m, const PromptConfig& cfg);
PromptInstance assemble_event_prompt(const EventMention& m, std::string_view trigger_word, const PromptConfig& cfg);
// Classifier prompt without the trigger clause, used when the recognizer is ablated.
PromptInstance assemble_event_prompt_without_trigger(const EventMention& m, const PromptConfig& cfg);
// "[CLS] mention [SEP]", used when the classifier prompt is ablated. It has no
// [MASK]; mask_word_index points at [CLS], the position read out instead.
PromptInstance assemble_plain_prompt(const EventMention& m);

// ---------------------------------------------------------------------------
// Subword mapping

class Vocabulary {
 public:
  // Specials always occupy ids 0..4 in the order PAD, UNK, CLS, SEP, MASK.
  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& tokens);

  int add(const std::string& token);
  bool contains(std::string_view token) const;
  // Returns the [UNK] id for unknown tokens.
  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  int pad_id() const { return 0; }
  int unk_id() const { return 1; }
  int cls_id() const { return 2; }
  int sep_id() const { return 3; }
  int mask_id() const { return 4; }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  // Token strings for one non-special word; must be nonempty and deterministic.
  virtual std::vector<std::string> segment(std::string_view word) const = 0;
};

// Every word is one token, unchanged.
class WhitespaceSegmenter final : public Segmenter {
 public:
  std::vector<std::string> segment(std::string_view word) const override { return {std::string(word)}; }
};

// Lowercases, splits ASCII punctuation off, then greedy longest-match-first
// with "##" continuation pieces. Words that cannot be covered become [UNK].
class WordPieceSegmenter final : public Segmenter {
 public:
  explicit WordPieceSegmenter(const Vocabulary& vocab, bool lowercase = true, std::size_t max_chars = 100)
      : vocab_(&vocab), lowercase_(lowercase), max_chars_(max_chars) {}
  std::vector<std::string> segment(std::string_view word) const override;

 private:
  const Vocabulary* vocab_;
  bool lowercase_;
  std::size_t max_chars_;
};

// Splits on whitespace and ASCII punctuation (the same pre-split the
// WordPiece segmenter applies), lowercased.
std::vector<std::string> basic_pieces(std::string_view text, bool lowercase = true);

struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::size_t size() const { return end - begin; }
};

struct TokenizedPrompt {
  std::vector<int> ids;
  std::size_t mask_token = 0;
  // One span per kept mention word, in mention order.
  std::vector<TokenSpan> mention_spans;
  // Mention words removed from the tail to fit max_tokens.
  std::size_t truncated_words = 0;
  std::size_t kept_mention_words() const { return mention_spans.size(); }
};

// Throws DataError when even a mention-free prompt exceeds max_tokens.
TokenizedPrompt map_words_to_tokens(const PromptInstance& p, const Segmenter& segmenter, const Vocabulary& vocab,
                                    std::size_t max_tokens);

}  // namespace fsed
