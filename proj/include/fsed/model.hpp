#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "fsed/corpus.hpp"
#include "fsed/encoder.hpp"
#include "fsed/promptkit.hpp"
#include "fsed/tensor.hpp"

namespace fsed {

// Guards -log(p) when p underflows to zero.
inline constexpr double kLogFloor = 1e-12;

enum class Distance { kEuclidean, kSquared };
std::string_view to_string(Distance d);
Distance parse_distance(std::string_view s);

// Max-shifted softmax.
Vector softmax(const Vector& scores);
// First index of the maximum (lowest index wins exact ties).
std::size_t argmax(const Vector& v);

struct TriggerPrediction {
  Vector distribution;  // over the kept mention words
  std::size_t predicted_index = 0;
  std::string predicted_word;
};

// Scores each candidate mention word by the mask logit of its first subword
// and normalizes over the candidates only.
TriggerPrediction recognize_trigger(const PromptInstance& prompt, const TokenizedPrompt& tokens,
                                    const EncoderOutput& enc);

double trigger_loss(const TriggerPrediction& pred, std::size_t gold_index);

struct EventEmbedding {
  Vector vector;
};

// Hidden state at the prompt's mask token.
EventEmbedding event_embedding(const TokenizedPrompt& tokens, const EncoderOutput& enc);

struct PrototypeSpace {
  Matrix vectors;  // N x d, rows aligned with the label space
  std::uint64_t seed = 0;
  std::size_t n() const { return static_cast<std::size_t>(vectors.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(vectors.cols()); }
};

// Entries i.i.d. N(0, 1/d).
PrototypeSpace init_prototypes(std::size_t n, std::size_t d, std::uint64_t seed);

struct EventPrediction {
  Vector distribution;
  std::size_t predicted_index = 0;
  std::string predicted_label;  // filled when a label space is supplied
};

Vector prototype_distances(const Vector& e0, const PrototypeSpace& protos, Distance distance = Distance::kEuclidean);

// p_j = softmax(-D(e0, e_j)).
EventPrediction classify_event(const EventEmbedding& e0, const PrototypeSpace& protos,
                               Distance distance = Distance::kEuclidean, const LabelSpace* labels = nullptr);

double event_loss(const EventPrediction& pred, std::size_t gold_index);

inline double joint_loss(double trigger, double event, double alpha = 1.0, double beta = 1.0) {
  return alpha * trigger + beta * event;
}

// d(trigger_loss)/d(candidate scores).
Vector trigger_loss_score_gradient(const TriggerPrediction& pred, std::size_t gold_index);

struct EventLossGradient {
  Vector embedding;   // d
  Matrix prototypes;  // N x d
};

EventLossGradient event_loss_gradient(const EventEmbedding& e0, const PrototypeSpace& protos,
                                      const EventPrediction& pred, std::size_t gold_index,
                                      Distance distance = Distance::kEuclidean);

// ---------------------------------------------------------------------------
// Two-step pipeline

struct Ablations {
  bool no_trigger_recognizer = false;
  bool no_event_classifier_prompt = false;
  bool no_ontology = false;
  bool any() const { return no_trigger_recognizer || no_event_classifier_prompt || no_ontology; }
  bool operator==(const Ablations&) const = default;
};

struct ModelOptions {
  Distance distance = Distance::kEuclidean;
  double alpha = 1.0;
  double beta = 1.0;
  Ablations ablations;
  bool operator==(const ModelOptions&) const = default;
};

struct Prediction {
  std::string mention_id;
  std::size_t trigger_index = 0;
  std::string trigger_word;
  std::size_t label_index = 0;
  std::string label;
  Vector label_distribution;
};

struct StepLoss {
  double trigger = 0.0;
  double event = 0.0;
  double total = 0.0;
  // Set when the gold trigger fell in the truncated mention tail; no trigger loss then.
  bool trigger_truncated = false;
};

struct ModelGradients {
  ParameterSet encoder;
  Matrix prototypes;
  void set_zero() {
    encoder.set_zero();
    prototypes.setZero();
  }
};

class PromptModel {
 public:
  PromptModel(std::unique_ptr<Encoder> encoder, PrototypeSpace prototypes, PromptConfig prompt, LabelSpace labels,
              ModelOptions options = {});
  PromptModel(const PromptModel& o);
  PromptModel& operator=(const PromptModel& o);
  PromptModel(PromptModel&&) noexcept = default;
  PromptModel& operator=(PromptModel&&) noexcept = default;

  const Encoder& encoder() const { return *encoder_; }
  Encoder& encoder() { return *encoder_; }
  const PrototypeSpace& prototypes() const { return prototypes_; }
  PrototypeSpace& prototypes() { return prototypes_; }
  const PromptConfig& prompt_config() const { return prompt_; }
  const LabelSpace& labels() const { return labels_; }
  const ModelOptions& options() const { return options_; }
  // Prompt configuration with the ontology ablation applied.
  PromptConfig effective_prompt() const;

  TokenizedPrompt tokenize(const PromptInstance& p) const;

  // Inference: recognize the trigger from the recognizer prompt, then classify
  // from the classifier prompt built with the predicted trigger.
  Prediction predict(const EventMention& m) const;

  // Training objective with the gold trigger in the classifier prompt.
  StepLoss loss(const EventMention& m) const;
  // Same as loss(), and adds its gradient into `grads`.
  StepLoss accumulate_gradients(const EventMention& m, ModelGradients& grads) const;

  ModelGradients zero_gradients() const;

  // Number of times a predicted trigger was fed into a classifier prompt.
  std::size_t handoff_count() const { return handoffs_->load(); }
  void reset_handoff_count() { handoffs_->store(0); }

 private:
  StepLoss run(const EventMention& m, ModelGradients* grads) const;

  std::unique_ptr<Encoder> encoder_;
  PrototypeSpace prototypes_;
  PromptConfig prompt_;
  LabelSpace labels_;
  ModelOptions options_;
  std::unique_ptr<std::atomic<std::size_t>> handoffs_ = std::make_unique<std::atomic<std::size_t>>(0);
};

// Lowercased basic pieces of every corpus word and every prompt string, after
// the five specials, sorted for a stable id assignment.
Vocabulary toy_vocabulary(const Corpus& c, const PromptConfig& prompt);

// Toy-backed model over `labels` with seeded encoder and prototypes.
PromptModel make_toy_model(const Corpus& c, const LabelSpace& labels, const PromptConfig& prompt,
                           const ModelOptions& options, std::size_t dim, std::uint64_t seed,
                           std::size_t max_tokens = 512);

}  // namespace fsed
