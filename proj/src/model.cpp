#include "fsed/model.hpp"

#include <cmath>
#include <set>

#include "fsed/error.hpp"
#include "fsed/rng.hpp"

namespace fsed {

std::string_view to_string(Distance d) { return d == Distance::kEuclidean ? "euclidean" : "squared"; }

Distance parse_distance(std::string_view s) {
  if (s == "euclidean") return Distance::kEuclidean;
  if (s == "squared") return Distance::kSquared;
  throw UsageError("unknown distance '" + std::string(s) + "'");
}

Vector softmax(const Vector& scores) {
  if (scores.size() == 0) throw UsageError("softmax of an empty vector");
  const Vector e = (scores.array() - scores.maxCoeff()).exp().matrix();
  return e / e.sum();
}

std::size_t argmax(const Vector& v) {
  if (v.size() == 0) throw UsageError("argmax of an empty vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<std::size_t>(best);
}

namespace {

Vector candidate_scores(const TokenizedPrompt& tokens, const EncoderOutput& enc) {
  Vector s(static_cast<Eigen::Index>(tokens.mention_spans.size()));
  for (std::size_t j = 0; j < tokens.mention_spans.size(); ++j)
    s[static_cast<Eigen::Index>(j)] = enc.mask_vocab_logits[tokens.ids[tokens.mention_spans[j].begin]];
  return s;
}

double floored_nll(double p) { return -std::log(std::max(p, kLogFloor)); }

}  // namespace

TriggerPrediction recognize_trigger(const PromptInstance& prompt, const TokenizedPrompt& tokens,
                                    const EncoderOutput& enc) {
  if (tokens.mention_spans.empty()) throw UsageError("recognize_trigger: no candidate words");
  TriggerPrediction p;
  p.distribution = softmax(candidate_scores(tokens, enc));
  p.predicted_index = argmax(p.distribution);
  p.predicted_word = prompt.words.at(prompt.mention_word_map.at(p.predicted_index));
  return p;
}

double trigger_loss(const TriggerPrediction& pred, std::size_t gold_index) {
  if (gold_index >= static_cast<std::size_t>(pred.distribution.size()))
    throw UsageError("trigger_loss: gold index out of range");
  return floored_nll(pred.distribution[static_cast<Eigen::Index>(gold_index)]);
}

Vector trigger_loss_score_gradient(const TriggerPrediction& pred, std::size_t gold_index) {
  const auto g = static_cast<Eigen::Index>(gold_index);
  if (pred.distribution[g] < kLogFloor) return Vector::Zero(pred.distribution.size());
  Vector grad = pred.distribution;
  grad[g] -= 1.0;
  return grad;
}

EventEmbedding event_embedding(const TokenizedPrompt& tokens, const EncoderOutput& enc) {
  return {enc.hidden.row(static_cast<Eigen::Index>(tokens.mask_token)).transpose()};
}

PrototypeSpace init_prototypes(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || d == 0) throw UsageError("init_prototypes: n and d must be positive");
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  PrototypeSpace p;
  p.seed = seed;
  p.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < p.vectors.rows(); ++r)
    for (Eigen::Index c = 0; c < p.vectors.cols(); ++c) p.vectors(r, c) = s * rng.normal();
  return p;
}

Vector prototype_distances(const Vector& e0, const PrototypeSpace& protos, Distance distance) {
  if (static_cast<std::size_t>(e0.size()) != protos.d())
    throw UsageError("dimension mismatch: embedding " + std::to_string(e0.size()) + " vs prototypes " +
                     std::to_string(protos.d()));
  const Vector sq = (protos.vectors.rowwise() - e0.transpose()).rowwise().squaredNorm();
  return distance == Distance::kSquared ? sq : Vector(sq.array().sqrt().matrix());
}

EventPrediction classify_event(const EventEmbedding& e0, const PrototypeSpace& protos, Distance distance,
                               const LabelSpace* labels) {
  EventPrediction p;
  p.distribution = softmax(-prototype_distances(e0.vector, protos, distance));
  p.predicted_index = argmax(p.distribution);
  if (labels) p.predicted_label = labels->at(p.predicted_index);
  return p;
}

double event_loss(const EventPrediction& pred, std::size_t gold_index) {
  if (gold_index >= static_cast<std::size_t>(pred.distribution.size()))
    throw UsageError("event_loss: gold index out of range");
  return floored_nll(pred.distribution[static_cast<Eigen::Index>(gold_index)]);
}

EventLossGradient event_loss_gradient(const EventEmbedding& e0, const PrototypeSpace& protos,
                                      const EventPrediction& pred, std::size_t gold_index, Distance distance) {
  const auto g = static_cast<Eigen::Index>(gold_index);
  EventLossGradient out{Vector::Zero(e0.vector.size()), Matrix::Zero(protos.vectors.rows(), protos.vectors.cols())};
  if (pred.distribution[g] < kLogFloor) return out;
  // L = D_g + logsumexp(-D)  =>  dL/dD_j = [j == g] - p_j
  Vector d_dist = -pred.distribution;
  d_dist[g] += 1.0;
  const Vector dist = prototype_distances(e0.vector, protos, distance);
  for (Eigen::Index j = 0; j < protos.vectors.rows(); ++j) {
    const Vector diff = e0.vector - protos.vectors.row(j).transpose();
    Vector dd;
    if (distance == Distance::kSquared) {
      dd = 2.0 * diff;
    } else {
      if (dist[j] == 0.0) continue;  // subgradient 0 at coincident points
      dd = diff / dist[j];
    }
    out.embedding += d_dist[j] * dd;
    out.prototypes.row(j) -= d_dist[j] * dd.transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------

PromptModel::PromptModel(std::unique_ptr<Encoder> encoder, PrototypeSpace prototypes, PromptConfig prompt,
                         LabelSpace labels, ModelOptions options)
    : encoder_(std::move(encoder)),
      prototypes_(std::move(prototypes)),
      prompt_(std::move(prompt)),
      labels_(std::move(labels)),
      options_(options) {
  if (!encoder_) throw UsageError("PromptModel needs an encoder");
  prompt_.validate();
  if (prototypes_.n() != labels_.size()) throw UsageError("prototype rows must equal the number of labels");
  if (prototypes_.d() != encoder_->spec().dim) throw UsageError("prototype width must equal the encoder dimension");
}

PromptModel::PromptModel(const PromptModel& o)
    : encoder_(o.encoder_->clone()),
      prototypes_(o.prototypes_),
      prompt_(o.prompt_),
      labels_(o.labels_),
      options_(o.options_) {}

PromptModel& PromptModel::operator=(const PromptModel& o) {
  if (this != &o) {
    PromptModel tmp(o);
    *this = std::move(tmp);
  }
  return *this;
}

PromptConfig PromptModel::effective_prompt() const {
  PromptConfig cfg = prompt_;
  if (options_.ablations.no_ontology) cfg.use_ontology = false;
  return cfg;
}

TokenizedPrompt PromptModel::tokenize(const PromptInstance& p) const {
  const auto& spec = encoder_->spec();
  return map_words_to_tokens(p, encoder_->segmenter(), spec.vocab, spec.max_tokens);
}

ModelGradients PromptModel::zero_gradients() const {
  return {encoder_->parameters().zeros_like(), Matrix::Zero(prototypes_.vectors.rows(), prototypes_.vectors.cols())};
}

Prediction PromptModel::predict(const EventMention& m) const {
  const PromptConfig cfg = effective_prompt();
  const auto& ab = options_.ablations;
  Prediction out;
  out.mention_id = m.id;

  TriggerPrediction trig;
  PromptInstance classifier;
  if (ab.no_trigger_recognizer) {
    // Trigger read out at [CLS] of the classifier input; nothing is handed over.
    classifier = ab.no_event_classifier_prompt ? assemble_plain_prompt(m) : assemble_event_prompt_without_trigger(m, cfg);
    const auto tok = tokenize(classifier);
    trig = recognize_trigger(classifier, tok, encoder_->encode(tok.ids, 0));
  } else {
    const auto f1 = assemble_trigger_prompt(m, cfg);
    const auto tok1 = tokenize(f1);
    trig = recognize_trigger(f1, tok1, encoder_->encode(tok1.ids, tok1.mask_token));
    if (ab.no_event_classifier_prompt) {
      classifier = assemble_plain_prompt(m);
    } else {
      classifier = assemble_event_prompt(m, trig.predicted_word, cfg);
      handoffs_->fetch_add(1);
    }
  }
  out.trigger_index = trig.predicted_index;
  out.trigger_word = trig.predicted_word;

  const auto tok2 = tokenize(classifier);
  const auto enc2 = encoder_->encode(tok2.ids, tok2.mask_token);
  const auto ev = classify_event(event_embedding(tok2, enc2), prototypes_, options_.distance, &labels_);
  out.label_index = ev.predicted_index;
  out.label = ev.predicted_label;
  out.label_distribution = ev.distribution;
  return out;
}

StepLoss PromptModel::run(const EventMention& m, ModelGradients* grads) const {
  const PromptConfig cfg = effective_prompt();
  const auto& ab = options_.ablations;
  const std::size_t gold_label = labels_.index_of(m.label);
  StepLoss loss;

  if (!ab.no_trigger_recognizer && options_.alpha != 0.0) {
    const auto f1 = assemble_trigger_prompt(m, cfg);
    const auto tok1 = tokenize(f1);
    const std::size_t gold = m.trigger_start;
    if (gold >= tok1.kept_mention_words()) {
      loss.trigger_truncated = true;
    } else {
      const auto enc1 = encoder_->encode(tok1.ids, tok1.mask_token);
      const auto pred = recognize_trigger(f1, tok1, enc1);
      loss.trigger = trigger_loss(pred, gold);
      if (grads) {
        const Vector ds = options_.alpha * trigger_loss_score_gradient(pred, gold);
        Vector dz = Vector::Zero(enc1.mask_vocab_logits.size());
        for (std::size_t j = 0; j < tok1.mention_spans.size(); ++j)
          dz[tok1.ids[tok1.mention_spans[j].begin]] += ds[static_cast<Eigen::Index>(j)];
        encoder_->backward(tok1.ids, tok1.mask_token, dz, Vector(), grads->encoder);
      }
    }
  }

  PromptInstance classifier;
  if (ab.no_event_classifier_prompt)
    classifier = assemble_plain_prompt(m);
  else if (ab.no_trigger_recognizer)
    classifier = assemble_event_prompt_without_trigger(m, cfg);
  else
    classifier = assemble_event_prompt(m, m.gold_trigger_word(), cfg);  // teacher forcing
  const auto tok2 = tokenize(classifier);
  const auto enc2 = encoder_->encode(tok2.ids, tok2.mask_token);
  const auto e0 = event_embedding(tok2, enc2);
  const auto ev = classify_event(e0, prototypes_, options_.distance);
  loss.event = event_loss(ev, gold_label);
  if (grads && options_.beta != 0.0) {
    auto g = event_loss_gradient(e0, prototypes_, ev, gold_label, options_.distance);
    grads->prototypes += options_.beta * g.prototypes;
    encoder_->backward(tok2.ids, tok2.mask_token, Vector(), options_.beta * g.embedding, grads->encoder);
  }

  const double alpha = ab.no_trigger_recognizer ? 0.0 : options_.alpha;
  loss.total = joint_loss(loss.trigger, loss.event, alpha, options_.beta);
  return loss;
}

StepLoss PromptModel::loss(const EventMention& m) const { return run(m, nullptr); }

StepLoss PromptModel::accumulate_gradients(const EventMention& m, ModelGradients& grads) const {
  return run(m, &grads);
}

Vocabulary toy_vocabulary(const Corpus& c, const PromptConfig& prompt) {
  std::set<std::string> pieces;
  auto take = [&](std::string text) {
    for (auto marker : {kMaskToken, kSepToken, kClsToken})
      for (auto pos = text.find(marker); pos != std::string::npos; pos = text.find(marker))
        text.replace(pos, marker.size(), " ");
    for (auto& p : basic_pieces(text)) pieces.insert(std::move(p));
  };
  for (const auto& m : c.mentions())
    for (const auto& w : m.words) take(w);
  take(prompt.trigger_template);
  take(prompt.event_template);
  take(prompt.ontology_trigger);
  take(prompt.ontology_event);
  take(prompt.inner_separator);
  take("Trigger word is .");
  return Vocabulary(std::vector<std::string>(pieces.begin(), pieces.end()));
}

PromptModel make_toy_model(const Corpus& c, const LabelSpace& labels, const PromptConfig& prompt,
                           const ModelOptions& options, std::size_t dim, std::uint64_t seed, std::size_t max_tokens) {
  EncoderSpec spec;
  spec.kind = EncoderKind::kToy;
  spec.identifier = "toy";
  spec.dim = dim;
  spec.seed = seed;
  spec.max_tokens = max_tokens;
  spec.vocab = toy_vocabulary(c, prompt);
  auto encoder = std::make_unique<ToyEncoder>(std::move(spec));
  // Prototypes use the next seed so they do not share a stream with the encoder.
  return PromptModel(std::move(encoder), init_prototypes(labels.size(), dim, seed + 1), prompt, labels, options);
}

}  // namespace fsed
