#include "fsed/json_io.hpp"

#include "fsed/error.hpp"

namespace fsed {

namespace {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& dst) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    dst = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw UsageError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

ojson prompt_config_json(const PromptConfig& cfg) {
  ojson j;
  j["trigger_template"] = cfg.trigger_template;
  j["event_template"] = cfg.event_template;
  j["ontology_trigger"] = cfg.ontology_trigger;
  j["ontology_event"] = cfg.ontology_event;
  j["trigger_order"] = order_name(cfg.trigger_order);
  j["event_order"] = order_name(cfg.event_order);
  j["use_ontology"] = cfg.use_ontology;
  j["inner_separator"] = cfg.inner_separator;
  return j;
}

PromptConfig prompt_config_from_json(const nlohmann::json& j) {
  PromptConfig cfg;
  read_opt(j, "trigger_template", cfg.trigger_template);
  read_opt(j, "event_template", cfg.event_template);
  read_opt(j, "ontology_trigger", cfg.ontology_trigger);
  read_opt(j, "ontology_event", cfg.ontology_event);
  std::string order;
  read_opt(j, "trigger_order", order);
  if (!order.empty()) cfg.trigger_order = parse_trigger_order(order);
  order.clear();
  read_opt(j, "event_order", order);
  if (!order.empty()) cfg.event_order = parse_event_order(order);
  read_opt(j, "use_ontology", cfg.use_ontology);
  read_opt(j, "inner_separator", cfg.inner_separator);
  cfg.validate();
  return cfg;
}

ojson encoder_spec_json(const EncoderSpec& spec) {
  ojson j;
  j["kind"] = std::string(to_string(spec.kind));
  j["identifier"] = spec.identifier;
  j["max_tokens"] = spec.max_tokens;
  j["dim"] = spec.dim;
  j["seed"] = spec.seed;
  return j;
}

EncoderSpec encoder_spec_from_json(const nlohmann::json& j) {
  EncoderSpec spec;
  std::string kind = "toy";
  read_opt(j, "kind", kind);
  spec.kind = parse_encoder_kind(kind);
  spec.identifier = spec.kind == EncoderKind::kToy ? "toy" : "bert-base-uncased";
  read_opt(j, "identifier", spec.identifier);
  read_opt(j, "max_tokens", spec.max_tokens);
  read_opt(j, "dim", spec.dim);
  read_opt(j, "seed", spec.seed);
  return spec;
}

ojson model_options_json(const ModelOptions& o) {
  ojson j;
  j["distance"] = std::string(to_string(o.distance));
  j["alpha"] = o.alpha;
  j["beta"] = o.beta;
  j["ablations"] = {{"no_trigger_recognizer", o.ablations.no_trigger_recognizer},
                    {"no_event_classifier_prompt", o.ablations.no_event_classifier_prompt},
                    {"no_ontology", o.ablations.no_ontology}};
  return j;
}

ModelOptions model_options_from_json(const nlohmann::json& j) {
  ModelOptions o;
  std::string dist = "euclidean";
  read_opt(j, "distance", dist);
  o.distance = parse_distance(dist);
  read_opt(j, "alpha", o.alpha);
  read_opt(j, "beta", o.beta);
  if (auto it = j.find("ablations"); it != j.end()) {
    read_opt(*it, "no_trigger_recognizer", o.ablations.no_trigger_recognizer);
    read_opt(*it, "no_event_classifier_prompt", o.ablations.no_event_classifier_prompt);
    read_opt(*it, "no_ontology", o.ablations.no_ontology);
  }
  return o;
}

ojson report_json(const EvalReport& r) {
  ojson j;
  j["n"] = r.n;
  j["accuracy"] = r.accuracy;
  j["weighted_precision"] = r.weighted_precision;
  j["weighted_recall"] = r.weighted_recall;
  j["weighted_f1"] = r.weighted_f1;
  j["trigger_accuracy"] = r.trigger_accuracy;
  ojson per = ojson::object();
  for (const auto& [label, m] : r.per_label)
    per[label] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  j["per_label"] = per;
  return j;
}

ojson bucketed_json(const BucketedReport& r) {
  ojson j;
  ojson buckets = ojson::array();
  for (const auto& b : r.buckets) {
    ojson e;
    e["interval"] = "(" + std::to_string(b.lo) + "," + std::to_string(b.hi) + "]";
    e["count"] = b.count;
    e["report"] = b.report ? report_json(*b.report) : ojson(nullptr);
    buckets.push_back(std::move(e));
  }
  j["buckets"] = buckets;
  j["out_of_range"] = r.out_of_range;
  return j;
}

ojson debias_json(const std::vector<MethodResult>& results) {
  ojson j = ojson::object();
  for (const auto& r : results) {
    ojson e;
    e["available"] = r.report.has_value();
    e["report"] = r.report ? report_json(*r.report) : ojson(nullptr);
    if (!r.error.empty()) e["error"] = r.error;
    ojson skipped = ojson::array();
    for (const auto& s : r.skipped) skipped.push_back({{"label", s.label}, {"reason", s.reason}});
    e["skipped"] = skipped;
    j[r.method] = std::move(e);
  }
  return j;
}

}  // namespace fsed
