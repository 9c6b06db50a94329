#include "fsed/experiment.hpp"

#include "fsed/evaluator.hpp"
#include "fsed/json_io.hpp"

namespace fsed {

std::vector<Variant> sequence_variants(const PromptConfig& base) {
  std::vector<Variant> out;
  for (const auto& order : all_trigger_orders()) {
    Variant v{order_name(order), "sequence", base, {}};
    v.prompt.trigger_order = order;
    out.push_back(std::move(v));
  }
  for (const auto& order : all_event_orders()) {
    Variant v{order_name(order), "sequence", base, {}};
    v.prompt.event_order = order;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Variant> component_variants(const PromptConfig& base) {
  std::vector<Variant> out;
  out.push_back({"full", "component", base, {}});
  Variant no_onto{"-ontology", "component", base, {}};
  no_onto.ablations.no_ontology = true;
  out.push_back(no_onto);
  Variant no_trig{"-trigger-recognizer", "component", base, {}};
  no_trig.ablations.no_trigger_recognizer = true;
  out.push_back(no_trig);
  Variant no_cls{"-event-classifier", "component", base, {}};
  no_cls.ablations.no_event_classifier_prompt = true;
  out.push_back(no_cls);
  return out;
}

std::vector<VariantResult> run_variants(const std::vector<Variant>& variants, const FewShotSplit& split,
                                        const Corpus& corpus, const TrainConfig& cfg) {
  std::vector<VariantResult> out;
  for (const auto& v : variants) {
    TrainConfig vc = cfg;
    vc.ablations = v.ablations;
    out.push_back({v, run_seeds(split, corpus, vc, v.prompt)});
  }
  return out;
}

nlohmann::ordered_json variant_results_json(const std::vector<VariantResult>& results) {
  ojson arr = ojson::array();
  for (const auto& r : results) {
    ojson j;
    j["variant"] = r.variant.name;
    j["group"] = r.variant.group;
    j["prompt"] = prompt_config_json(r.variant.prompt);
    ModelOptions o;
    o.ablations = r.variant.ablations;
    j["ablations"] = model_options_json(o)["ablations"];
    j["result"] = seed_aggregate_json(r.aggregate);
    arr.push_back(std::move(j));
  }
  return arr;
}

std::string render_variant_table(const std::vector<VariantResult>& results) {
  std::vector<std::pair<std::string, EvalReport>> rows;
  for (const auto& r : results) {
    EvalReport mean;
    if (!r.aggregate.per_seed.empty()) mean.n = r.aggregate.per_seed.front().n;
    mean.accuracy = r.aggregate.accuracy.mean;
    mean.weighted_precision = r.aggregate.weighted_precision.mean;
    mean.weighted_recall = r.aggregate.weighted_recall.mean;
    mean.weighted_f1 = r.aggregate.weighted_f1.mean;
    mean.trigger_accuracy = r.aggregate.trigger_accuracy.mean;
    rows.emplace_back(r.variant.name, mean);
  }
  return render_table(rows);
}

}  // namespace fsed
