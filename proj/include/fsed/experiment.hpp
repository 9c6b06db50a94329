#pragma once

#include <string>
#include <vector>

#include "fsed/promptkit.hpp"
#include "fsed/trainer.hpp"

namespace fsed {

// One configuration in an ablation grid.
struct Variant {
  std::string name;
  std::string group;  // "sequence" or "component"
  PromptConfig prompt;
  Ablations ablations;
};

// Input-sequence variants: both recognizer orders (classifier at the base
// order), then all six classifier orders (recognizer at the base order).
std::vector<Variant> sequence_variants(const PromptConfig& base);

// Component ablations: the full model, then each switch on its own.
std::vector<Variant> component_variants(const PromptConfig& base);

struct VariantResult {
  Variant variant;
  SeedAggregate aggregate;
};

// Trains and evaluates every variant over cfg.seeds on the split's test set.
// The variant's ablations replace cfg.ablations.
std::vector<VariantResult> run_variants(const std::vector<Variant>& variants, const FewShotSplit& split,
                                        const Corpus& corpus, const TrainConfig& cfg);

nlohmann::ordered_json variant_results_json(const std::vector<VariantResult>& results);

// Plain-text table: one row per variant with mean metrics in percent.
std::string render_variant_table(const std::vector<VariantResult>& results);

}  // namespace fsed
