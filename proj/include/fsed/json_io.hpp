#pragma once

// JSON conversions shared by the checkpoint format, the CLI and reports.

#include <vector>

#include <nlohmann/json.hpp>

#include "fsed/encoder.hpp"
#include "fsed/evaluator.hpp"
#include "fsed/model.hpp"
#include "fsed/promptkit.hpp"

namespace fsed {

using ojson = nlohmann::ordered_json;

ojson prompt_config_json(const PromptConfig& cfg);
// Missing keys keep their defaults.
PromptConfig prompt_config_from_json(const nlohmann::json& j);

// Without the vocabulary, which checkpoints store on their own.
ojson encoder_spec_json(const EncoderSpec& spec);
EncoderSpec encoder_spec_from_json(const nlohmann::json& j);

ojson model_options_json(const ModelOptions& o);
ModelOptions model_options_from_json(const nlohmann::json& j);

ojson report_json(const EvalReport& r);
ojson bucketed_json(const BucketedReport& r);
ojson debias_json(const std::vector<MethodResult>& results);

}  // namespace fsed
