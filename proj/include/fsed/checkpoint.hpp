#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "fsed/model.hpp"

namespace fsed {

inline constexpr const char* kCheckpointFormat = "fsed-checkpoint/1";

// A checkpoint is a directory holding manifest.json (format version, encoder
// spec and vocabulary, prompt config, labels, model options, tensor table,
// caller metadata) and params.bin (magic "FSEDCKPT", then every tensor as
// little-endian row-major float64 in manifest order, prototypes last).
// The directory is written under a temporary name and renamed into place.
void save_checkpoint(const PromptModel& model, const std::filesystem::path& dir,
                     const nlohmann::ordered_json& metadata = nlohmann::ordered_json::object());

// Throws DataError on a missing, truncated or mismatched checkpoint.
PromptModel load_checkpoint(const std::filesystem::path& dir);
nlohmann::json read_checkpoint_manifest(const std::filesystem::path& dir);

// Writes `content` to `path` via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace fsed
