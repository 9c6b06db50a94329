#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fsed/corpus.hpp"
#include "fsed/rng.hpp"

namespace fsed {

enum class SplitMethod { kTrueFewShot, kFullData };

// Train/valid/test partition of mention ids.
struct FewShotSplit {
  SplitMethod method = SplitMethod::kTrueFewShot;
  std::size_t k = 0;  // 0 for full-data splits
  std::uint64_t seed = Rng::kDefaultSeed;
  LabelSpace kept_labels;
  std::vector<std::string> train;
  std::vector<std::string> valid;
  std::vector<std::string> test;
};

// K shots per label for train, K more for valid, the rest of the label's
// mentions for test. Labels with <= 2K mentions are dropped before sampling.
FewShotSplit make_true_fewshot_split(const Corpus& c, std::size_t k, std::uint64_t seed = Rng::kDefaultSeed);

// Per-label 8:1:1 partition. Each label gets floor(0.8n)/floor(0.1n)/floor(0.1n)
// and the leftover (at most 2) goes one each to test, then train.
FewShotSplit make_fulldata_split(const Corpus& c, std::uint64_t seed = Rng::kDefaultSeed);

struct FullDataSizes {
  std::size_t train = 0, valid = 0, test = 0;
};
FullDataSizes fulldata_sizes(std::size_t n);

std::string split_to_json(const FewShotSplit& s);
FewShotSplit split_from_json(std::string_view json);
void save_split(const FewShotSplit& s, const std::filesystem::path& path);
FewShotSplit load_split(const std::filesystem::path& path);

enum class SamplerMethod { kIus, kTus, kCos };
std::string_view to_string(SamplerMethod m);

struct SkippedLabel {
  std::string label;
  std::string reason;
};

struct TestSubset {
  SamplerMethod method = SamplerMethod::kIus;
  std::size_t k = 0;
  std::uint64_t seed = Rng::kDefaultSeed;
  std::vector<std::string> ids;
  std::vector<SkippedLabel> skipped;
};

// Samplers draw from `pool` (mention ids, normally a split's test set), grouped
// by label in the corpus label order. Trigger groups use case-folded trigger text.
TestSubset sample_ius(const Corpus& c, const std::vector<std::string>& pool, std::size_t k,
                      std::uint64_t seed = Rng::kDefaultSeed);
TestSubset sample_tus(const Corpus& c, const std::vector<std::string>& pool, std::size_t k,
                      std::uint64_t seed = Rng::kDefaultSeed);
// Restricted to triggers attested under >= 2 labels anywhere in `c`. Labels with
// fewer than k such mentions in the pool are skipped and listed.
TestSubset sample_cos(const Corpus& c, const std::vector<std::string>& pool, std::size_t k,
                      std::uint64_t seed = Rng::kDefaultSeed);

// Case-folded trigger strings that occur under at least two labels.
std::vector<std::string> confusing_triggers(const Corpus& c);

std::string subset_to_json(const TestSubset& s);

}  // namespace fsed
