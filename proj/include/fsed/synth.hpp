#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "fsed/corpus.hpp"

namespace fsed::synth {

// Keyword-triggered corpus: each type owns `keywords_per_type` trigger words
// that never occur elsewhere; the remaining words are neutral filler shared by
// all types. Mentions have 6-14 words.
Corpus separable_corpus(std::size_t n_types = 8, std::size_t per_type = 32, std::size_t keywords_per_type = 1,
                        std::uint64_t seed = 7);

// Trigger-shortcut corpus: type i is mostly triggered by its own keyword, and
// `confusing_per_type` of its mentions use a keyword shared with its pair type
// (0-1, 2-3, ...). Context words are uninformative filler, so the best a model
// can do on shared-keyword mentions is guess within the pair. n_types must be even.
Corpus shortcut_corpus(std::size_t n_types = 8, std::size_t per_type = 40, std::size_t confusing_per_type = 10,
                       std::uint64_t seed = 11);

// `counts[label]` mentions per label; trigger groups cycle through
// `triggers_per_label` label-specific words.
Corpus counts_corpus(const std::map<std::string, std::size_t>& counts, std::size_t triggers_per_label = 3,
                     std::uint64_t seed = 5);

// Random label counts in [1, max_count] over n_labels labels.
Corpus random_counts_corpus(std::size_t n_labels, std::size_t max_count, std::uint64_t seed);

}  // namespace fsed::synth
