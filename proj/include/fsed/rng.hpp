#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace fsed {

// Seeded generator with a fixed, library-independent derivation of bounded
// integers, shuffles and normals. std::uniform_int_distribution, std::shuffle
// and std::normal_distribution are implementation-defined, so splits would not
// reproduce across standard libraries if we used them.
class Rng {
 public:
  static constexpr std::string_view kName = "mt19937_64/fsed-v1";
  static constexpr std::uint64_t kDefaultSeed = 42;

  explicit Rng(std::uint64_t seed = kDefaultSeed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();

  // Standard normal via Box-Muller; caches the second variate.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fsed
