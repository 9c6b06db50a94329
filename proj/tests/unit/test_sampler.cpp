#include <doctest.h>

#include <set>

#include "fsed/error.hpp"
#include "fsed/sampler.hpp"
#include "fsed/synth.hpp"
#include "support.hpp"

using namespace fsed;
using namespace fsed::testing;

namespace {

Corpus counts(std::map<std::string, std::size_t> c) { return synth::counts_corpus(c); }

std::map<std::string, std::size_t> per_label(const Corpus& c, const std::vector<std::string>& ids) {
  std::map<std::string, std::size_t> out;
  for (const auto& id : ids) ++out[c.by_id(id).label];
  return out;
}

std::map<std::string, std::size_t> per_trigger(const Corpus& c, const std::vector<std::string>& ids) {
  std::map<std::string, std::size_t> out;
  for (const auto& id : ids) ++out[trigger_key(c.by_id(id))];
  return out;
}

void check_split_invariants(const Corpus& c, const FewShotSplit& s) {
  const std::size_t k = s.k;
  CHECK(s.train.size() == k * s.kept_labels.size());
  CHECK(s.valid.size() == k * s.kept_labels.size());
  std::map<std::string, std::size_t> totals;
  for (const auto& m : c.mentions()) ++totals[m.label];
  for (const auto& [label, n] : totals) CHECK(s.kept_labels.contains(label) == (n > 2 * k));
  for (const auto& [label, n] : per_label(c, s.train)) CHECK(n == k);
  for (const auto& [label, n] : per_label(c, s.valid)) CHECK(n == k);
  std::set<std::string> seen;
  for (const auto* part : {&s.train, &s.valid, &s.test})
    for (const auto& id : *part) CHECK(seen.insert(id).second);
  std::size_t kept_total = 0;
  for (const auto& m : c.mentions())
    if (s.kept_labels.contains(m.label)) {
      ++kept_total;
      CHECK(seen.count(m.id) == 1);
    }
  CHECK(seen.size() == kept_total);
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("{A:10,B:9,C:5} with K=4") {
    const auto c = counts({{"A", 10}, {"B", 9}, {"C", 5}});
    const auto s = make_true_fewshot_split(c, 4, 42);
    CHECK(s.kept_labels.labels() == std::vector<std::string>{"A", "B"});
    CHECK(s.train.size() == 8);
    CHECK(s.valid.size() == 8);
    CHECK(s.test.size() == 3);
    check_split_invariants(c, s);
  }

  TEST_CASE("2K filter boundary and K=0") {
    CHECK_THROWS_AS(make_true_fewshot_split(counts({{"A", 8}}), 4, 42), DataError);
    CHECK_NOTHROW(make_true_fewshot_split(counts({{"A", 9}}), 4, 42));
    CHECK_THROWS_AS(make_true_fewshot_split(counts({{"A", 9}}), 0, 42), UsageError);
  }

  TEST_CASE("splits match the brute-force re-partitioner") {
    Rng meta(2024);
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t n_labels = 1 + meta.below(12);
      const std::size_t k = 1 + meta.below(8);
      const std::uint64_t seed = meta.next();
      Corpus c = synth::random_counts_corpus(n_labels, 40, meta.next());
      if (c.size() > 500) continue;
      bool survivors = false;
      for (const auto& [l, n] : corpus_stats(c).per_type_counts) survivors |= n > 2 * k;
      if (!survivors) {
        CHECK_THROWS_AS(make_true_fewshot_split(c, k, seed), DataError);
        continue;
      }
      const auto s = make_true_fewshot_split(c, k, seed);
      const auto o = brute_force_split(c, k, seed);
      CHECK(s.kept_labels == o.kept_labels);
      CHECK(s.train == o.train);
      CHECK(s.valid == o.valid);
      CHECK(s.test == o.test);
      check_split_invariants(c, s);
    }
  }

  TEST_CASE("determinism and seed sensitivity") {
    const auto c = counts({{"A", 30}, {"B", 25}});
    CHECK(split_to_json(make_true_fewshot_split(c, 4, 7)) == split_to_json(make_true_fewshot_split(c, 4, 7)));
    CHECK(make_true_fewshot_split(c, 4, 7).train != make_true_fewshot_split(c, 4, 8).train);
  }

  TEST_CASE("split JSON round trip") {
    const auto c = counts({{"A", 30}, {"B", 25}});
    const auto s = make_true_fewshot_split(c, 4, 7);
    const auto back = split_from_json(split_to_json(s));
    CHECK(back.train == s.train);
    CHECK(back.valid == s.valid);
    CHECK(back.test == s.test);
    CHECK(back.k == 4);
    CHECK(back.seed == 7);
    CHECK(back.kept_labels == s.kept_labels);
    CHECK_THROWS_AS(split_from_json("{}"), DataError);
  }

  TEST_CASE("full-data sizes") {
    CHECK(fulldata_sizes(10).train == 8);
    CHECK(fulldata_sizes(10).valid == 1);
    CHECK(fulldata_sizes(10).test == 1);
    const auto z = fulldata_sizes(25);
    CHECK(z.train == 20);
    CHECK(z.valid == 2);
    CHECK(z.test == 3);
    for (std::size_t n = 10; n < 300; ++n) {
      const auto q = fulldata_sizes(n);
      CHECK(q.train + q.valid + q.test == n);
      CHECK(q.valid == n / 10);
    }
  }

  TEST_CASE("full-data split") {
    const auto s = make_fulldata_split(counts({{"A", 10}}), 3);
    CHECK(s.train.size() == 8);
    CHECK(s.valid.size() == 1);
    CHECK(s.test.size() == 1);
    const auto t = make_fulldata_split(counts({{"A", 25}}), 3);
    CHECK(t.train.size() == 20);
    CHECK(t.valid.size() == 2);
    CHECK(t.test.size() == 3);
    CHECK_THROWS_AS(make_fulldata_split(counts({{"A", 9}}), 3), DataError);
  }

  TEST_CASE("IUS") {
    const auto c = counts({{"A", 6}, {"B", 6}});
    std::vector<std::string> pool;
    for (const auto& m : c.mentions()) pool.push_back(m.id);
    const auto s = sample_ius(c, pool, 4, 9);
    CHECK(s.ids.size() == 8);
    CHECK(per_label(c, s.ids) == std::map<std::string, std::size_t>{{"A", 4}, {"B", 4}});
    CHECK(sample_ius(c, pool, 4, 9).ids == s.ids);
    CHECK_THROWS_AS(sample_ius(c, pool, 7, 9), DataError);
  }

  TEST_CASE("TUS round robin") {
    std::vector<EventMention> ms;
    for (int i = 0; i < 10; ++i) ms.push_back(keyed("a" + std::to_string(i), "t1", "A"));
    for (int i = 0; i < 2; ++i) ms.push_back(keyed("b" + std::to_string(i), "t2", "A"));
    for (int i = 0; i < 3; ++i) ms.push_back(keyed("c" + std::to_string(i), "t3", "B"));
    ms.push_back(keyed("d0", "t4", "B"));
    for (int i = 0; i < 3; ++i) ms.push_back(keyed("e" + std::to_string(i), "t5", "C"));
    const Corpus c(ms);
    std::vector<std::string> pool;
    for (const auto& m : c.mentions()) pool.push_back(m.id);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s4 = sample_tus(c, pool, 3, seed);
      const auto trig = per_trigger(c, s4.ids);
      CHECK(trig.at("t5") == 3);  // single group degenerates to IUS
      CHECK(trig.at("t3") + trig.at("t4") == 3);
      CHECK(trig.at("t4") == 1);
      CHECK(trig.at("t1") + trig.at("t2") == 3);
      CHECK(std::max(trig.at("t1"), trig.at("t2")) - std::min(trig.at("t1"), trig.at("t2")) <= 1);
    }
    std::vector<std::string> pool_ab;
    for (const auto& m : c.mentions())
      if (m.label != "C") pool_ab.push_back(m.id);
    const auto s = sample_tus(c, pool_ab, 4, 1);
    const auto trig = per_trigger(c, s.ids);
    CHECK(trig.at("t1") == 2);
    CHECK(trig.at("t2") == 2);
    CHECK(trig.at("t3") == 3);
    CHECK(trig.at("t4") == 1);
  }

  TEST_CASE("COS restriction and round robin") {
    std::vector<EventMention> ms;
    for (int i = 0; i < 3; ++i) ms.push_back(keyed("a1" + std::to_string(i), "t1", "A"));
    for (int i = 0; i < 3; ++i) ms.push_back(keyed("a2" + std::to_string(i), "t2", "A"));
    for (int i = 0; i < 3; ++i) ms.push_back(keyed("a3" + std::to_string(i), "t3", "A"));
    ms.push_back(keyed("b1", "T1", "B"));
    ms.push_back(keyed("c3", "t3", "C"));
    ms.push_back(keyed("d9", "t9", "D"));
    const Corpus c(ms);
    std::vector<std::string> pool;
    for (const auto& m : c.mentions()) pool.push_back(m.id);
    CHECK(confusing_triggers(c) == std::vector<std::string>{"t1", "t3"});
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto s = sample_cos(c, pool, 2, seed);
      std::vector<std::string> a_ids;
      for (const auto& id : s.ids)
        if (c.by_id(id).label == "A") a_ids.push_back(id);
      const auto trig = per_trigger(c, a_ids);
      CHECK(trig == std::map<std::string, std::size_t>{{"t1", 1}, {"t3", 1}});
      for (const auto& id : s.ids) CHECK(trigger_key(c.by_id(id)) != "t2");
      // B, C have one confusing mention each (< K) and D has none.
      CHECK(s.skipped.size() == 3);
    }
    const Corpus unique({keyed("x", "u1", "A"), keyed("y", "u2", "B")});
    CHECK_THROWS_AS(sample_cos(unique, {"x", "y"}, 1, 0), DataError);
  }

  TEST_CASE("samplers only draw from the pool") {
    const auto c = synth::shortcut_corpus();
    const auto split = make_true_fewshot_split(c, 4, 42);
    const std::set<std::string> pool(split.test.begin(), split.test.end());
    for (auto* f : {&sample_ius, &sample_tus, &sample_cos}) {
      const auto s = (*f)(c, split.test, 4, 5);
      for (const auto& id : s.ids) CHECK(pool.count(id) == 1);
      CHECK(std::set<std::string>(s.ids.begin(), s.ids.end()).size() == s.ids.size());
    }
  }
}
