#include "fsed/sampler.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fsed/error.hpp"

namespace fsed {

using ojson = nlohmann::ordered_json;

namespace {

// Mention positions per label, in corpus label order.
std::vector<std::vector<std::size_t>> positions_by_label(const Corpus& c) {
  std::vector<std::vector<std::size_t>> by_label(c.labels().size());
  for (std::size_t i = 0; i < c.size(); ++i) by_label[c.labels().index_of(c.at(i).label)].push_back(i);
  return by_label;
}

std::vector<std::vector<std::size_t>> pool_by_label(const Corpus& c, const std::vector<std::string>& pool) {
  std::vector<std::vector<std::size_t>> by_label(c.labels().size());
  std::set<std::string> seen;
  for (const auto& id : pool) {
    if (!seen.insert(id).second) throw UsageError("sampler pool repeats id '" + id + "'");
    const std::size_t pos = c.position_of(id);
    by_label[c.labels().index_of(c.at(pos).label)].push_back(pos);
  }
  return by_label;
}

// Round-robin over shuffled trigger groups until k are taken or all groups run out.
std::vector<std::size_t> round_robin(const Corpus& c, const std::vector<std::size_t>& members,
                                     std::size_t k, Rng& rng) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (auto pos : members) groups[trigger_key(c.at(pos))].push_back(pos);
  std::vector<std::vector<std::size_t>> order;
  order.reserve(groups.size());
  for (auto& [_, g] : groups) order.push_back(std::move(g));
  rng.shuffle(order);
  for (auto& g : order) rng.shuffle(g);

  std::vector<std::size_t> taken;
  std::vector<std::size_t> cursor(order.size(), 0);
  while (taken.size() < k) {
    bool progressed = false;
    for (std::size_t gi = 0; gi < order.size() && taken.size() < k; ++gi) {
      if (cursor[gi] < order[gi].size()) {
        taken.push_back(order[gi][cursor[gi]++]);
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return taken;
}

void append_ids(const Corpus& c, const std::vector<std::size_t>& positions, std::vector<std::string>& out) {
  for (auto p : positions) out.push_back(c.at(p).id);
}

}  // namespace

FewShotSplit make_true_fewshot_split(const Corpus& c, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw UsageError("K must be >= 1");
  FewShotSplit s;
  s.method = SplitMethod::kTrueFewShot;
  s.k = k;
  s.seed = seed;
  Rng rng(seed);
  const auto by_label = positions_by_label(c);
  std::vector<bool> in_test(c.size(), false);
  for (std::size_t li = 0; li < by_label.size(); ++li) {
    if (by_label[li].size() <= 2 * k) continue;
    s.kept_labels.add(c.labels().at(li));
    std::vector<std::size_t> order = by_label[li];
    rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i < k)
        s.train.push_back(c.at(order[i]).id);
      else if (i < 2 * k)
        s.valid.push_back(c.at(order[i]).id);
      else
        in_test[order[i]] = true;
    }
  }
  if (s.kept_labels.empty())
    throw DataError("no label has more than 2K = " + std::to_string(2 * k) + " mentions");
  for (std::size_t i = 0; i < c.size(); ++i)
    if (in_test[i]) s.test.push_back(c.at(i).id);
  return s;
}

FullDataSizes fulldata_sizes(std::size_t n) {
  FullDataSizes z{n * 8 / 10, n / 10, n / 10};
  std::size_t rest = n - z.train - z.valid - z.test;
  if (rest > 0) {
    ++z.test;
    --rest;
  }
  z.train += rest;
  return z;
}

FewShotSplit make_fulldata_split(const Corpus& c, std::uint64_t seed) {
  if (c.size() < 10) throw DataError("full-data split needs at least 10 mentions");
  FewShotSplit s;
  s.method = SplitMethod::kFullData;
  s.k = 0;
  s.seed = seed;
  s.kept_labels = c.labels();
  Rng rng(seed);
  std::vector<int> part(c.size(), 0);  // 0 train, 1 valid, 2 test
  for (auto order : positions_by_label(c)) {
    rng.shuffle(order);
    const auto z = fulldata_sizes(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) part[order[i]] = i < z.train ? 0 : (i < z.train + z.valid ? 1 : 2);
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto& dst = part[i] == 0 ? s.train : (part[i] == 1 ? s.valid : s.test);
    dst.push_back(c.at(i).id);
  }
  if (s.train.empty() || s.valid.empty() || s.test.empty())
    throw DataError("corpus too small for a stratified 8:1:1 split with every part nonempty");
  return s;
}

std::string split_to_json(const FewShotSplit& s) {
  ojson j;
  j["method"] = s.method == SplitMethod::kTrueFewShot ? "true-fewshot" : "full-data";
  j["K"] = s.k;
  j["seed"] = s.seed;
  j["rng"] = std::string(Rng::kName);
  j["kept_labels"] = s.kept_labels.labels();
  j["train"] = s.train;
  j["valid"] = s.valid;
  j["test"] = s.test;
  return j.dump(2);
}

FewShotSplit split_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    FewShotSplit s;
    const auto method = j.at("method").get<std::string>();
    if (method == "true-fewshot")
      s.method = SplitMethod::kTrueFewShot;
    else if (method == "full-data")
      s.method = SplitMethod::kFullData;
    else
      throw DataError("unknown split method '" + method + "'");
    s.k = j.at("K").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.kept_labels = LabelSpace(j.at("kept_labels").get<std::vector<std::string>>());
    s.train = j.at("train").get<std::vector<std::string>>();
    s.valid = j.at("valid").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed split document: ") + e.what());
  }
}

void save_split(const FewShotSplit& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << split_to_json(s) << '\n';
}

FewShotSplit load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read split '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return split_from_json(ss.str());
}

std::string_view to_string(SamplerMethod m) {
  switch (m) {
    case SamplerMethod::kIus: return "IUS";
    case SamplerMethod::kTus: return "TUS";
    case SamplerMethod::kCos: return "COS";
  }
  return "?";
}

TestSubset sample_ius(const Corpus& c, const std::vector<std::string>& pool, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw UsageError("K must be >= 1");
  TestSubset out{SamplerMethod::kIus, k, seed, {}, {}};
  Rng rng(seed);
  const auto groups = pool_by_label(c, pool);
  for (std::size_t li = 0; li < groups.size(); ++li) {
    if (groups[li].empty()) continue;
    if (groups[li].size() < k)
      throw DataError("IUS: label '" + c.labels().at(li) + "' has " + std::to_string(groups[li].size()) +
                      " pool mentions, fewer than K = " + std::to_string(k));
    auto order = groups[li];
    rng.shuffle(order);
    order.resize(k);
    append_ids(c, order, out.ids);
  }
  return out;
}

TestSubset sample_tus(const Corpus& c, const std::vector<std::string>& pool, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw UsageError("K must be >= 1");
  TestSubset out{SamplerMethod::kTus, k, seed, {}, {}};
  Rng rng(seed);
  const auto groups = pool_by_label(c, pool);
  for (std::size_t li = 0; li < groups.size(); ++li) {
    if (groups[li].empty()) continue;
    if (groups[li].size() < k)
      throw DataError("TUS: label '" + c.labels().at(li) + "' has fewer than K pool mentions");
    append_ids(c, round_robin(c, groups[li], k, rng), out.ids);
  }
  return out;
}

std::vector<std::string> confusing_triggers(const Corpus& c) {
  std::map<std::string, std::set<std::string>> labels_of;
  for (const auto& m : c.mentions()) labels_of[trigger_key(m)].insert(m.label);
  std::vector<std::string> out;
  for (const auto& [trig, labels] : labels_of)
    if (labels.size() >= 2) out.push_back(trig);
  return out;
}

TestSubset sample_cos(const Corpus& c, const std::vector<std::string>& pool, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw UsageError("K must be >= 1");
  TestSubset out{SamplerMethod::kCos, k, seed, {}, {}};
  const auto shared = confusing_triggers(c);
  const std::set<std::string> confusing(shared.begin(), shared.end());
  Rng rng(seed);
  const auto groups = pool_by_label(c, pool);
  bool any = false;
  for (std::size_t li = 0; li < groups.size(); ++li) {
    if (groups[li].empty()) continue;
    std::vector<std::size_t> members;
    for (auto pos : groups[li])
      if (confusing.count(trigger_key(c.at(pos)))) members.push_back(pos);
    if (members.empty()) {
      out.skipped.push_back({c.labels().at(li), "no-confusing-trigger"});
      continue;
    }
    if (members.size() < k) {
      out.skipped.push_back({c.labels().at(li), "fewer-than-K-confusing-mentions"});
      continue;
    }
    append_ids(c, round_robin(c, members, k, rng), out.ids);
    any = true;
  }
  if (!any) throw DataError("COS: no label has K mentions with confusing triggers");
  return out;
}

std::string subset_to_json(const TestSubset& s) {
  ojson j;
  j["method"] = std::string(to_string(s.method));
  j["K"] = s.k;
  j["seed"] = s.seed;
  j["rng"] = std::string(Rng::kName);
  j["ids"] = s.ids;
  ojson skipped = ojson::array();
  for (const auto& sk : s.skipped) skipped.push_back({{"label", sk.label}, {"reason", sk.reason}});
  j["skipped"] = skipped;
  return j.dump(2);
}

}  // namespace fsed
