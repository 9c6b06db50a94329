// fsed: command-line front end over the library.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 runtime failure or divergence.
// Failures print one JSON error record on stderr.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "fsed/checkpoint.hpp"
#include "fsed/corpus.hpp"
#include "fsed/encoder.hpp"
#include "fsed/error.hpp"
#include "fsed/evaluator.hpp"
#include "fsed/experiment.hpp"
#include "fsed/json_io.hpp"
#include "fsed/model.hpp"
#include "fsed/sampler.hpp"
#include "fsed/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using fsed::ojson;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Resolved experiment description. Every field has a default so a config
// file only needs to name what it changes.
struct Experiment {
  std::string corpus;
  std::size_t k = 4;
  std::uint64_t split_seed = fsed::Rng::kDefaultSeed;
  std::uint64_t debias_seed = fsed::Rng::kDefaultSeed;
  fsed::PromptConfig prompt;
  fsed::EncoderSpec encoder;
  fsed::TrainConfig train;
  std::string output_dir = "runs";
};

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

// "a.b.c=value" sets /a/b/c; the value is read as JSON when it parses, else as a string.
void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw fsed::UsageError("override '" + assignment + "' is not key=value");
  std::string pointer;
  std::stringstream keys(assignment.substr(0, eq));
  for (std::string part; std::getline(keys, part, '.');) {
    if (part.empty()) throw fsed::UsageError("override '" + assignment + "' has an empty key segment");
    pointer += "/" + part;
  }
  j[json::json_pointer(pointer)] = parse_override_value(assignment.substr(eq + 1));
}

Experiment resolve_experiment(const json& raw) {
  if (!raw.is_object()) throw fsed::UsageError("config must be a JSON object");
  static const std::vector<std::string> known{"corpus", "k",     "split_seed", "debias_seed", "seeds",
                                              "prompt", "encoder", "train",    "output_dir"};
  for (const auto& [key, value] : raw.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw fsed::UsageError("unknown config key '" + key + "'");
  Experiment e;
  try {
    if (raw.contains("corpus")) e.corpus = raw.at("corpus").get<std::string>();
    if (raw.contains("k")) e.k = raw.at("k").get<std::size_t>();
    if (raw.contains("split_seed")) e.split_seed = raw.at("split_seed").get<std::uint64_t>();
    if (raw.contains("debias_seed")) e.debias_seed = raw.at("debias_seed").get<std::uint64_t>();
    if (raw.contains("output_dir")) e.output_dir = raw.at("output_dir").get<std::string>();
    if (raw.contains("prompt")) e.prompt = fsed::prompt_config_from_json(raw.at("prompt"));
    json train = raw.value("train", json::object());
    if (raw.contains("seeds")) train["seeds"] = raw.at("seeds");
    e.train = fsed::train_config_from_json(train);
    if (raw.contains("encoder")) e.encoder = fsed::encoder_spec_from_json(raw.at("encoder"));
  } catch (const json::exception& ex) {
    throw fsed::UsageError(std::string("config: ") + ex.what());
  }
  e.encoder.dim = e.train.dim;
  e.encoder.max_tokens = e.train.max_tokens;
  if (e.k == 0) throw fsed::UsageError("k must be >= 1");
  if (e.corpus.empty()) throw fsed::UsageError("no corpus given (config key 'corpus' or --corpus)");
  return e;
}

// Everything that determines results, without output location or seeds.
ojson experiment_identity(const Experiment& e, const std::string& corpus_digest) {
  auto train = fsed::train_config_json(e.train);
  train.erase("seeds");
  ojson enc = fsed::encoder_spec_json(e.encoder);
  enc.erase("seed");
  return ojson{{"corpus", e.corpus},
               {"corpus_digest", corpus_digest},
               {"k", e.k},
               {"split_seed", e.split_seed},
               {"prompt", fsed::prompt_config_json(e.prompt)},
               {"encoder", enc},
               {"train", train}};
}

ojson experiment_json(const Experiment& e) {
  return ojson{{"corpus", e.corpus},
               {"k", e.k},
               {"split_seed", e.split_seed},
               {"debias_seed", e.debias_seed},
               {"seeds", e.train.seeds},
               {"prompt", fsed::prompt_config_json(e.prompt)},
               {"encoder", fsed::encoder_spec_json(e.encoder)},
               {"train", fsed::train_config_json(e.train)},
               {"output_dir", e.output_dir}};
}

// Shared options of the config-driven subcommands.
struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string corpus;
  std::optional<std::size_t> k;
  std::vector<std::uint64_t> seeds;
  std::string output_dir;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "JSON experiment config");
    cmd->add_option("--set", overrides, "Override a config value, e.g. train.epochs=50")->take_all();
    cmd->add_option("--corpus", corpus, "Corpus JSONL (overrides config)");
    cmd->add_option("-k,--k", k, "Shots per label (overrides config)");
    cmd->add_option("--seeds", seeds, "Training seeds (overrides config)")->delimiter(',');
    cmd->add_option("-o,--output-dir", output_dir, "Root directory for run directories");
  }

  Experiment resolve() const {
    json raw = json::object();
    if (!config_path.empty()) {
      std::string text;
      try {
        text = fsed::read_file(config_path);
      } catch (const std::exception&) {
        throw fsed::UsageError("cannot read config '" + config_path + "'");
      }
      try {
        raw = json::parse(text);
      } catch (const json::parse_error& ex) {
        throw fsed::UsageError("config '" + config_path + "' is not valid JSON: " + ex.what());
      }
    }
    for (const auto& o : overrides) apply_override(raw, o);
    if (!corpus.empty()) raw["corpus"] = corpus;
    if (k) raw["k"] = *k;
    if (!seeds.empty()) raw["seeds"] = seeds;
    if (!output_dir.empty()) raw["output_dir"] = output_dir;
    return resolve_experiment(raw);
  }
};

fsed::Corpus load_nonempty_corpus(const std::string& path) {
  if (path.empty()) throw fsed::DataError("corpus path is empty");
  if (!fs::is_regular_file(path)) throw fsed::DataError("corpus '" + path + "' is not a readable file");
  auto c = fsed::load_corpus(path);
  if (c.empty()) throw fsed::DataError("corpus '" + path + "' holds no valid mentions");
  return c;
}

// Builds a directory under a temporary sibling name and renames it into place.
class StagedDir {
 public:
  explicit StagedDir(fs::path final_path)
      : final_(std::move(final_path)),
        staging_(final_.parent_path() / (final_.filename().string() + ".partial-" + std::to_string(::getpid()))) {
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;
  ~StagedDir() {
    std::error_code ec;
    if (!committed_) fs::remove_all(staging_, ec);
  }
  const fs::path& path() const { return staging_; }
  void write(const std::string& name, const std::string& content) { fsed::write_file_atomic(staging_ / name, content); }
  void commit() {
    fs::rename(staging_, final_);
    committed_ = true;
  }

 private:
  fs::path final_, staging_;
  bool committed_ = false;
};

std::string pretty(const ojson& j) { return j.dump(2) + "\n"; }

fsed::FewShotSplit split_for(const Experiment& e, const fsed::Corpus& c) {
  return fsed::make_true_fewshot_split(c, e.k, e.split_seed);
}

// ---- stats ----

int cmd_stats(const std::string& corpus_path, const std::string& out_dir, std::size_t top_k) {
  if (out_dir.empty()) throw fsed::UsageError("--out is required");
  if (top_k == 0) throw fsed::UsageError("--top-k must be >= 1");
  const auto c = load_nonempty_corpus(corpus_path);
  const std::string stats = fsed::stats_json(fsed::corpus_stats(c)) + "\n";
  const std::string bias = fsed::bias_json(fsed::trigger_bias_profile(c, top_k)) + "\n";
  const std::string manifest = fsed::manifest_json(c) + "\n";
  fs::create_directories(out_dir);
  fsed::write_file_atomic(fs::path(out_dir) / "stats.json", stats);
  fsed::write_file_atomic(fs::path(out_dir) / "bias.json", bias);
  fsed::write_file_atomic(fs::path(out_dir) / "manifest.json", manifest);
  std::cout << stats;
  return 0;
}

// ---- split ----

int cmd_split(const std::string& corpus_path, std::size_t k, std::uint64_t seed, const std::string& method,
              const std::string& out) {
  if (out.empty()) throw fsed::UsageError("--out is required");
  if (method != "fewshot" && method != "full") throw fsed::UsageError("--method must be fewshot or full");
  if (method == "fewshot" && k == 0) throw fsed::UsageError("k must be >= 1");
  const auto c = load_nonempty_corpus(corpus_path);
  const auto s = method == "full" ? fsed::make_fulldata_split(c, seed) : fsed::make_true_fewshot_split(c, k, seed);
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  fsed::save_split(s, out);
  std::cout << ojson{{"types", s.kept_labels.size()},
                     {"train", s.train.size()},
                     {"valid", s.valid.size()},
                     {"test", s.test.size()}}
                   .dump()
            << "\n";
  return 0;
}

// ---- train ----

struct RunPaths {
  fs::path root;
  std::string identity_hash;
  fs::path for_seed(std::uint64_t seed) const { return root / (identity_hash + "-seed" + std::to_string(seed)); }
};

RunPaths run_paths(const Experiment& e, const std::string& corpus_digest, const std::string& tag = "") {
  const auto id = experiment_identity(e, corpus_digest);
  return {fs::path(e.output_dir), fnv1a_hex(id.dump() + tag).substr(0, 12)};
}

int cmd_train(const ConfigArgs& args) {
  const auto e = args.resolve();
  const auto c = load_nonempty_corpus(e.corpus);
  const auto digest = fnv1a_hex(fsed::read_file(e.corpus));
  const auto split = split_for(e, c);
  const auto paths = run_paths(e, digest);
  fs::create_directories(paths.root);

  for (auto seed : e.train.seeds) {
    const auto dir = paths.for_seed(seed);
    if (fs::exists(dir / "checkpoint" / "manifest.json")) {
      std::cerr << "fsed: " << dir.string() << " already holds this run; skipping\n";
      std::cout << dir.string() << "\n";
      continue;
    }
    StagedDir stage(dir);
    auto record = experiment_json(e);
    record["seed"] = seed;
    record["corpus_digest"] = digest;
    stage.write("config.json", pretty(record));
    stage.write("split.json", fsed::split_to_json(split) + "\n");

    fsed::EncoderSpec spec = e.encoder;
    spec.seed = seed;
    if (spec.kind != fsed::EncoderKind::kToy) fsed::make_encoder(spec);  // fails with the backend message
    const ojson meta{{"seed", seed}, {"run", dir.filename().string()}};
    try {
      auto result = fsed::train_toy(split, c, e.train, e.prompt, seed);
      stage.write("train_log.jsonl", fsed::train_log_jsonl(result.log));
      fsed::save_checkpoint(result.model, stage.path() / "checkpoint", meta);
    } catch (const fsed::TrainingDiverged& d) {
      stage.write("train_log.jsonl", fsed::train_log_jsonl(d.log()));
      fsed::save_checkpoint(d.last_finite(), stage.path() / "checkpoint-last-finite", meta);
      stage.write("error.json", pretty(ojson{{"kind", "runtime"}, {"message", d.what()}}));
      stage.commit();
      throw;
    }
    stage.commit();
    std::cout << dir.string() << "\n";
  }
  return 0;
}

// ---- eval / debias ----

struct RunContext {
  fs::path run_dir;
  fsed::PromptModel model;
  fsed::Corpus corpus;
  fsed::FewShotSplit split;
  json config;
};

RunContext open_run(const std::string& checkpoint, const std::string& corpus_override,
                    const std::string& split_override) {
  if (checkpoint.empty()) throw fsed::UsageError("--checkpoint is required");
  const fs::path ckpt(checkpoint);
  if (!fs::is_directory(ckpt)) throw fsed::DataError("checkpoint '" + checkpoint + "' is not a directory");
  const fs::path run_dir = ckpt.parent_path().empty() ? fs::path(".") : ckpt.parent_path();
  json config = json::object();
  if (fs::exists(run_dir / "config.json")) config = json::parse(fsed::read_file(run_dir / "config.json"));
  std::string corpus_path = corpus_override.empty() ? config.value("corpus", std::string()) : corpus_override;
  if (corpus_path.empty()) throw fsed::UsageError("no corpus: pass --corpus or evaluate a checkpoint inside a run");
  const fs::path split_path = split_override.empty() ? run_dir / "split.json" : fs::path(split_override);
  if (!fs::exists(split_path)) throw fsed::UsageError("no split: pass --split or evaluate a checkpoint inside a run");
  auto model = fsed::load_checkpoint(ckpt);
  auto corpus = load_nonempty_corpus(corpus_path);
  auto split = fsed::load_split(split_path);
  return {run_dir, std::move(model), std::move(corpus), std::move(split), std::move(config)};
}

fs::path output_dir_for(const RunContext& ctx, const std::string& out) { return out.empty() ? ctx.run_dir : fs::path(out); }

int cmd_eval(const std::string& checkpoint, const std::string& target, const std::string& corpus,
             const std::string& split_path, const std::string& out, std::size_t batch) {
  if (target != "test" && target != "valid" && target != "train")
    throw fsed::UsageError("--target must be test, valid or train");
  if (batch == 0) throw fsed::UsageError("--batch must be >= 1");
  const auto ctx = open_run(checkpoint, corpus, split_path);
  const auto& ids = target == "test" ? ctx.split.test : target == "valid" ? ctx.split.valid : ctx.split.train;
  const auto golds = fsed::gather(ctx.corpus, ids);
  const auto preds = fsed::predict(ctx.model, golds, batch);
  const auto report = fsed::compute_metrics(preds, golds);
  const ojson doc{{"checkpoint", checkpoint},
                  {"target", target},
                  {"report", fsed::report_json(report)},
                  {"length_buckets", fsed::bucketed_json(fsed::length_bucket_eval(preds, golds))}};
  const auto dir = output_dir_for(ctx, out);
  fs::create_directories(dir);
  fsed::write_file_atomic(dir / ("predictions-" + target + ".jsonl"), fsed::predictions_to_jsonl(preds));
  fsed::write_file_atomic(dir / ("eval-" + target + ".json"), pretty(doc));
  std::cout << fsed::render_table({{target, report}});
  return 0;
}

int cmd_debias(const std::string& checkpoint, std::optional<std::size_t> k, std::optional<std::uint64_t> seed,
               const std::string& corpus, const std::string& split_path, const std::string& out) {
  const auto ctx = open_run(checkpoint, corpus, split_path);
  const std::size_t kk = k ? *k : ctx.config.value("k", ctx.split.k);
  const std::uint64_t s = seed ? *seed : ctx.config.value("debias_seed", fsed::Rng::kDefaultSeed);
  if (kk == 0) throw fsed::UsageError("k must be >= 1");
  const auto results = fsed::debias_eval(ctx.model, ctx.corpus, ctx.split, kk, s);
  const auto dir = output_dir_for(ctx, out);
  fs::create_directories(dir);
  const std::string name = "debias-k" + std::to_string(kk) + "-seed" + std::to_string(s) + ".json";
  fsed::write_file_atomic(dir / name, pretty(ojson{{"checkpoint", checkpoint}, {"k", kk}, {"seed", s},
                                                   {"methods", fsed::debias_json(results)}}));
  std::vector<std::pair<std::string, fsed::EvalReport>> rows;
  for (const auto& r : results)
    if (r.report) rows.emplace_back(r.method, *r.report);
  std::cout << fsed::render_table(rows);
  for (const auto& r : results)
    if (!r.report) std::cout << r.error << "\n";
  return 0;
}

// ---- ablate ----

struct AblateFlags {
  bool sequence = false;
  bool components = false;
  bool no_ontology = false;
  bool no_trigger_recognizer = false;
  bool no_event_classifier = false;
};

int cmd_ablate(const ConfigArgs& args, const AblateFlags& f) {
  const auto e = args.resolve();
  const auto c = load_nonempty_corpus(e.corpus);
  const auto digest = fnv1a_hex(fsed::read_file(e.corpus));
  const auto split = split_for(e, c);

  std::vector<fsed::Variant> variants;
  if (f.sequence) {
    auto seq = fsed::sequence_variants(e.prompt);
    variants.insert(variants.end(), seq.begin(), seq.end());
  }
  if (f.components) {
    auto comp = fsed::component_variants(e.prompt);
    variants.insert(variants.end(), comp.begin(), comp.end());
  }
  if (f.no_ontology || f.no_trigger_recognizer || f.no_event_classifier || variants.empty()) {
    fsed::Variant v{"base", "custom", e.prompt, e.train.ablations};
    v.ablations.no_ontology |= f.no_ontology;
    v.ablations.no_trigger_recognizer |= f.no_trigger_recognizer;
    v.ablations.no_event_classifier_prompt |= f.no_event_classifier;
    if (v.ablations.any()) v.name = "custom";
    variants.push_back(v);
  }

  std::string tag = "ablate";
  for (const auto& v : variants) tag += "|" + v.group + ":" + v.name;
  for (auto s : e.train.seeds) tag += "|" + std::to_string(s);
  const auto paths = run_paths(e, digest, tag);
  const fs::path dir = paths.root / ("ablate-" + paths.identity_hash);
  if (fs::exists(dir / "ablate.json")) {
    std::cerr << "fsed: " << dir.string() << " already holds this grid; skipping\n";
    std::cout << dir.string() << "\n";
    return 0;
  }
  fs::create_directories(paths.root);
  StagedDir stage(dir);
  auto record = experiment_json(e);
  record["corpus_digest"] = digest;
  stage.write("config.json", pretty(record));
  stage.write("split.json", fsed::split_to_json(split) + "\n");
  const auto results = fsed::run_variants(variants, split, c, e.train);
  stage.write("ablate.json", pretty(fsed::variant_results_json(results)));
  const auto table = fsed::render_variant_table(results);
  stage.write("table.txt", table);
  stage.commit();
  std::cout << table << dir.string() << "\n";
  return 0;
}

int report_error(const char* kind, int code, const std::string& message) {
  std::cerr << ojson{{"error", {{"kind", kind}, {"exit_code", code}, {"message", message}}}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot event detection with two-step cloze prompts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fsed 0.1.0");

  auto* stats = app.add_subcommand("stats", "Corpus statistics and trigger-bias profile");
  std::string stats_corpus, stats_out;
  std::size_t top_k = 5;
  stats->add_option("corpus", stats_corpus, "Corpus JSONL")->required();
  stats->add_option("-o,--out", stats_out, "Output directory")->required();
  stats->add_option("--top-k", top_k, "Head size for bias shares");

  auto* split = app.add_subcommand("split", "K-shot train/valid/test split");
  std::string split_corpus, split_out, split_method = "fewshot";
  std::size_t split_k = 4;
  std::uint64_t split_seed = fsed::Rng::kDefaultSeed;
  split->add_option("corpus", split_corpus, "Corpus JSONL")->required();
  split->add_option("-k,--k", split_k, "Shots per label");
  split->add_option("--seed", split_seed, "Sampling seed");
  split->add_option("--method", split_method, "fewshot or full");
  split->add_option("-o,--out", split_out, "Split JSON path")->required();

  auto* train = app.add_subcommand("train", "Train one run directory per seed");
  ConfigArgs train_args;
  train_args.attach(train);

  std::string ckpt, eval_target = "test", eval_corpus, eval_split, eval_out;
  std::size_t eval_batch = 128;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint with predicted triggers");
  eval->add_option("checkpoint", ckpt, "Checkpoint directory")->required();
  eval->add_option("--target", eval_target, "test, valid or train");
  eval->add_option("--corpus", eval_corpus, "Corpus JSONL (default: the run's)");
  eval->add_option("--split", eval_split, "Split JSON (default: the run's)");
  eval->add_option("-o,--out", eval_out, "Output directory (default: the run directory)");
  eval->add_option("--batch", eval_batch, "Evaluation batch size");

  auto* debias = app.add_subcommand("debias", "Full-Test, IUS, TUS and COS evaluation");
  std::optional<std::size_t> debias_k;
  std::optional<std::uint64_t> debias_seed;
  std::string debias_corpus, debias_split, debias_out;
  debias->add_option("checkpoint", ckpt, "Checkpoint directory")->required();
  debias->add_option("-k,--k", debias_k, "Mentions per label in each sampled subset");
  debias->add_option("--seed", debias_seed, "Sampler seed");
  debias->add_option("--corpus", debias_corpus, "Corpus JSONL (default: the run's)");
  debias->add_option("--split", debias_split, "Split JSON (default: the run's)");
  debias->add_option("-o,--out", debias_out, "Output directory (default: the run directory)");

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate a grid of prompt and component variants");
  ConfigArgs ablate_args;
  ablate_args.attach(ablate);
  AblateFlags flags;
  ablate->add_flag("--sequence", flags.sequence, "All recognizer and classifier input orders");
  ablate->add_flag("--components", flags.components, "Full model and each component removed");
  ablate->add_flag("--no-ontology", flags.no_ontology, "Drop the ontology segments");
  ablate->add_flag("--no-trigger-recognizer", flags.no_trigger_recognizer, "Classify without a trigger clause");
  ablate->add_flag("--no-event-classifier", flags.no_event_classifier, "Classify from [CLS] of the raw mention");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", kExitUsage, e.what());
  }

  try {
    if (*stats) return cmd_stats(stats_corpus, stats_out, top_k);
    if (*split) return cmd_split(split_corpus, split_k, split_seed, split_method, split_out);
    if (*train) return cmd_train(train_args);
    if (*eval) return cmd_eval(ckpt, eval_target, eval_corpus, eval_split, eval_out, eval_batch);
    if (*debias) return cmd_debias(ckpt, debias_k, debias_seed, debias_corpus, debias_split, debias_out);
    if (*ablate) return cmd_ablate(ablate_args, flags);
  } catch (const fsed::UsageError& e) {
    return report_error("usage", kExitUsage, e.what());
  } catch (const fsed::DataError& e) {
    return report_error("data", kExitData, e.what());
  } catch (const nlohmann::json::exception& e) {
    return report_error("data", kExitData, e.what());
  } catch (const fsed::RuntimeFailure& e) {
    return report_error("runtime", kExitRuntime, e.what());
  } catch (const std::exception& e) {
    return report_error("runtime", kExitRuntime, e.what());
  }
  return kExitUsage;
}
