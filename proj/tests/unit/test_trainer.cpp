#include <doctest.h>

#include <cmath>
#include <limits>

#include "fsed/error.hpp"
#include "fsed/synth.hpp"
#include "fsed/trainer.hpp"
#include "support.hpp"

using namespace fsed;
using namespace fsed::testing;

namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.dim = 8;
  cfg.batch_train = 4;
  return cfg;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("AdamW matches a hand-computed first step") {
    AdamW opt;
    Matrix p(1, 2);
    p << 1.0, -2.0;
    Matrix g(1, 2);
    g << 0.5, 0.0;
    const auto slot = opt.add(p, {.lr = 0.1, .weight_decay = 0.01});
    opt.tick();
    opt.step(slot, p, g);
    // decay: p *= 1 - 0.001; Adam's first bias-corrected step is lr * sign(g) for g != 0.
    CHECK(p(0, 0) == doctest::Approx(1.0 * 0.999 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
    CHECK(p(0, 1) == doctest::Approx(-2.0 * 0.999).epsilon(1e-14));
    AdamW fresh;
    const auto s2 = fresh.add(p, {});
    CHECK_THROWS_AS(fresh.step(s2, p, g), UsageError);
  }

  TEST_CASE("early stopper fires at exactly the patience") {
    EarlyStopper s(3);
    CHECK_FALSE(s.update(1.0));
    CHECK_FALSE(s.update(1.0));
    CHECK_FALSE(s.update(1.0 - 5e-7));  // below min_delta, not an improvement
    CHECK(s.update(1.0));
    EarlyStopper t(2);
    CHECK_FALSE(t.update(5.0));
    CHECK_FALSE(t.update(6.0));
    CHECK_FALSE(t.update(4.0));  // improvement resets the count
    CHECK_FALSE(t.update(4.0));
    CHECK(t.update(4.0));
    CHECK_THROWS_AS(EarlyStopper(0), UsageError);
  }

  TEST_CASE("plateau stops after exactly 1000 non-improving iterations") {
    const auto c = synth::separable_corpus(2, 4, 1, 3);
    const auto split = make_true_fewshot_split(c, 1, 1);
    TrainConfig cfg;
    cfg.epochs = 5000;
    cfg.dim = 4;
    cfg.batch_train = 64;  // one iteration per epoch
    cfg.lr_encoder = cfg.lr_other = 1e-300;
    cfg.early_stop_patience = 1000;
    const auto r = train_toy(split, c, cfg, PromptConfig{}, 1);
    CHECK(r.log.stop_reason == StopReason::kEarlyStop);
    // The first iteration sets the best; the next 1000 fail to improve it.
    CHECK(r.log.iterations.size() == 1001);
    for (std::size_t i = 0; i < r.log.iterations.size(); ++i) CHECK(r.log.iterations[i].iteration == i + 1);
  }

  TEST_CASE("max epochs stop reason") {
    const auto c = synth::separable_corpus(2, 6, 1, 3);
    const auto split = make_true_fewshot_split(c, 2, 1);
    auto cfg = small_config();
    cfg.epochs = 3;
    const auto r = train_toy(split, c, cfg, PromptConfig{}, 2);
    CHECK(r.log.stop_reason == StopReason::kMaxEpochs);
    CHECK(r.log.epochs.size() == 3);
    CHECK(r.log.iterations.size() == 3);
    CHECK(r.log.best_epoch >= 1);
  }

  TEST_CASE("teacher forcing: no predicted trigger reaches the classifier in training") {
    const auto c = synth::separable_corpus(3, 6, 1, 4);
    auto split = make_true_fewshot_split(c, 2, 1);
    split.valid.clear();  // no validation pass, so only training steps touch the model
    auto cfg = small_config();
    auto model = make_toy_model(c, split.kept_labels, PromptConfig{}, cfg.model_options(), cfg.dim, 1);
    const auto r = train(std::move(model), split, c, cfg, 1);
    CHECK(r.log.iterations.size() == 10);
    CHECK(r.model.handoff_count() == 0);
    r.model.predict(c.at(0));
    CHECK(r.model.handoff_count() == 1);
  }

  TEST_CASE("training is bit-for-bit reproducible") {
    const auto c = synth::separable_corpus(3, 8, 1, 4);
    const auto split = make_true_fewshot_split(c, 2, 9);
    const auto cfg = small_config();
    const auto a = train_toy(split, c, cfg, PromptConfig{}, 5);
    const auto b = train_toy(split, c, cfg, PromptConfig{}, 5);
    CHECK(train_log_jsonl(a.log) == train_log_jsonl(b.log));
    REQUIRE(a.log.iterations.size() == b.log.iterations.size());
    for (std::size_t i = 0; i < a.log.iterations.size(); ++i) CHECK(a.log.iterations[i].loss == b.log.iterations[i].loss);
    CHECK(a.model.encoder().parameters().checksum() == b.model.encoder().parameters().checksum());
    const auto other = train_toy(split, c, cfg, PromptConfig{}, 6);
    CHECK(train_log_jsonl(other.log) != train_log_jsonl(a.log));
  }

  TEST_CASE("separable fixture: final training loss under 10% of the initial") {
    const auto c = synth::separable_corpus();
    const auto split = make_true_fewshot_split(c, 4, 42);
    TrainConfig cfg;
    const auto r = train_toy(split, c, cfg, PromptConfig{}, 1);
    const double first = r.log.iterations.front().loss, last = r.log.iterations.back().loss;
    CHECK(last < 0.1 * first);
  }

  TEST_CASE("divergence keeps the last finite state") {
    const auto c = synth::separable_corpus(2, 6, 1, 3);
    const auto split = make_true_fewshot_split(c, 2, 1);
    const auto cfg = small_config();
    auto model = make_toy_model(c, split.kept_labels, PromptConfig{}, cfg.model_options(), cfg.dim, 1);
    const auto before = model.encoder().parameters().checksum();
    model.prototypes().vectors(0, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
      train(std::move(model), split, c, cfg, 1);
      FAIL("expected divergence");
    } catch (const TrainingDiverged& e) {
      CHECK(e.last_finite().encoder().parameters().checksum() == before);
      CHECK(e.log().iterations.empty());
    }
  }

  TEST_CASE("config validation and JSON round trip") {
    TrainConfig cfg;
    cfg.batch_train = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = TrainConfig{};
    cfg.lr_other = 0.0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = TrainConfig{};
    cfg.early_stop_patience = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);

    cfg = TrainConfig{};
    cfg.seeds = {1, 2, 3};
    cfg.distance = Distance::kSquared;
    cfg.ablations.no_ontology = true;
    cfg.monitor = Monitor::kValidLoss;
    const auto back = train_config_from_json(nlohmann::json::parse(train_config_json(cfg).dump()));
    CHECK(train_config_json(back).dump() == train_config_json(cfg).dump());
    CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"epochs", "many"}}), UsageError);
    CHECK(train_config_from_json(nlohmann::json::object()).batch_train == 32);
  }

  TEST_CASE("seed aggregation") {
    EvalReport a, b;
    a.weighted_f1 = 0.4;
    b.weighted_f1 = 0.6;
    const auto agg = aggregate_reports({1, 2}, {a, b});
    CHECK(agg.weighted_f1.mean == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(agg.weighted_f1.stddev == doctest::Approx(0.1).epsilon(1e-14));

    const auto c = synth::separable_corpus(3, 8, 1, 4);
    const auto split = make_true_fewshot_split(c, 2, 9);
    auto cfg = small_config();
    cfg.seeds = {7, 7};
    const auto same = run_seeds(split, c, cfg, PromptConfig{});
    CHECK(same.complete);
    CHECK(same.per_seed.size() == 2);
    CHECK(same.weighted_f1.stddev == 0.0);
    CHECK(same.accuracy.stddev == 0.0);
  }

  TEST_CASE("three seeds terminate with finite metrics") {
    const auto c = synth::separable_corpus(4, 10, 1, 4);
    const auto split = make_true_fewshot_split(c, 2, 3);
    auto cfg = small_config();
    cfg.seeds = {1, 2, 3};
    const auto agg = run_seeds(split, c, cfg, PromptConfig{});
    CHECK(agg.complete);
    REQUIRE(agg.per_seed.size() == 3);
    for (const auto& r : agg.per_seed) {
      CHECK(std::isfinite(r.weighted_f1));
      CHECK(r.accuracy >= 0.0);
      CHECK(r.accuracy <= 1.0);
    }
  }

  TEST_CASE("split labels must be covered by the model") {
    const auto c = synth::separable_corpus(3, 6, 1, 4);
    const auto split = make_true_fewshot_split(c, 2, 1);
    LabelSpace partial({c.labels().at(0)});
    auto model = make_toy_model(c, partial, PromptConfig{}, ModelOptions{}, 8, 1);
    CHECK_THROWS_AS(train(std::move(model), split, c, small_config(), 1), UsageError);
  }
}
