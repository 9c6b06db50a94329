#include <doctest.h>

#include "fsed/encoder.hpp"
#include "fsed/error.hpp"
#include "fsed/model.hpp"
#include "fsed/synth.hpp"
#include "support.hpp"

using namespace fsed;
using namespace fsed::testing;

TEST_SUITE("encoder") {
  TEST_CASE("shape contracts") {
    const auto enc = toy_encoder(1, 4, 10);
    CHECK(enc.parameters().get("embed").rows() == 10);
    CHECK(enc.parameters().get("embed").cols() == 4);

    const auto e16 = toy_encoder(1, 16, 20);
    const std::vector<int> tokens{2, 5, 6, 4, 7, 3, 8, 3};
    const auto out = e16.encode(tokens, 3);
    CHECK(out.hidden.rows() == 8);
    CHECK(out.hidden.cols() == 16);
    CHECK(out.d() == 16);
    CHECK(out.mask_vocab_logits.size() == 20);
    CHECK(out.hidden.allFinite());
    CHECK(out.mask_vocab_logits.allFinite());
  }

  TEST_CASE("deterministic outputs and seeded checksum") {
    const auto a = toy_encoder(7, 8, 30), b = toy_encoder(7, 8, 30);
    CHECK(a.parameters().checksum() == b.parameters().checksum());
    CHECK(a.parameters().checksum() != toy_encoder(8, 8, 30).parameters().checksum());
    const std::vector<int> tokens{2, 9, 4, 11, 3};
    const auto x = a.encode(tokens, 2), y = a.encode(tokens, 2), z = b.encode(tokens, 2);
    CHECK(x.hidden == y.hidden);
    CHECK(x.mask_vocab_logits == y.mask_vocab_logits);
    CHECK(x.hidden == z.hidden);
    const auto cloned = a.clone();
    CHECK(cloned->encode(tokens, 2).hidden == x.hidden);
  }

  TEST_CASE("input errors") {
    const auto enc = toy_encoder(1, 4, 10, 6);
    CHECK_THROWS_AS(enc.encode(std::vector<int>{}, 0), UsageError);
    CHECK_THROWS_AS(enc.encode(std::vector<int>{2, 4, 3}, 3), UsageError);
    CHECK_THROWS_AS(enc.encode(std::vector<int>{2, 4, 3, 3, 3, 3, 3}, 1), UsageError);
    CHECK_THROWS_AS(enc.encode(std::vector<int>{2, 40, 3}, 1), UsageError);
    EncoderSpec spec;
    spec.dim = 1;
    CHECK_THROWS_AS(ToyEncoder{spec}, UsageError);
    spec.kind = EncoderKind::kPretrained;
    CHECK_THROWS_AS(make_encoder(spec), RuntimeFailure);
  }

  TEST_CASE("attention mixes positions") {
    const auto enc = toy_encoder(3, 8, 20);
    const auto a = enc.encode(std::vector<int>{2, 4, 6, 3}, 1);
    const auto b = enc.encode(std::vector<int>{2, 4, 7, 3}, 1);
    CHECK((a.hidden.row(1) - b.hidden.row(1)).norm() > 0.0);
  }

  TEST_CASE("gradients match central differences at 3 points") {
    const auto c = synth::separable_corpus(3, 4, 1, 5);
    for (std::uint64_t point = 0; point < 3; ++point) {
      auto model = make_toy_model(c, c.labels(), PromptConfig{}, ModelOptions{}, 4, 100 + point, 80);
      const auto result = check_gradients(model, c.at(point * 3));
      CAPTURE(result.worst_name);
      CHECK(result.worst < 1e-4);
      CHECK(result.checked > 100);
    }
  }

  TEST_CASE("labels never reach the encoder") {
    const auto c = synth::separable_corpus(4, 4, 1, 5);
    auto model = make_toy_model(c, c.labels(), PromptConfig{}, ModelOptions{}, 8, 3);
    for (const auto& m : c.mentions()) {
      EventMention relabeled = m;
      relabeled.label = c.labels().at((c.labels().index_of(m.label) + 1) % c.labels().size());
      const auto p = assemble_trigger_prompt(m, model.prompt_config());
      const auto q = assemble_trigger_prompt(relabeled, model.prompt_config());
      const auto tp = model.tokenize(p), tq = model.tokenize(q);
      CHECK(tp.ids == tq.ids);
      CHECK(model.encoder().encode(tp.ids, tp.mask_token).hidden == model.encoder().encode(tq.ids, tq.mask_token).hidden);
      const auto a = model.predict(m), b = model.predict(relabeled);
      CHECK(a.label_distribution == b.label_distribution);
      CHECK(a.trigger_word == b.trigger_word);
    }
  }
}
