#include "fsed/encoder.hpp"

#include <cmath>

#include "fsed/error.hpp"
#include "fsed/rng.hpp"

namespace fsed {

std::string_view to_string(EncoderKind k) { return k == EncoderKind::kToy ? "toy" : "pretrained"; }

EncoderKind parse_encoder_kind(std::string_view s) {
  if (s == "toy") return EncoderKind::kToy;
  if (s == "pretrained") return EncoderKind::kPretrained;
  throw UsageError("unknown encoder kind '" + std::string(s) + "'");
}

namespace {

Matrix gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  Matrix m(rows, cols);
  // Row-major fill order so the draw sequence does not depend on Eigen's storage order.
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = stddev * rng.normal();
  return m;
}

}  // namespace

ToyEncoder::ToyEncoder(EncoderSpec spec) : spec_(std::move(spec)), segmenter_(spec_.vocab) {
  if (spec_.dim < 2) throw UsageError("toy encoder needs d >= 2");
  if (spec_.max_tokens < 1) throw UsageError("max_tokens must be positive");
  Rng rng(spec_.seed);
  const auto v = static_cast<Eigen::Index>(spec_.vocab.size());
  const auto d = static_cast<Eigen::Index>(spec_.dim);
  const auto t = static_cast<Eigen::Index>(spec_.max_tokens);
  const double s = 1.0 / std::sqrt(static_cast<double>(spec_.dim));
  params_.add("embed", gaussian(rng, v, d, s));
  params_.add("position", gaussian(rng, t, d, s));
  params_.add("attn_query", gaussian(rng, d, d, s));
  params_.add("mix_self", gaussian(rng, d, d, s));
  params_.add("mix_context", gaussian(rng, d, d, s));
  params_.add("mix_bias", Matrix::Zero(d, 1));
  params_.add("out_bias", Matrix::Zero(v, 1));
}

ToyEncoder::ToyEncoder(EncoderSpec spec, ParameterSet params)
    : spec_(std::move(spec)), segmenter_(spec_.vocab), params_(std::move(params)) {
  const auto v = static_cast<Eigen::Index>(spec_.vocab.size());
  const auto d = static_cast<Eigen::Index>(spec_.dim);
  const auto t = static_cast<Eigen::Index>(spec_.max_tokens);
  auto expect = [&](const char* name, Eigen::Index r, Eigen::Index c) {
    const auto& m = params_.get(name);
    if (m.rows() != r || m.cols() != c) throw DataError(std::string("toy parameter '") + name + "' has the wrong shape");
  };
  expect("embed", v, d);
  expect("position", t, d);
  expect("attn_query", d, d);
  expect("mix_self", d, d);
  expect("mix_context", d, d);
  expect("mix_bias", d, 1);
  expect("out_bias", v, 1);
}

void ToyEncoder::check(std::span<const int> tokens, std::size_t mask_position) const {
  if (tokens.empty()) throw UsageError("encode: empty token sequence");
  if (tokens.size() > spec_.max_tokens)
    throw UsageError("encode: " + std::to_string(tokens.size()) + " tokens exceed max_tokens " +
                     std::to_string(spec_.max_tokens));
  if (mask_position >= tokens.size()) throw UsageError("encode: mask position out of range");
  for (int t : tokens)
    if (t < 0 || static_cast<std::size_t>(t) >= spec_.vocab.size()) throw UsageError("encode: token id out of range");
}

EncoderOutput ToyEncoder::forward(std::span<const int> tokens, std::size_t mask_position, Trace& tr) const {
  check(tokens, mask_position);
  const auto& embed = params_.get("embed");
  const auto& position = params_.get("position");
  const auto& mix_self = params_.get("mix_self");
  const auto& mix_context = params_.get("mix_context");
  const Vector mix_bias = params_.get("mix_bias").col(0);
  const auto n = static_cast<Eigen::Index>(tokens.size());
  const auto d = static_cast<Eigen::Index>(spec_.dim);

  tr.x.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) tr.x.row(i) = embed.row(tokens[static_cast<std::size_t>(i)]) + position.row(i);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix scores = (tr.x * params_.get("attn_query") * tr.x.transpose()) * scale;
  tr.attn.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd row = (scores.row(i).array() - scores.row(i).maxCoeff()).exp().matrix();
    tr.attn.row(i) = row / row.sum();
  }
  tr.ctx = tr.attn * tr.x;
  Matrix pre = tr.x * mix_self.transpose() + tr.ctx * mix_context.transpose();
  pre.rowwise() += mix_bias.transpose();
  tr.act = pre.array().tanh().matrix();

  EncoderOutput out;
  out.hidden = tr.x + tr.act;
  const auto m = static_cast<Eigen::Index>(mask_position);
  out.mask_vocab_logits = embed * out.hidden.row(m).transpose() + params_.get("out_bias").col(0);
  return out;
}

EncoderOutput ToyEncoder::encode(std::span<const int> tokens, std::size_t mask_position) const {
  Trace tr;
  return forward(tokens, mask_position, tr);
}

void ToyEncoder::backward(std::span<const int> tokens, std::size_t mask_position, const Vector& d_logits,
                          const Vector& d_mask_hidden, ParameterSet& grads) const {
  Trace tr;
  const EncoderOutput out = forward(tokens, mask_position, tr);
  const auto& embed = params_.get("embed");
  const auto& mix_self = params_.get("mix_self");
  const auto& mix_context = params_.get("mix_context");
  const auto& attn_query = params_.get("attn_query");
  const auto n = static_cast<Eigen::Index>(tokens.size());
  const auto d = static_cast<Eigen::Index>(spec_.dim);
  const auto m = static_cast<Eigen::Index>(mask_position);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Vector gh = Vector::Zero(d);
  if (d_mask_hidden.size() != 0) {
    if (d_mask_hidden.size() != d) throw UsageError("backward: hidden gradient has the wrong size");
    gh += d_mask_hidden;
  }
  if (d_logits.size() != 0) {
    if (static_cast<std::size_t>(d_logits.size()) != spec_.vocab.size())
      throw UsageError("backward: logit gradient has the wrong size");
    const Vector hm = out.hidden.row(m).transpose();
    gh += embed.transpose() * d_logits;
    grads.get("embed") += d_logits * hm.transpose();
    grads.get("out_bias").col(0) += d_logits;
  }

  const Vector ga = gh.array() * (1.0 - tr.act.row(m).transpose().array().square());
  const Vector xm = tr.x.row(m).transpose();
  grads.get("mix_self") += ga * xm.transpose();
  grads.get("mix_context") += ga * tr.ctx.row(m);
  grads.get("mix_bias").col(0) += ga;
  const Vector dctx = mix_context.transpose() * ga;

  // Only row m of the attention feeds the loss.
  const Vector a = tr.attn.row(m).transpose();
  Matrix dx = a * dctx.transpose();
  const Vector da = tr.x * dctx;
  const Vector ds = (a.array() * (da.array() - a.dot(da))).matrix() * scale;
  grads.get("attn_query") += xm * (ds.transpose() * tr.x);
  dx += ds * (attn_query.transpose() * xm).transpose();
  dx.row(m) += (attn_query * tr.x.transpose() * ds).transpose();
  dx.row(m) += (gh + mix_self.transpose() * ga).transpose();

  auto& g_embed = grads.get("embed");
  auto& g_position = grads.get("position");
  for (Eigen::Index i = 0; i < n; ++i) {
    g_embed.row(tokens[static_cast<std::size_t>(i)]) += dx.row(i);
    g_position.row(i) += dx.row(i);
  }
}

std::unique_ptr<Encoder> ToyEncoder::clone() const { return std::make_unique<ToyEncoder>(*this); }

ToyEncoder toy_encoder(std::uint64_t seed, std::size_t d, std::size_t vocab_size, std::size_t max_tokens) {
  EncoderSpec spec;
  spec.kind = EncoderKind::kToy;
  spec.identifier = "toy";
  spec.seed = seed;
  spec.dim = d;
  spec.max_tokens = max_tokens;
  for (std::size_t i = spec.vocab.size(); i < vocab_size; ++i) spec.vocab.add("tok" + std::to_string(i));
  return ToyEncoder(std::move(spec));
}

std::unique_ptr<Encoder> make_encoder(const EncoderSpec& spec) {
  switch (spec.kind) {
    case EncoderKind::kToy: return std::make_unique<ToyEncoder>(spec);
    case EncoderKind::kPretrained:
      throw RuntimeFailure("pretrained backend '" + spec.identifier +
                           "' is not available in this build; implement fsed::Encoder to plug one in");
  }
  throw UsageError("unknown encoder kind");
}

}  // namespace fsed
