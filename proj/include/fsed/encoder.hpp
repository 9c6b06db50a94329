#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "fsed/promptkit.hpp"
#include "fsed/tensor.hpp"

namespace fsed {

enum class EncoderKind { kToy, kPretrained };

std::string_view to_string(EncoderKind k);
EncoderKind parse_encoder_kind(std::string_view s);

struct EncoderSpec {
  EncoderKind kind = EncoderKind::kToy;
  std::string identifier = "toy";
  std::size_t max_tokens = 512;
  std::size_t dim = 32;
  std::uint64_t seed = 42;
  Vocabulary vocab;
};

struct EncoderOutput {
  Matrix hidden;             // tokens x d
  Vector mask_vocab_logits;  // vocabulary logits at the mask position
  std::size_t d() const { return static_cast<std::size_t>(hidden.cols()); }
};

// Masked-language-model backend. Implementations must be deterministic for
// fixed parameters; encode() is safe to call concurrently, parameter updates
// are not.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual const EncoderSpec& spec() const = 0;
  virtual const Segmenter& segmenter() const = 0;

  // Throws UsageError for an out-of-range mask or over-length input.
  virtual EncoderOutput encode(std::span<const int> tokens, std::size_t mask_position) const = 0;

  virtual ParameterSet& parameters() = 0;
  virtual const ParameterSet& parameters() const = 0;

  // Accumulates into `grads` the gradient of a loss whose partials with
  // respect to the mask-position logits and the mask-position hidden vector
  // are given. Either partial may be empty (size 0).
  virtual void backward(std::span<const int> tokens, std::size_t mask_position, const Vector& d_logits,
                        const Vector& d_mask_hidden, ParameterSet& grads) const = 0;

  virtual std::unique_ptr<Encoder> clone() const = 0;
};

// Small trainable MLM:
//   x_i = E[t_i] + P[i]
//   a_i = softmax_j(x_i^T Q x_j / sqrt(d))
//   c_i = sum_j a_ij x_j
//   h_i = x_i + tanh(A x_i + B c_i + b)
//   logits = E h_mask + o           (output projection tied to E)
class ToyEncoder final : public Encoder {
 public:
  // Parameters drawn from N(0, 1/d) (matrices) and zero (biases), seeded by spec.seed.
  explicit ToyEncoder(EncoderSpec spec);
  ToyEncoder(EncoderSpec spec, ParameterSet params);
  // The segmenter refers to spec_.vocab, so copies rebind it.
  ToyEncoder(const ToyEncoder& o) : spec_(o.spec_), segmenter_(spec_.vocab), params_(o.params_) {}
  ToyEncoder& operator=(const ToyEncoder&) = delete;

  const EncoderSpec& spec() const override { return spec_; }
  const Segmenter& segmenter() const override { return segmenter_; }
  EncoderOutput encode(std::span<const int> tokens, std::size_t mask_position) const override;
  ParameterSet& parameters() override { return params_; }
  const ParameterSet& parameters() const override { return params_; }
  void backward(std::span<const int> tokens, std::size_t mask_position, const Vector& d_logits,
                const Vector& d_mask_hidden, ParameterSet& grads) const override;
  std::unique_ptr<Encoder> clone() const override;

 private:
  struct Trace {
    Matrix x;    // inputs, n x d
    Matrix attn;  // n x n, rows sum to 1
    Matrix ctx;   // attended inputs, n x d
    Matrix act;  // tanh activations, n x d
  };
  void check(std::span<const int> tokens, std::size_t mask_position) const;
  EncoderOutput forward(std::span<const int> tokens, std::size_t mask_position, Trace& trace) const;

  EncoderSpec spec_;
  WordPieceSegmenter segmenter_;
  ParameterSet params_;
};

// A seeded toy encoder over a placeholder vocabulary of `vocab_size` entries
// (the five specials plus "tok5", "tok6", ...).
ToyEncoder toy_encoder(std::uint64_t seed, std::size_t d, std::size_t vocab_size, std::size_t max_tokens = 512);

// Builds the backend named by `spec`. Only the toy backend is compiled into
// this library; the pretrained kind throws RuntimeFailure naming the missing
// backend.
std::unique_ptr<Encoder> make_encoder(const EncoderSpec& spec);

}  // namespace fsed
