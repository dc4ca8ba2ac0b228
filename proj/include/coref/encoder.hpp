#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coref/corpus.hpp"
#include "coref/tensor.hpp"

namespace coref {

struct EncoderConfig {
  int vocab_size = 2;
  int embedding_dim = 32;
  int context_layers = 1;
  int hidden_dim = 32;  // per direction
  int max_segment_length = 512;
  int width_buckets = 10;
  int width_dim = 16;
  std::uint64_t seed = 0;

  // Token vectors are the embedding concatenated with the last context
  // layer's forward and backward states.
  int token_dim() const {
    return embedding_dim + (context_layers > 0 ? 2 * hidden_dim : 0);
  }
  // [start; end; attended head; width embedding]
  int span_dim() const { return 3 * token_dim() + width_dim; }

  void validate() const;
};

// Elman recurrences in both directions over each segment.
struct RecurrentLayer {
  Matrix input_fwd, recurrent_fwd, bias_fwd;
  Matrix input_bwd, recurrent_bwd, bias_bwd;
};

struct EncoderWeights {
  Matrix embedding;  // vocab x embedding_dim
  std::vector<RecurrentLayer> layers;
  Matrix span_attention;   // token_dim x 1
  Matrix width_embedding;  // width_buckets x width_dim
  Matrix mlm_output;       // token_dim x vocab
  Matrix mlm_bias;         // 1 x vocab

  static EncoderWeights zeros(const EncoderConfig& config);
  static EncoderWeights random(const EncoderConfig& config, std::mt19937_64& rng);

  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    fn("encoder.embedding", self.embedding);
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      const std::string p = "encoder.layer" + std::to_string(l) + ".";
      fn(p + "input_fwd", self.layers[l].input_fwd);
      fn(p + "recurrent_fwd", self.layers[l].recurrent_fwd);
      fn(p + "bias_fwd", self.layers[l].bias_fwd);
      fn(p + "input_bwd", self.layers[l].input_bwd);
      fn(p + "recurrent_bwd", self.layers[l].recurrent_bwd);
      fn(p + "bias_bwd", self.layers[l].bias_bwd);
    }
    fn("encoder.span_attention", self.span_attention);
    fn("encoder.width_embedding", self.width_embedding);
    fn("encoder.mlm_output", self.mlm_output);
    fn("encoder.mlm_bias", self.mlm_bias);
  }
};

// Activations of one encoder pass, kept for the backward pass.
struct EncoderActivations {
  std::vector<int> ids;
  std::vector<std::pair<int, int>> segments;  // [begin, end)
  Matrix embedded;
  std::vector<Matrix> forward_states;
  std::vector<Matrix> backward_states;
  Matrix token_vectors;  // T x token_dim
};

// Non-overlapping segments of at most max_segment_length tokens.
std::vector<std::pair<int, int>> segment_bounds(int length, int max_segment_length);

// Throws ValidationError on an empty id sequence or an id outside the vocabulary.
EncoderActivations encode(const EncoderConfig& config, const EncoderWeights& weights,
                          std::span<const int> ids);

// Accumulates parameter gradients into `grads`.
void encode_backward(const EncoderConfig& config, const EncoderWeights& weights,
                     const EncoderActivations& act, const Matrix& d_token_vectors,
                     EncoderWeights& grads);

int width_bucket(const Span& span, int width_buckets);

struct SpanActivations {
  std::vector<Span> spans;
  Matrix reps;                   // one row per span, span_dim wide
  std::vector<Vector> attention;  // per span, weights over its tokens
};

SpanActivations span_representations(const EncoderConfig& config,
                                     const EncoderWeights& weights,
                                     const Matrix& token_vectors,
                                     const std::vector<Span>& spans);

// Adds into d_token_vectors and the span-attention / width-embedding grads.
void span_representations_backward(const EncoderConfig& config,
                                   const EncoderWeights& weights,
                                   const Matrix& token_vectors,
                                   const SpanActivations& act, const Matrix& d_reps,
                                   Matrix& d_token_vectors, EncoderWeights& grads);

struct MaskingPlan {
  std::vector<int> masked_positions;  // ascending
  std::vector<int> original_ids;      // parallel to masked_positions
};

// round-half-up(rate x length) distinct positions, deterministic per seed.
MaskingPlan make_masking_plan(std::span<const int> ids, double rate,
                              std::uint64_t seed);
int masked_count(int length, double rate);

// Mean cross-entropy of predicting each masked token from the encoding of the
// document with those tokens replaced by the mask id. Zero for an empty plan.
// Gradients are accumulated into `grads` when it is non-null.
double mlm_loss(const EncoderConfig& config, const EncoderWeights& weights,
                std::span<const int> ids, const MaskingPlan& plan,
                EncoderWeights* grads);

}  // namespace coref
