#include "coref/encoder.hpp"

#include <algorithm>
#include <numeric>

#include "coref/errors.hpp"
#include "coref/vocabulary.hpp"

namespace coref {

void EncoderConfig::validate() const {
  if (vocab_size < 2 || embedding_dim < 1 || context_layers < 0 ||
      hidden_dim < 1 || max_segment_length < 1 || width_buckets < 1 ||
      width_dim < 1) {
    throw ConfigError("encoder dimensions must be positive");
  }
}

EncoderWeights EncoderWeights::zeros(const EncoderConfig& config) {
  EncoderWeights w;
  const int e = config.embedding_dim;
  const int h = config.hidden_dim;
  const int d = config.token_dim();
  w.embedding = Matrix::Zero(config.vocab_size, e);
  for (int l = 0; l < config.context_layers; ++l) {
    const int in = l == 0 ? e : 2 * h;
    RecurrentLayer layer;
    layer.input_fwd = Matrix::Zero(in, h);
    layer.recurrent_fwd = Matrix::Zero(h, h);
    layer.bias_fwd = Matrix::Zero(1, h);
    layer.input_bwd = Matrix::Zero(in, h);
    layer.recurrent_bwd = Matrix::Zero(h, h);
    layer.bias_bwd = Matrix::Zero(1, h);
    w.layers.push_back(std::move(layer));
  }
  w.span_attention = Matrix::Zero(d, 1);
  w.width_embedding = Matrix::Zero(config.width_buckets, config.width_dim);
  w.mlm_output = Matrix::Zero(d, config.vocab_size);
  w.mlm_bias = Matrix::Zero(1, config.vocab_size);
  return w;
}

EncoderWeights EncoderWeights::random(const EncoderConfig& config,
                                      std::mt19937_64& rng) {
  EncoderWeights w = zeros(config);
  // Unit-scale embeddings: entries with variance 1/embedding_dim.
  fill_uniform(w.embedding, std::sqrt(3.0 / config.embedding_dim), rng);
  for (auto& layer : w.layers) {
    fill_xavier(layer.input_fwd, rng);
    fill_xavier(layer.recurrent_fwd, rng);
    fill_xavier(layer.input_bwd, rng);
    fill_xavier(layer.recurrent_bwd, rng);
  }
  fill_xavier(w.span_attention, rng);
  fill_uniform(w.width_embedding, 0.1, rng);
  fill_xavier(w.mlm_output, rng);
  return w;
}

std::vector<std::pair<int, int>> segment_bounds(int length,
                                                int max_segment_length) {
  std::vector<std::pair<int, int>> out;
  for (int begin = 0; begin < length; begin += max_segment_length) {
    out.emplace_back(begin, std::min(length, begin + max_segment_length));
  }
  return out;
}

namespace {

// One direction of one recurrent layer. `projected` holds input x W + b.
void run_direction(const Matrix& projected, const Matrix& recurrent,
                   const std::vector<std::pair<int, int>>& segments,
                   bool reverse, Matrix& states) {
  states.resize(projected.rows(), projected.cols());
  for (const auto& [begin, end] : segments) {
    for (int step = 0; step < end - begin; ++step) {
      const int t = reverse ? end - 1 - step : begin + step;
      RowVector pre = projected.row(t);
      if (step > 0) {
        const int prev = reverse ? t + 1 : t - 1;
        pre.noalias() += states.row(prev) * recurrent;
      }
      states.row(t) = pre.array().tanh().matrix();
    }
  }
}

// Backpropagation through time for one direction. Returns d(projected).
Matrix backprop_direction(const Matrix& states, const Matrix& recurrent,
                          const std::vector<std::pair<int, int>>& segments,
                          bool reverse, const Matrix& d_states,
                          Matrix& d_recurrent) {
  Matrix d_pre = Matrix::Zero(states.rows(), states.cols());
  for (const auto& [begin, end] : segments) {
    RowVector carry = RowVector::Zero(states.cols());
    for (int step = end - begin - 1; step >= 0; --step) {
      const int t = reverse ? end - 1 - step : begin + step;
      RowVector dh = d_states.row(t) + carry;
      RowVector da =
          (dh.array() * (1.0 - states.row(t).array().square())).matrix();
      d_pre.row(t) = da;
      if (step > 0) {
        const int prev = reverse ? t + 1 : t - 1;
        d_recurrent.noalias() += states.row(prev).transpose() * da;
        carry.noalias() = da * recurrent.transpose();
      }
    }
  }
  return d_pre;
}

Matrix layer_input(const EncoderActivations& act, int layer) {
  if (layer == 0) return act.embedded;
  Matrix in(act.embedded.rows(), 2 * act.forward_states[layer - 1].cols());
  in << act.forward_states[layer - 1], act.backward_states[layer - 1];
  return in;
}

}  // namespace

EncoderActivations encode(const EncoderConfig& config,
                          const EncoderWeights& weights,
                          std::span<const int> ids) {
  if (ids.empty()) throw ValidationError("cannot encode an empty document");
  const int length = static_cast<int>(ids.size());
  EncoderActivations act;
  act.ids.assign(ids.begin(), ids.end());
  act.segments = segment_bounds(length, config.max_segment_length);
  act.embedded.resize(length, config.embedding_dim);
  for (int t = 0; t < length; ++t) {
    if (ids[t] < 0 || ids[t] >= weights.embedding.rows()) {
      throw ValidationError("token id " + std::to_string(ids[t]) +
                            " outside the vocabulary");
    }
    act.embedded.row(t) = weights.embedding.row(ids[t]);
  }
  for (int l = 0; l < config.context_layers; ++l) {
    const RecurrentLayer& layer = weights.layers[l];
    const Matrix in = layer_input(act, l);
    Matrix fwd_proj = in * layer.input_fwd;
    fwd_proj.rowwise() += layer.bias_fwd.row(0);
    Matrix bwd_proj = in * layer.input_bwd;
    bwd_proj.rowwise() += layer.bias_bwd.row(0);
    Matrix fwd, bwd;
    run_direction(fwd_proj, layer.recurrent_fwd, act.segments, false, fwd);
    run_direction(bwd_proj, layer.recurrent_bwd, act.segments, true, bwd);
    act.forward_states.push_back(std::move(fwd));
    act.backward_states.push_back(std::move(bwd));
  }
  act.token_vectors.resize(length, config.token_dim());
  act.token_vectors.leftCols(config.embedding_dim) = act.embedded;
  if (config.context_layers > 0) {
    const int h = config.hidden_dim;
    act.token_vectors.middleCols(config.embedding_dim, h) =
        act.forward_states.back();
    act.token_vectors.rightCols(h) = act.backward_states.back();
  }
  return act;
}

void encode_backward(const EncoderConfig& config, const EncoderWeights& weights,
                     const EncoderActivations& act,
                     const Matrix& d_token_vectors, EncoderWeights& grads) {
  const int e = config.embedding_dim;
  const int h = config.hidden_dim;
  Matrix d_embedded = d_token_vectors.leftCols(e);
  if (config.context_layers > 0) {
    Matrix d_out(d_token_vectors.rows(), 2 * h);
    d_out << d_token_vectors.middleCols(e, h), d_token_vectors.rightCols(h);
    for (int l = config.context_layers - 1; l >= 0; --l) {
      const RecurrentLayer& layer = weights.layers[l];
      RecurrentLayer& g = grads.layers[l];
      const Matrix in = layer_input(act, l);
      const Matrix d_fwd_pre =
          backprop_direction(act.forward_states[l], layer.recurrent_fwd,
                             act.segments, false, d_out.leftCols(h),
                             g.recurrent_fwd);
      const Matrix d_bwd_pre =
          backprop_direction(act.backward_states[l], layer.recurrent_bwd,
                             act.segments, true, d_out.rightCols(h),
                             g.recurrent_bwd);
      g.input_fwd.noalias() += in.transpose() * d_fwd_pre;
      g.input_bwd.noalias() += in.transpose() * d_bwd_pre;
      g.bias_fwd += d_fwd_pre.colwise().sum();
      g.bias_bwd += d_bwd_pre.colwise().sum();
      Matrix d_in = d_fwd_pre * layer.input_fwd.transpose();
      d_in.noalias() += d_bwd_pre * layer.input_bwd.transpose();
      if (l == 0) {
        d_embedded += d_in;
      } else {
        d_out = d_in;
      }
    }
  }
  for (int t = 0; t < static_cast<int>(act.ids.size()); ++t) {
    grads.embedding.row(act.ids[t]) += d_embedded.row(t);
  }
}

int width_bucket(const Span& span, int width_buckets) {
  return std::min(span.width() - 1, width_buckets - 1);
}

SpanActivations span_representations(const EncoderConfig& config,
                                     const EncoderWeights& weights,
                                     const Matrix& token_vectors,
                                     const std::vector<Span>& spans) {
  const int d = config.token_dim();
  const int length = static_cast<int>(token_vectors.rows());
  SpanActivations act;
  act.spans = spans;
  act.reps.resize(static_cast<Eigen::Index>(spans.size()), config.span_dim());
  act.attention.resize(spans.size());
  const Vector scores = token_vectors * weights.span_attention.col(0);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const Span& span = spans[i];
    if (span.start < 0 || span.end < span.start || span.end >= length) {
      throw ValidationError("span " + to_string(span) + " out of bounds");
    }
    const int width = span.width();
    Vector alpha = scores.segment(span.start, width);
    alpha = (alpha.array() - alpha.maxCoeff()).exp().matrix();
    alpha /= alpha.sum();
    auto row = act.reps.row(static_cast<Eigen::Index>(i));
    row.segment(0, d) = token_vectors.row(span.start);
    row.segment(d, d) = token_vectors.row(span.end);
    row.segment(2 * d, d) =
        alpha.transpose() * token_vectors.middleRows(span.start, width);
    row.segment(3 * d, config.width_dim) =
        weights.width_embedding.row(width_bucket(span, config.width_buckets));
    act.attention[i] = std::move(alpha);
  }
  return act;
}

void span_representations_backward(const EncoderConfig& config,
                                   const EncoderWeights& weights,
                                   const Matrix& token_vectors,
                                   const SpanActivations& act,
                                   const Matrix& d_reps,
                                   Matrix& d_token_vectors,
                                   EncoderWeights& grads) {
  const int d = config.token_dim();
  const RowVector attention_row = weights.span_attention.col(0).transpose();
  for (std::size_t i = 0; i < act.spans.size(); ++i) {
    const Span& span = act.spans[i];
    const auto d_row = d_reps.row(static_cast<Eigen::Index>(i));
    d_token_vectors.row(span.start) += d_row.segment(0, d);
    d_token_vectors.row(span.end) += d_row.segment(d, d);
    const RowVector d_head = d_row.segment(2 * d, d);
    const Vector& alpha = act.attention[i];
    const int width = span.width();
    const auto tokens = token_vectors.middleRows(span.start, width);
    const Vector d_alpha = tokens * d_head.transpose();
    const double mean = alpha.dot(d_alpha);
    const Vector d_score = (alpha.array() * (d_alpha.array() - mean)).matrix();
    for (int k = 0; k < width; ++k) {
      d_token_vectors.row(span.start + k) +=
          alpha(k) * d_head + d_score(k) * attention_row;
    }
    grads.span_attention.col(0).noalias() += tokens.transpose() * d_score;
    grads.width_embedding.row(width_bucket(span, config.width_buckets)) +=
        d_row.segment(3 * d, config.width_dim);
  }
}

int masked_count(int length, double rate) {
  // Round half up; the epsilon keeps 0.15 x 10 = 1.5 from flooring to 1.
  return static_cast<int>(std::floor(rate * length + 0.5 + 1e-9));
}

MaskingPlan make_masking_plan(std::span<const int> ids, double rate,
                              std::uint64_t seed) {
  MaskingPlan plan;
  const int length = static_cast<int>(ids.size());
  const int count = std::min(length, masked_count(length, rate));
  if (count <= 0) return plan;
  std::vector<int> positions(length);
  std::iota(positions.begin(), positions.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `count` entries become a uniform sample.
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<int> pick(i, length - 1);
    std::swap(positions[i], positions[pick(rng)]);
  }
  positions.resize(count);
  std::sort(positions.begin(), positions.end());
  plan.masked_positions = positions;
  for (int p : positions) plan.original_ids.push_back(ids[p]);
  return plan;
}

double mlm_loss(const EncoderConfig& config, const EncoderWeights& weights,
                std::span<const int> ids, const MaskingPlan& plan,
                EncoderWeights* grads) {
  if (plan.masked_positions.empty()) return 0.0;
  std::vector<int> masked(ids.begin(), ids.end());
  for (int p : plan.masked_positions) {
    if (p < 0 || p >= static_cast<int>(masked.size())) {
      throw ValidationError("masking plan position out of range");
    }
    masked[p] = Vocabulary::kMaskId;
  }
  const EncoderActivations act = encode(config, weights, masked);
  const int count = static_cast<int>(plan.masked_positions.size());
  Matrix hidden(count, config.token_dim());
  for (int k = 0; k < count; ++k) {
    hidden.row(k) = act.token_vectors.row(plan.masked_positions[k]);
  }
  Matrix logits = hidden * weights.mlm_output;
  logits.rowwise() += weights.mlm_bias.row(0);
  double loss = 0.0;
  Matrix d_logits(count, logits.cols());
  for (int k = 0; k < count; ++k) {
    const double top = logits.row(k).maxCoeff();
    RowVector probs = (logits.row(k).array() - top).exp().matrix();
    const double z = probs.sum();
    loss += std::log(z) + top - logits(k, plan.original_ids[k]);
    probs /= z;
    probs(plan.original_ids[k]) -= 1.0;
    d_logits.row(k) = probs / count;
  }
  loss /= count;
  if (grads != nullptr) {
    grads->mlm_output.noalias() += hidden.transpose() * d_logits;
    grads->mlm_bias += d_logits.colwise().sum();
    const Matrix d_hidden = d_logits * weights.mlm_output.transpose();
    Matrix d_tokens = Matrix::Zero(act.token_vectors.rows(), act.token_vectors.cols());
    for (int k = 0; k < count; ++k) {
      d_tokens.row(plan.masked_positions[k]) += d_hidden.row(k);
    }
    encode_backward(config, weights, act, d_tokens, *grads);
  }
  return loss;
}

}  // namespace coref
