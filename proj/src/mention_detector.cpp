#include "coref/mention_detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coref/errors.hpp"

namespace coref {

CandidateSet enumerate_candidates(int length, int max_width) {
  if (max_width < 1) throw ConfigError("max_width must be at least 1");
  CandidateSet out;
  out.max_width = max_width;
  for (int start = 0; start < length; ++start) {
    for (int end = start; end < length && end - start < max_width; ++end) {
      out.spans.push_back({start, end});
    }
  }
  return out;
}

MentionScorerWeights MentionScorerWeights::zeros(int span_dim, int hidden_dim) {
  MentionScorerWeights w;
  w.hidden = Matrix::Zero(span_dim, hidden_dim);
  w.hidden_bias = Matrix::Zero(1, hidden_dim);
  w.output = Matrix::Zero(hidden_dim, 1);
  w.output_bias = Matrix::Zero(1, 1);
  return w;
}

MentionScorerWeights MentionScorerWeights::random(int span_dim, int hidden_dim,
                                                  std::mt19937_64& rng) {
  MentionScorerWeights w = zeros(span_dim, hidden_dim);
  fill_xavier(w.hidden, rng);
  fill_xavier(w.output, rng);
  return w;
}

MentionScores mention_scores(const Matrix& span_reps,
                             const MentionScorerWeights& weights) {
  if (span_reps.cols() != weights.hidden.rows()) {
    throw ValidationError("span representation width " +
                          std::to_string(span_reps.cols()) +
                          " does not match mention scorer input " +
                          std::to_string(weights.hidden.rows()));
  }
  MentionScores out;
  out.hidden_pre = span_reps * weights.hidden;
  out.hidden_pre.rowwise() += weights.hidden_bias.row(0);
  out.logit = out.hidden_pre.cwiseMax(0.0) * weights.output.col(0);
  out.logit.array() += weights.output_bias(0, 0);
  out.probability = out.logit.unaryExpr([](double x) { return sigmoid(x); });
  return out;
}

void mention_scores_backward(const Matrix& span_reps,
                             const MentionScorerWeights& weights,
                             const MentionScores& scores, const Vector& d_logit,
                             Matrix& d_span_reps, MentionScorerWeights& grads) {
  const Matrix active = scores.hidden_pre.cwiseMax(0.0);
  grads.output.col(0).noalias() += active.transpose() * d_logit;
  grads.output_bias(0, 0) += d_logit.sum();
  Matrix d_pre = d_logit * weights.output.col(0).transpose();
  d_pre.array() *= (scores.hidden_pre.array() > 0.0).cast<double>();
  grads.hidden.noalias() += span_reps.transpose() * d_pre;
  grads.hidden_bias += d_pre.colwise().sum();
  d_span_reps.noalias() += d_pre * weights.hidden.transpose();
}

PrunedCandidates c2f_prune(const CandidateSet& candidates,
                           const MentionScores& scores, double lambda_keep,
                           int length) {
  if (!(lambda_keep > 0.0)) throw ConfigError("lambda_keep must be positive");
  PrunedCandidates out;
  const double wanted = std::ceil(lambda_keep * static_cast<double>(length));
  const std::size_t n = candidates.spans.size();
  out.max_kept = wanted >= static_cast<double>(n) ? n : static_cast<std::size_t>(wanted);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores.logit(static_cast<Eigen::Index>(a)) >
           scores.logit(static_cast<Eigen::Index>(b));
  });
  order.resize(out.max_kept);
  std::sort(order.begin(), order.end());
  out.kept = std::move(order);
  return out;
}

PrunedCandidates high_precision_prune(const PrunedCandidates& pruned,
                                      const MentionScores& scores, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("q must lie in [0,1]");
  PrunedCandidates out;
  out.max_kept = pruned.max_kept;
  out.threshold = q;
  for (std::size_t index : pruned.kept) {
    if (scores.probability(static_cast<Eigen::Index>(index)) > q) {
      out.kept.push_back(index);
    }
  }
  return out;
}

MentionLoss md_loss(const CandidateSet& candidates, const MentionScores& scores,
                    const MentionAnnotation& gold) {
  MentionLoss out;
  out.d_logit = Vector::Zero(static_cast<Eigen::Index>(candidates.spans.size()));
  for (const auto& span : gold.mentions) {
    if (span.width() > candidates.max_width) ++out.skipped_gold;
  }
  for (std::size_t i = 0; i < candidates.spans.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double label = gold.contains(candidates.spans[i]) ? 1.0 : 0.0;
    const double logit = scores.logit(k);
    // -[g log sigma(x) + (1-g) log(1 - sigma(x))] = softplus(x) - g x
    out.loss += softplus(logit) - label * logit;
    out.d_logit(k) = scores.probability(k) - label;
  }
  return out;
}

}  // namespace coref
