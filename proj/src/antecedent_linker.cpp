#include "coref/antecedent_linker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "coref/errors.hpp"

namespace coref {

int distance_bucket(int offset) {
  if (offset < 1) throw ValidationError("antecedent offset must be positive");
  if (offset <= 3) return offset - 1;
  if (offset < 8) return 3;
  if (offset < 16) return 4;
  if (offset < 32) return 5;
  if (offset < 64) return 6;
  return 7;
}

LinkerWeights LinkerWeights::zeros(int span_dim, int distance_dim,
                                   int hidden_dim) {
  LinkerWeights w;
  w.coarse = Matrix::Zero(span_dim, span_dim);
  w.distance_embedding = Matrix::Zero(kDistanceBuckets, distance_dim);
  w.hidden = Matrix::Zero(3 * span_dim + distance_dim, hidden_dim);
  w.hidden_bias = Matrix::Zero(1, hidden_dim);
  w.output = Matrix::Zero(hidden_dim, 1);
  w.output_bias = Matrix::Zero(1, 1);
  return w;
}

LinkerWeights LinkerWeights::random(int span_dim, int distance_dim,
                                    int hidden_dim, std::mt19937_64& rng) {
  LinkerWeights w = zeros(span_dim, distance_dim, hidden_dim);
  fill_xavier(w.distance_embedding, rng);
  fill_xavier(w.hidden, rng);
  fill_xavier(w.output, rng);
  return w;
}

Matrix coarse_scores(const Matrix& kept_reps, const LinkerWeights& weights) {
  if (kept_reps.cols() != weights.coarse.rows()) {
    throw ValidationError("span representation width does not match the coarse scorer");
  }
  return kept_reps * weights.coarse * kept_reps.transpose();
}

std::vector<std::vector<std::size_t>> top_antecedents(const Matrix& coarse,
                                                      const Vector& kept_logits,
                                                      int top_k) {
  if (top_k < 1) throw ConfigError("top_k_antecedents must be at least 1");
  const auto n = static_cast<std::size_t>(kept_logits.size());
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> order(i);
    // nearest first, so the stable sort keeps nearer spans ahead on ties
    for (std::size_t c = 0; c < i; ++c) order[c] = i - 1 - c;
    const auto ii = static_cast<Eigen::Index>(i);
    auto score = [&](std::size_t j) {
      const auto jj = static_cast<Eigen::Index>(j);
      return kept_logits(ii) + kept_logits(jj) + coarse(ii, jj);
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score(a) > score(b); });
    if (order.size() > static_cast<std::size_t>(top_k)) order.resize(static_cast<std::size_t>(top_k));
    std::sort(order.begin(), order.end());
    out[i] = std::move(order);
  }
  return out;
}

AntecedentScores antecedent_scores(
    const Matrix& kept_reps, const Vector& kept_logits,
    const std::vector<std::vector<std::size_t>>& candidates,
    const LinkerWeights& weights) {
  const Eigen::Index d = kept_reps.cols();
  const Eigen::Index dd = weights.distance_embedding.cols();
  if (weights.hidden.rows() != 3 * d + dd) {
    throw ValidationError("span representation width " + std::to_string(d) +
                          " does not match the antecedent scorer");
  }
  if (static_cast<std::size_t>(kept_reps.rows()) != candidates.size() ||
      kept_logits.size() != kept_reps.rows()) {
    throw ValidationError("antecedent candidates do not match the kept spans");
  }
  AntecedentScores out;
  out.candidates = candidates;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t j : candidates[i]) {
      if (j >= i) throw ValidationError("antecedent must precede its anaphor");
      out.pairs.emplace_back(i, j);
      out.buckets.push_back(distance_bucket(static_cast<int>(i - j)));
    }
  }
  const auto p = static_cast<Eigen::Index>(out.pairs.size());
  out.pair_input.resize(p, 3 * d + dd);
  for (Eigen::Index r = 0; r < p; ++r) {
    const auto i = static_cast<Eigen::Index>(out.pairs[static_cast<std::size_t>(r)].first);
    const auto j = static_cast<Eigen::Index>(out.pairs[static_cast<std::size_t>(r)].second);
    out.pair_input.block(r, 0, 1, d) = kept_reps.row(i);
    out.pair_input.block(r, d, 1, d) = kept_reps.row(j);
    out.pair_input.block(r, 2 * d, 1, d) = kept_reps.row(i).cwiseProduct(kept_reps.row(j));
    out.pair_input.block(r, 3 * d, 1, dd) =
        weights.distance_embedding.row(out.buckets[static_cast<std::size_t>(r)]);
  }
  out.hidden_pre = out.pair_input * weights.hidden;
  out.hidden_pre.rowwise() += weights.hidden_bias.row(0);
  Vector fine = out.hidden_pre.cwiseMax(0.0) * weights.output.col(0);
  fine.array() += weights.output_bias(0, 0);

  out.scores.resize(candidates.size());
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    Vector s(static_cast<Eigen::Index>(candidates[i].size()) + 1);
    s(0) = 0.0;
    for (std::size_t c = 0; c < candidates[i].size(); ++c, ++r) {
      s(static_cast<Eigen::Index>(c) + 1) =
          kept_logits(static_cast<Eigen::Index>(i)) +
          kept_logits(static_cast<Eigen::Index>(candidates[i][c])) + fine(r);
    }
    out.scores[i] = std::move(s);
  }
  return out;
}

namespace {

double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

std::vector<Vector> antecedent_distributions(const AntecedentScores& scores) {
  std::vector<Vector> out;
  out.reserve(scores.scores.size());
  for (const auto& s : scores.scores) {
    Vector e = (s.array() - s.maxCoeff()).exp();
    out.push_back(e / e.sum());
  }
  return out;
}

CorefLoss coref_loss(const std::vector<Span>& kept_spans,
                     const AntecedentScores& scores, const ClusterSet& gold) {
  CorefLoss out;
  std::vector<std::optional<std::size_t>> cluster(kept_spans.size());
  for (std::size_t i = 0; i < kept_spans.size(); ++i) cluster[i] = gold.cluster_of(kept_spans[i]);

  for (std::size_t i = 0; i < scores.scores.size(); ++i) {
    const Vector& s = scores.scores[i];
    std::vector<Eigen::Index> correct;
    if (cluster[i]) {
      for (std::size_t c = 0; c < scores.candidates[i].size(); ++c) {
        if (cluster[scores.candidates[i][c]] == cluster[i]) {
          correct.push_back(static_cast<Eigen::Index>(c) + 1);
        }
      }
    }
    if (correct.empty()) correct.push_back(0);

    Vector gold_scores(static_cast<Eigen::Index>(correct.size()));
    for (std::size_t k = 0; k < correct.size(); ++k) {
      gold_scores(static_cast<Eigen::Index>(k)) = s(correct[k]);
    }
    const double all = log_sum_exp(s);
    const double good = log_sum_exp(gold_scores);
    out.loss += all - good;

    Vector d = (s.array() - all).exp();
    for (std::size_t k = 0; k < correct.size(); ++k) {
      d(correct[k]) -= std::exp(gold_scores(static_cast<Eigen::Index>(k)) - good);
    }
    out.d_scores.push_back(std::move(d));
  }
  return out;
}

void antecedent_scores_backward(const Matrix& kept_reps,
                                const AntecedentScores& scores,
                                const std::vector<Vector>& d_scores,
                                const LinkerWeights& weights,
                                Matrix& d_kept_reps, Vector& d_kept_logits,
                                LinkerWeights& grads) {
  const Eigen::Index d = kept_reps.cols();
  const Eigen::Index dd = weights.distance_embedding.cols();
  const auto p = static_cast<Eigen::Index>(scores.pairs.size());
  Vector d_fine(p);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < scores.candidates.size(); ++i) {
    for (std::size_t c = 0; c < scores.candidates[i].size(); ++c, ++r) {
      const double g = d_scores[i](static_cast<Eigen::Index>(c) + 1);
      d_fine(r) = g;
      d_kept_logits(static_cast<Eigen::Index>(i)) += g;
      d_kept_logits(static_cast<Eigen::Index>(scores.candidates[i][c])) += g;
    }
  }
  if (p == 0) return;

  const Matrix active = scores.hidden_pre.cwiseMax(0.0);
  grads.output.col(0).noalias() += active.transpose() * d_fine;
  grads.output_bias(0, 0) += d_fine.sum();
  Matrix d_pre = d_fine * weights.output.col(0).transpose();
  d_pre.array() *= (scores.hidden_pre.array() > 0.0).cast<double>();
  grads.hidden.noalias() += scores.pair_input.transpose() * d_pre;
  grads.hidden_bias += d_pre.colwise().sum();
  const Matrix d_input = d_pre * weights.hidden.transpose();

  for (Eigen::Index row = 0; row < p; ++row) {
    const auto i = static_cast<Eigen::Index>(scores.pairs[static_cast<std::size_t>(row)].first);
    const auto j = static_cast<Eigen::Index>(scores.pairs[static_cast<std::size_t>(row)].second);
    const auto d_prod = d_input.block(row, 2 * d, 1, d);
    d_kept_reps.row(i) += d_input.block(row, 0, 1, d) + d_prod.cwiseProduct(kept_reps.row(j));
    d_kept_reps.row(j) += d_input.block(row, d, 1, d) + d_prod.cwiseProduct(kept_reps.row(i));
    grads.distance_embedding.row(scores.buckets[static_cast<std::size_t>(row)]) +=
        d_input.block(row, 3 * d, 1, dd);
  }
}

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void join(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

ClusterSet decode(const std::string& doc_id, const std::vector<Span>& kept_spans,
                  const AntecedentScores& scores, bool emit_singletons) {
  const std::size_t n = kept_spans.size();
  DisjointSets sets(n);
  for (std::size_t i = 0; i < scores.scores.size(); ++i) {
    const Vector& s = scores.scores[i];
    Eigen::Index best = 0;
    for (Eigen::Index c = s.size() - 1; c >= 1; --c) {
      if (s(c) > s(best)) best = c;
    }
    if (best > 0) sets.join(i, scores.candidates[i][static_cast<std::size_t>(best - 1)]);
  }
  std::vector<std::vector<Span>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[sets.find(i)].push_back(kept_spans[i]);
  std::vector<std::vector<Span>> clusters;
  for (auto& g : groups) {
    if (g.size() >= 2 || (g.size() == 1 && emit_singletons)) clusters.push_back(std::move(g));
  }
  return ClusterSet(doc_id, std::move(clusters));
}

}  // namespace coref
