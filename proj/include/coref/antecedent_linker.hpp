#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "coref/corpus.hpp"
#include "coref/tensor.hpp"

namespace coref {

inline constexpr int kDistanceBuckets = 8;

// Buckets for antecedent offsets 1, 2, 3, 4-7, 8-15, 16-31, 32-63, 64+.
int distance_bucket(int offset);

struct LinkerWeights {
  Matrix coarse;              // span_dim x span_dim, bilinear
  Matrix distance_embedding;  // kDistanceBuckets x distance_dim
  Matrix hidden;              // (3 span_dim + distance_dim) x hidden
  Matrix hidden_bias;         // 1 x hidden
  Matrix output;              // hidden x 1
  Matrix output_bias;         // 1 x 1

  static LinkerWeights zeros(int span_dim, int distance_dim, int hidden_dim);
  // The coarse matrix starts at zero: it only ranks candidates and gets no
  // gradient, so a random start would be frozen noise.
  static LinkerWeights random(int span_dim, int distance_dim, int hidden_dim,
                              std::mt19937_64& rng);

  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    fn("linker.coarse", self.coarse);
    fn("linker.distance_embedding", self.distance_embedding);
    fn("linker.hidden", self.hidden);
    fn("linker.hidden_bias", self.hidden_bias);
    fn("linker.output", self.output);
    fn("linker.output_bias", self.output_bias);
  }
};

// Coarse pairwise matrix u_i^T W u_j over the kept span vectors.
Matrix coarse_scores(const Matrix& kept_reps, const LinkerWeights& weights);

// For each anaphor, the indices of its top_k preceding kept spans ranked by
// logit(i) + logit(j) + coarse(i,j); equal scores prefer the nearer span.
// Each list is returned in ascending (document) order.
std::vector<std::vector<std::size_t>> top_antecedents(const Matrix& coarse,
                                                      const Vector& kept_logits,
                                                      int top_k);

struct AntecedentScores {
  // candidates[i] lists antecedent indices into the kept spans; the score
  // vector for anaphor i has entry 0 for the dummy and entry c+1 for
  // candidates[i][c].
  std::vector<std::vector<std::size_t>> candidates;
  std::vector<Vector> scores;
  // Cached for the backward pass: one row per (i, j) pair.
  Matrix pair_input;
  Matrix hidden_pre;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<int> buckets;
};

// s(i,j) = logit(i) + logit(j) + s_a(i,j); s(i, dummy) = 0.
AntecedentScores antecedent_scores(
    const Matrix& kept_reps, const Vector& kept_logits,
    const std::vector<std::vector<std::size_t>>& candidates,
    const LinkerWeights& weights);

// Softmax over each anaphor's scores.
std::vector<Vector> antecedent_distributions(const AntecedentScores& scores);

struct CorefLoss {
  double loss = 0.0;
  std::vector<Vector> d_scores;  // parallel to AntecedentScores::scores
};

// Negative marginal log-likelihood of the correct antecedents. A span with no
// gold-cluster candidate (or outside every gold cluster) is trained toward the
// dummy.
CorefLoss coref_loss(const std::vector<Span>& kept_spans,
                     const AntecedentScores& scores, const ClusterSet& gold);

// Adds into d_kept_reps / d_kept_logits and the parameter gradients.
void antecedent_scores_backward(const Matrix& kept_reps,
                                const AntecedentScores& scores,
                                const std::vector<Vector>& d_scores,
                                const LinkerWeights& weights,
                                Matrix& d_kept_reps, Vector& d_kept_logits,
                                LinkerWeights& grads);

// Argmax linking (ties go to the dummy, then to the nearer antecedent),
// closed under union.
ClusterSet decode(const std::string& doc_id, const std::vector<Span>& kept_spans,
                  const AntecedentScores& scores, bool emit_singletons);

}  // namespace coref
