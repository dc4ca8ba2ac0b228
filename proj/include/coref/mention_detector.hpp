#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "coref/corpus.hpp"
#include "coref/tensor.hpp"

namespace coref {

struct CandidateSet {
  std::vector<Span> spans;  // by start, then end
  int max_width = 1;
};

// Every span of width <= max_width in a document of `length` tokens.
CandidateSet enumerate_candidates(int length, int max_width);

// One-hidden-layer ReLU scorer over span representations.
struct MentionScorerWeights {
  Matrix hidden;       // span_dim x hidden
  Matrix hidden_bias;  // 1 x hidden
  Matrix output;       // hidden x 1
  Matrix output_bias;  // 1 x 1

  static MentionScorerWeights zeros(int span_dim, int hidden_dim);
  static MentionScorerWeights random(int span_dim, int hidden_dim,
                                     std::mt19937_64& rng);

  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    fn("mention.hidden", self.hidden);
    fn("mention.hidden_bias", self.hidden_bias);
    fn("mention.output", self.output);
    fn("mention.output_bias", self.output_bias);
  }
};

// Raw logit s_m and its logistic probability per candidate.
struct MentionScores {
  Vector logit;
  Vector probability;
  Matrix hidden_pre;  // cached pre-activations for the backward pass
};

// Throws ValidationError when the representation width does not match.
MentionScores mention_scores(const Matrix& span_reps,
                             const MentionScorerWeights& weights);

// d_span_reps receives the gradient w.r.t. the representations (added).
void mention_scores_backward(const Matrix& span_reps,
                             const MentionScorerWeights& weights,
                             const MentionScores& scores, const Vector& d_logit,
                             Matrix& d_span_reps, MentionScorerWeights& grads);

struct PrunedCandidates {
  std::vector<std::size_t> kept;  // candidate indices in document order
  std::size_t max_kept = 0;       // M
  double threshold = 0.0;         // q; 0 when high-precision pruning is off
};

// Keeps the ceil(lambda_keep x length) highest-logit candidates; equal logits
// prefer the earlier span.
PrunedCandidates c2f_prune(const CandidateSet& candidates,
                           const MentionScores& scores, double lambda_keep,
                           int length);

// Retains the kept spans whose probability strictly exceeds q.
PrunedCandidates high_precision_prune(const PrunedCandidates& pruned,
                                      const MentionScores& scores, double q);

struct MentionLoss {
  double loss = 0.0;
  Vector d_logit;                 // one entry per candidate
  std::size_t skipped_gold = 0;   // gold spans wider than max_width
};

// Summed binary cross-entropy between each candidate's probability and its
// gold indicator.
MentionLoss md_loss(const CandidateSet& candidates, const MentionScores& scores,
                    const MentionAnnotation& gold);

class CorefModel;

// Silver mentions per document: the c2f survivors whose probability exceeds q.
std::map<std::string, MentionAnnotation> tag_silver(const Corpus& unlabeled,
                                                    const CorefModel& detector,
                                                    double q);

}  // namespace coref
