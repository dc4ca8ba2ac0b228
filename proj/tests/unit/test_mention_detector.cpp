#include <doctest.h>

#include <algorithm>
#include <random>

#include "coref/errors.hpp"
#include "coref/mention_detector.hpp"

using namespace coref;

namespace {

MentionScores scores_from(const Vector& logits) {
  MentionScores s;
  s.logit = logits;
  s.probability = logits.unaryExpr([](double x) { return sigmoid(x); });
  return s;
}

// Sort oracle: indices of the M largest logits, ties by lower index, then
// returned in ascending order.
std::vector<std::size_t> top_m_oracle(const Vector& logits, std::size_t m) {
  std::vector<std::pair<double, std::size_t>> keyed;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    keyed.push_back({-logits(i), static_cast<std::size_t>(i)});
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < m && k < keyed.size(); ++k) out.push_back(keyed[k].second);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("candidate enumeration") {
  CandidateSet c = enumerate_candidates(5, 2);
  CHECK(c.spans.size() == 9);  // 5 + 4
  CHECK(c.spans.front() == Span{0, 0});
  CHECK(c.spans[1] == Span{0, 1});
  CHECK(std::is_sorted(c.spans.begin(), c.spans.end()));
  for (int t = 1; t < 12; ++t) {
    for (int w = 1; w < 6; ++w) {
      std::size_t expected = 0;
      for (int k = 1; k <= std::min(w, t); ++k) expected += static_cast<std::size_t>(t - k + 1);
      CHECK(enumerate_candidates(t, w).spans.size() == expected);
    }
  }
}

TEST_CASE("c2f pruning matches the sort oracle") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> length(1, 30);
  std::uniform_int_distribution<int> width(1, 5);
  std::uniform_int_distribution<int> coarse(-3, 3);  // forces ties
  std::uniform_real_distribution<double> lambda(0.05, 1.5);
  for (int trial = 0; trial < 1000; ++trial) {
    const int t = length(rng);
    CandidateSet c = enumerate_candidates(t, width(rng));
    Vector logits(static_cast<Eigen::Index>(c.spans.size()));
    for (Eigen::Index i = 0; i < logits.size(); ++i) logits(i) = coarse(rng);
    const double l = lambda(rng);
    PrunedCandidates p = c2f_prune(c, scores_from(logits), l, t);
    const auto m = std::min(c.spans.size(), static_cast<std::size_t>(std::ceil(l * t)));
    CHECK(p.max_kept == m);
    CHECK(p.kept == top_m_oracle(logits, m));
  }
}

TEST_CASE("high-precision pruning properties") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> logit(0.0, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    CandidateSet c = enumerate_candidates(20, 3);
    Vector logits(static_cast<Eigen::Index>(c.spans.size()));
    for (Eigen::Index i = 0; i < logits.size(); ++i) logits(i) = logit(rng);
    MentionScores s = scores_from(logits);
    PrunedCandidates base = c2f_prune(c, s, 0.8, 20);
    CHECK(high_precision_prune(base, s, 0.0).kept == base.kept);
    CHECK(high_precision_prune(base, s, 1.0).kept.empty());
    double a = unit(rng);
    double b = unit(rng);
    if (a > b) std::swap(a, b);
    PrunedCandidates low = high_precision_prune(base, s, a);
    PrunedCandidates high = high_precision_prune(base, s, b);
    CHECK(std::includes(low.kept.begin(), low.kept.end(), high.kept.begin(), high.kept.end()));
    CHECK(high_precision_prune(low, s, a).kept == low.kept);
    CHECK(low.threshold == a);
    for (std::size_t k : low.kept) CHECK(s.probability(static_cast<Eigen::Index>(k)) > a);
  }
  PrunedCandidates empty;
  MentionScores s = scores_from(Vector::Zero(1));
  CHECK_THROWS_AS(high_precision_prune(empty, s, -0.1), ConfigError);
  CHECK_THROWS_AS(high_precision_prune(empty, s, 1.5), ConfigError);
}

TEST_CASE("the q filter is strict") {
  CandidateSet c = enumerate_candidates(2, 1);
  MentionScores s = scores_from(Vector::Zero(2));  // probability exactly 0.5
  PrunedCandidates all = c2f_prune(c, s, 1.0, 2);
  CHECK(high_precision_prune(all, s, 0.5).kept.empty());
  CHECK(high_precision_prune(all, s, 0.4999).kept.size() == 2);
}

TEST_CASE("mention loss is summed binary cross-entropy") {
  CandidateSet c = enumerate_candidates(3, 2);  // [0,0] [0,1] [1,1] [1,2] [2,2]
  Vector logits(5);
  logits << 2.0, -1.0, 0.5, 0.0, -3.0;
  MentionScores s = scores_from(logits);
  MentionAnnotation gold{"d", {{0, 1}, {2, 2}, {0, 2}}};
  MentionLoss loss = md_loss(c, s, gold);
  const double g[5] = {0, 1, 0, 0, 1};
  double expected = 0;
  for (int i = 0; i < 5; ++i) {
    const double p = sigmoid(logits(i));
    expected -= g[i] * std::log(p) + (1 - g[i]) * std::log(1 - p);
    CHECK(loss.d_logit(i) == doctest::Approx(p - g[i]));
  }
  CHECK(loss.loss == doctest::Approx(expected));
  CHECK(loss.skipped_gold == 1);  // [0,2] is wider than max_width
}

TEST_CASE("mention scorer rejects a mismatched width") {
  std::mt19937_64 rng(1);
  MentionScorerWeights w = MentionScorerWeights::random(6, 4, rng);
  CHECK_THROWS_AS(mention_scores(Matrix::Zero(3, 5), w), ValidationError);
  MentionScores s = mention_scores(Matrix::Zero(3, 6), w);
  CHECK(s.logit.size() == 3);
}
