#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "coref/antecedent_linker.hpp"
#include "coref/errors.hpp"
#include "coref/metrics.hpp"

using namespace coref;

namespace {

// Hand-built scores: anaphor i gets antecedents 0..i-1 with the given values
// after the dummy.
AntecedentScores manual(const std::vector<std::vector<double>>& values) {
  AntecedentScores s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::vector<std::size_t> cands(i);
    for (std::size_t j = 0; j < i; ++j) cands[j] = j;
    s.candidates.push_back(cands);
    Vector v(static_cast<Eigen::Index>(i + 1));
    v(0) = 0.0;
    for (std::size_t j = 0; j < i; ++j) v(static_cast<Eigen::Index>(j + 1)) = values[i][j];
    s.scores.push_back(v);
  }
  return s;
}

std::vector<Span> spans(int n) {
  std::vector<Span> out;
  for (int i = 0; i < n; ++i) out.push_back({2 * i, 2 * i});
  return out;
}

}  // namespace

TEST_CASE("distance buckets") {
  const int expected[] = {0, 0, 1, 2, 3, 3, 3, 3, 4};  // offsets 0..8
  for (int d = 1; d <= 8; ++d) CHECK(distance_bucket(d) == expected[d]);
  CHECK(distance_bucket(15) == 4);
  CHECK(distance_bucket(16) == 5);
  CHECK(distance_bucket(31) == 5);
  CHECK(distance_bucket(32) == 6);
  CHECK(distance_bucket(63) == 6);
  CHECK(distance_bucket(64) == 7);
  CHECK(distance_bucket(100000) == 7);
}

TEST_CASE("top antecedents match a sort oracle") {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> size(1, 25);
  std::uniform_int_distribution<int> k_dist(1, 8);
  std::uniform_int_distribution<int> value(-2, 2);  // frequent ties
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = size(rng);
    const int k = k_dist(rng);
    Matrix coarse(n, n);
    Vector logits(n);
    for (int i = 0; i < n; ++i) {
      logits(i) = value(rng);
      for (int j = 0; j < n; ++j) coarse(i, j) = value(rng);
    }
    auto got = top_antecedents(coarse, logits, k);
    REQUIRE(got.size() == static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      // Rank by (score desc, distance asc).
      std::vector<std::tuple<double, int, std::size_t>> keyed;
      for (int j = 0; j < i; ++j) {
        keyed.push_back({-(logits(i) + logits(j) + coarse(i, j)), i - j,
                         static_cast<std::size_t>(j)});
      }
      std::sort(keyed.begin(), keyed.end());
      std::vector<std::size_t> want;
      for (std::size_t t = 0; t < keyed.size() && t < static_cast<std::size_t>(k); ++t) {
        want.push_back(std::get<2>(keyed[t]));
      }
      std::sort(want.begin(), want.end());
      CHECK(got[i] == want);
    }
  }
  CHECK_THROWS_AS(top_antecedents(Matrix::Zero(1, 1), Vector::Zero(1), 0), ConfigError);
}

TEST_CASE("pairwise score decomposes into mention and antecedent terms") {
  std::mt19937_64 rng(3);
  const int d = 4;
  LinkerWeights w = LinkerWeights::random(d, 2, 5, rng);
  CHECK(w.coarse.isZero());
  Matrix reps = Matrix::Random(3, d);
  Vector logits(3);
  logits << 0.3, -1.2, 2.0;
  std::vector<std::vector<std::size_t>> cands = {{}, {0}, {0, 1}};
  AntecedentScores with = antecedent_scores(reps, logits, cands, w);
  AntecedentScores without = antecedent_scores(reps, Vector::Zero(3), cands, w);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(with.scores[i](0) == 0.0);
    for (std::size_t c = 0; c < cands[i].size(); ++c) {
      const auto e = static_cast<Eigen::Index>(c + 1);
      CHECK(with.scores[i](e) ==
            doctest::Approx(without.scores[i](e) + logits(i) + logits(cands[i][c])));
    }
  }
  auto dist = antecedent_distributions(with);
  for (const auto& p : dist) CHECK(p.sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(antecedent_scores(Matrix::Zero(3, d + 1), logits, cands, w), ValidationError);
}

TEST_CASE("coreference loss with one correct antecedent at equal scores") {
  AntecedentScores s = manual({{}, {0.0}});
  ClusterSet gold("d", {{{0, 0}, {2, 2}}});
  CorefLoss loss = coref_loss(spans(2), s, gold);
  // The first span has only the dummy: zero loss. The second splits mass
  // evenly between the dummy and its correct antecedent.
  CHECK(loss.loss == doctest::Approx(std::log(2.0)));
  CHECK(loss.d_scores[1](0) == doctest::Approx(0.5));
  CHECK(loss.d_scores[1](1) == doctest::Approx(-0.5));
}

TEST_CASE("coreference loss targets the dummy without a gold antecedent") {
  AntecedentScores s = manual({{}, {1.0}, {0.5, -0.5}});
  ClusterSet gold("d", {{{0, 0}, {4, 4}}});  // span 1 is outside every cluster
  CorefLoss loss = coref_loss(spans(3), s, gold);
  const double lse1 = std::log(1.0 + std::exp(1.0));
  const double lse2 = std::log(1.0 + std::exp(0.5) + std::exp(-0.5));
  CHECK(loss.loss == doctest::Approx(lse1 + (lse2 - 0.5)));
  // Marginalizes over every correct antecedent.
  AntecedentScores t = manual({{}, {0.0}, {0.3, 0.7}});
  ClusterSet all("d", {{{0, 0}, {2, 2}, {4, 4}}});
  CorefLoss l2 = coref_loss(spans(3), t, all);
  const double lse = std::log(1.0 + std::exp(0.3) + std::exp(0.7));
  const double good = std::log(std::exp(0.3) + std::exp(0.7));
  CHECK(l2.loss == doctest::Approx(std::log(2.0) + lse - good));
}

TEST_CASE("decoding links chains and breaks ties toward the dummy") {
  // 1 -> 0, 2 -> 1, 3 ties with dummy.
  AntecedentScores s = manual({{}, {2.0}, {-1.0, 3.0}, {0.0, 0.0, -1.0}});
  ClusterSet out = decode("d", spans(4), s, false);
  CHECK(out.clusters() == Clusters{{{0, 0}, {2, 2}, {4, 4}}});
  ClusterSet with = decode("d", spans(4), s, true);
  CHECK(with.clusters() == Clusters{{{0, 0}, {2, 2}, {4, 4}}, {{6, 6}}});
}

TEST_CASE("decoding breaks antecedent ties toward the nearer span") {
  AntecedentScores s = manual({{}, {-5.0}, {1.0, 1.0}});
  ClusterSet out = decode("d", spans(3), s, true);
  CHECK(out.clusters() == Clusters{{{0, 0}}, {{2, 2}, {4, 4}}});
}
