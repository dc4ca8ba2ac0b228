#pragma once

// Helpers shared by the unit tests and the acceptance binary. Everything here
// is written independently of the library internals it is used to check.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "coref/corpus.hpp"
#include "coref/encoder.hpp"
#include "coref/metrics.hpp"
#include "coref/model.hpp"
#include "coref/synthetic.hpp"
#include "coref/vocabulary.hpp"

namespace coref::testing {

// Random clustering of distinct one-token spans drawn from [0, 4 * max_clusters).
inline Clusters random_clusters(std::mt19937_64& rng, int max_clusters,
                                int max_size) {
  std::uniform_int_distribution<int> n_clusters(0, max_clusters);
  std::uniform_int_distribution<int> size(1, max_size);
  std::vector<int> tokens(static_cast<std::size_t>(4 * std::max(1, max_clusters) *
                                                   max_size));
  std::iota(tokens.begin(), tokens.end(), 0);
  std::shuffle(tokens.begin(), tokens.end(), rng);
  Clusters out;
  std::size_t next = 0;
  const int k = n_clusters(rng);
  for (int c = 0; c < k; ++c) {
    std::vector<Span> cluster;
    const int s = size(rng);
    for (int i = 0; i < s && next < tokens.size(); ++i, ++next) {
      cluster.push_back({tokens[next], tokens[next]});
    }
    out.push_back(cluster);
  }
  return out;
}

// Random system output over the gold spans plus a few spurious ones, so the
// two sides overlap but differ.
inline Clusters perturb(std::mt19937_64& rng, const Clusters& gold,
                        int max_clusters) {
  std::vector<Span> spans;
  for (const auto& c : gold) spans.insert(spans.end(), c.begin(), c.end());
  std::bernoulli_distribution keep(0.8);
  std::vector<Span> kept;
  for (const auto& s : spans) {
    if (keep(rng)) kept.push_back(s);
  }
  std::uniform_int_distribution<int> extra(0, 3);
  const int n_extra = extra(rng);
  for (int i = 0; i < n_extra; ++i) kept.push_back({1000 + i, 1000 + i});
  std::shuffle(kept.begin(), kept.end(), rng);
  std::uniform_int_distribution<int> bucket(0, std::max(0, max_clusters - 1));
  std::vector<std::vector<Span>> groups(static_cast<std::size_t>(std::max(1, max_clusters)));
  for (const auto& s : kept) groups[static_cast<std::size_t>(bucket(rng))].push_back(s);
  Clusters out;
  for (auto& g : groups) {
    if (!g.empty()) out.push_back(std::move(g));
  }
  return out;
}

inline double phi4_oracle(const std::vector<Span>& a, const std::vector<Span>& b) {
  std::size_t common = 0;
  for (const auto& x : a) common += static_cast<std::size_t>(std::count(b.begin(), b.end(), x));
  return 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
}

// Best total phi4 similarity over all one-to-one alignments, by enumerating
// every permutation of the larger side.
inline double brute_force_ceaf_similarity(const Clusters& gold, const Clusters& sys) {
  const bool gold_small = gold.size() <= sys.size();
  const Clusters& small = gold_small ? gold : sys;
  const Clusters& large = gold_small ? sys : gold;
  std::vector<std::size_t> perm(large.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < small.size(); ++i) total += phi4_oracle(small[i], large[perm[i]]);
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// A one-document corpus and a tiny model over it, small enough for
// finite-difference checks.
struct TinyProblem {
  Corpus corpus;
  CorefModel model;
  const Document& doc() const { return corpus.documents.front(); }
  const ClusterSet& gold() const { return corpus.coref_annotations.at(doc().doc_id); }
};

inline TinyProblem tiny_problem(std::uint64_t seed = 5) {
  SyntheticSpec spec;
  spec.num_docs = 1;
  spec.min_tokens = 12;
  spec.max_tokens = 14;
  spec.min_entities = 2;
  spec.max_entities = 2;
  spec.min_mentions = 2;
  spec.max_mentions = 3;
  spec.singleton_rate = 0.5;
  TinyProblem p;
  p.corpus = generate_synthetic_corpus(spec, seed);
  Vocabulary vocab = Vocabulary::build({&p.corpus}, 1000);
  ModelConfig config;
  config.encoder.embedding_dim = 4;
  config.encoder.hidden_dim = 3;
  config.encoder.width_dim = 2;
  config.encoder.width_buckets = 3;
  config.encoder.max_segment_length = 7;  // two segments
  config.detector.max_width = 3;
  config.detector.hidden_dim = 5;
  config.detector.lambda_keep = 0.5;
  config.linker.hidden_dim = 4;
  config.linker.distance_dim = 2;
  config.linker.top_k = 3;
  p.model = CorefModel::initialize(config, vocab, seed + 6);
  return p;
}

struct GradientCheck {
  double worst_relative_error = 0.0;
  std::string worst_entry;
  double analytic_norm = 0.0;
  std::size_t checked = 0;  // entries compared
};

// Central differences with step h on every parameter. Relative error is taken
// against the larger of the two magnitudes; entries where both derivatives are
// below `zero_floor` (structurally zero, e.g. unused vocabulary rows) are
// skipped.
inline GradientCheck check_gradients(CorefModel model, const Document& doc,
                                     const LossTargets& targets, double h = 1e-5,
                                     double zero_floor = 1e-8) {
  ModelWeights grads = ModelWeights::zeros(model.config());
  model.loss(doc, targets, &grads);
  std::vector<const Matrix*> analytic;
  ModelWeights::visit(grads, [&](const std::string&, const Matrix& m) { analytic.push_back(&m); });
  GradientCheck out;
  for (const Matrix* m : analytic) out.analytic_norm += m->squaredNorm();
  out.analytic_norm = std::sqrt(out.analytic_norm);
  std::size_t k = 0;
  ModelWeights::visit(model.mutable_weights(), [&](const std::string& name, Matrix& w) {
    const Matrix& g = *analytic[k++];
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double original = w.data()[i];
      w.data()[i] = original + h;
      const double plus = model.loss(doc, targets, nullptr).total();
      w.data()[i] = original - h;
      const double minus = model.loss(doc, targets, nullptr).total();
      w.data()[i] = original;
      const double numeric = (plus - minus) / (2.0 * h);
      const double exact = g.data()[i];
      const double scale = std::max(std::abs(numeric), std::abs(exact));
      if (scale < zero_floor) continue;
      ++out.checked;
      const double rel = std::abs(numeric - exact) / scale;
      if (rel > out.worst_relative_error) {
        out.worst_relative_error = rel;
        out.worst_entry = name + "[" + std::to_string(i) + "]";
      }
    }
  });
  return out;
}

}  // namespace coref::testing
