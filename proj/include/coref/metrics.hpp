#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "coref/corpus.hpp"

namespace coref {

enum class Scheme { kWithSingletons, kWithoutSingletons };
enum class Metric { kMuc, kBCubed, kCeafPhi4, kLea };
// kConll is the three-metric set without LEA.
enum class MetricSet { kAll, kConll };

std::string to_string(Scheme scheme);
std::string to_string(Metric metric);
std::string to_string(MetricSet set);
Scheme parse_scheme(const std::string& name);
MetricSet parse_metric_set(const std::string& name);
std::vector<Metric> metrics_in(MetricSet set);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// 2PR/(P+R) with 0/0 := 0.
double f1_score(double precision, double recall);

// Numerators and denominators of one metric; pooled across documents by
// summation before division.
struct MetricCounts {
  double precision_num = 0.0;
  double precision_den = 0.0;
  double recall_num = 0.0;
  double recall_den = 0.0;

  MetricCounts& operator+=(const MetricCounts& other);
  Prf prf() const;
};

using Clusters = std::vector<std::vector<Span>>;

// Drops size-1 clusters from both sides under kWithoutSingletons.
std::pair<ClusterSet, ClusterSet> apply_scheme(const ClusterSet& gold,
                                               const ClusterSet& sys,
                                               Scheme scheme);

MetricCounts muc_counts(const Clusters& gold, const Clusters& sys);
MetricCounts b_cubed_counts(const Clusters& gold, const Clusters& sys);
MetricCounts ceaf_phi4_counts(const Clusters& gold, const Clusters& sys);
MetricCounts lea_counts(const Clusters& gold, const Clusters& sys);
MetricCounts metric_counts(Metric metric, const Clusters& gold,
                           const Clusters& sys);

Prf muc(const ClusterSet& gold, const ClusterSet& sys);
Prf b_cubed(const ClusterSet& gold, const ClusterSet& sys);
Prf ceaf_phi4(const ClusterSet& gold, const ClusterSet& sys);
Prf lea(const ClusterSet& gold, const ClusterSet& sys);

// phi4(K, S) = 2|K n S| / (|K| + |S|).
double phi4(const std::vector<Span>& key, const std::vector<Span>& response);

struct MetricReport {
  std::map<Metric, Prf> scores;
  double avg_f1 = 0.0;
  Scheme scheme = Scheme::kWithSingletons;
  MetricSet metric_set = MetricSet::kAll;
};

// Scores every document of `gold` that carries a ClusterSet. Throws
// ValidationError listing doc_ids missing from `sys`.
MetricReport report(const Corpus& gold,
                    const std::map<std::string, ClusterSet>& sys, Scheme scheme,
                    MetricSet metric_set);

// Per-document counts for every metric, in gold document order.
using DocumentCounts = std::array<MetricCounts, 4>;
std::vector<DocumentCounts> document_counts(
    const Corpus& gold, const std::map<std::string, ClusterSet>& sys,
    Scheme scheme);
MetricReport report_from_counts(const std::vector<DocumentCounts>& counts,
                                Scheme scheme, MetricSet metric_set);

// Two-sided paired bootstrap over documents. For each metric (keyed by its
// name, plus "avg"), the p-value is the fraction of resamples in which the
// sign of F1(A) - F1(B) differs from the full-sample sign; identical
// full-sample scores give p = 1.
std::map<std::string, double> paired_bootstrap(
    const std::vector<DocumentCounts>& system_a,
    const std::vector<DocumentCounts>& system_b, MetricSet metric_set,
    int iterations, std::uint64_t seed);

// Same test from raw system outputs. Throws ValidationError on fewer than two
// scored documents.
std::map<std::string, double> paired_bootstrap(
    const Corpus& gold, const std::map<std::string, ClusterSet>& system_a,
    const std::map<std::string, ClusterSet>& system_b, Scheme scheme,
    MetricSet metric_set, int iterations = 10000, std::uint64_t seed = 0);

}  // namespace coref
