#include "coref/metrics.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "coref/assignment.hpp"
#include "coref/errors.hpp"

namespace coref {

std::string to_string(Scheme scheme) {
  return scheme == Scheme::kWithSingletons ? "with_singletons"
                                           : "without_singletons";
}

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::kMuc: return "MUC";
    case Metric::kBCubed: return "B3";
    case Metric::kCeafPhi4: return "CEAF_phi4";
    case Metric::kLea: return "LEA";
  }
  return "?";
}

std::string to_string(MetricSet set) {
  return set == MetricSet::kAll ? "all" : "conll";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "with" || name == "with_singletons") return Scheme::kWithSingletons;
  if (name == "without" || name == "without_singletons") {
    return Scheme::kWithoutSingletons;
  }
  throw ConfigError("unknown singleton scheme '" + name + "'");
}

MetricSet parse_metric_set(const std::string& name) {
  if (name == "all") return MetricSet::kAll;
  if (name == "conll") return MetricSet::kConll;
  throw ConfigError("unknown metric set '" + name + "'");
}

std::vector<Metric> metrics_in(MetricSet set) {
  if (set == MetricSet::kConll) {
    return {Metric::kMuc, Metric::kBCubed, Metric::kCeafPhi4};
  }
  return {Metric::kLea, Metric::kMuc, Metric::kBCubed, Metric::kCeafPhi4};
}

double f1_score(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

MetricCounts& MetricCounts::operator+=(const MetricCounts& other) {
  precision_num += other.precision_num;
  precision_den += other.precision_den;
  recall_num += other.recall_num;
  recall_den += other.recall_den;
  return *this;
}

Prf MetricCounts::prf() const {
  Prf out;
  out.precision = precision_den > 0.0 ? precision_num / precision_den : 0.0;
  out.recall = recall_den > 0.0 ? recall_num / recall_den : 0.0;
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

std::pair<ClusterSet, ClusterSet> apply_scheme(const ClusterSet& gold,
                                               const ClusterSet& sys,
                                               Scheme scheme) {
  if (scheme == Scheme::kWithSingletons) return {gold, sys};
  auto drop = [](const ClusterSet& set) {
    std::vector<std::vector<Span>> kept;
    for (const auto& cluster : set.clusters()) {
      if (cluster.size() > 1) kept.push_back(cluster);
    }
    return ClusterSet(set.doc_id(), std::move(kept));
  };
  return {drop(gold), drop(sys)};
}

namespace {

using MentionIndex = std::map<Span, std::size_t>;

MentionIndex index_mentions(const Clusters& clusters) {
  MentionIndex index;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (const auto& span : clusters[c]) index[span] = c;
  }
  return index;
}

std::size_t overlap(const std::vector<Span>& a, const std::vector<Span>& b) {
  std::size_t n = 0;
  for (const auto& span : a) {
    if (std::find(b.begin(), b.end(), span) != b.end()) ++n;
  }
  return n;
}

// Sum over keys of (|K| - |partition of K by response|) and of (|K| - 1).
std::pair<double, double> muc_side(const Clusters& keys,
                                   const Clusters& responses) {
  const MentionIndex response_of = index_mentions(responses);
  double num = 0.0;
  double den = 0.0;
  for (const auto& key : keys) {
    std::set<std::size_t> parts;
    std::size_t unmatched = 0;
    for (const auto& span : key) {
      auto it = response_of.find(span);
      if (it == response_of.end()) {
        ++unmatched;
      } else {
        parts.insert(it->second);
      }
    }
    const double partition = static_cast<double>(parts.size() + unmatched);
    num += static_cast<double>(key.size()) - partition;
    den += static_cast<double>(key.size()) - 1.0;
  }
  return {num, den};
}

std::pair<double, double> b_cubed_side(const Clusters& keys,
                                       const Clusters& responses) {
  const MentionIndex response_of = index_mentions(responses);
  double num = 0.0;
  double den = 0.0;
  for (const auto& key : keys) {
    for (const auto& span : key) {
      den += 1.0;
      auto it = response_of.find(span);
      if (it == response_of.end()) continue;
      num += static_cast<double>(overlap(key, responses[it->second])) /
             static_cast<double>(key.size());
    }
  }
  return {num, den};
}

double link_count(std::size_t size) {
  return static_cast<double>(size) * static_cast<double>(size - 1) / 2.0;
}

// LEA with self-links for singleton entities only.
std::pair<double, double> lea_side(const Clusters& keys,
                                   const Clusters& responses) {
  const MentionIndex response_of = index_mentions(responses);
  double num = 0.0;
  double den = 0.0;
  for (const auto& key : keys) {
    const double importance = static_cast<double>(key.size());
    den += importance;
    std::map<std::size_t, std::size_t> shared;
    for (const auto& span : key) {
      auto it = response_of.find(span);
      if (it != response_of.end()) ++shared[it->second];
    }
    double resolved = 0.0;
    if (key.size() == 1) {
      resolved = shared.empty() ? 0.0 : 1.0;
    } else {
      for (const auto& [response, n] : shared) {
        if (n >= 2) resolved += link_count(n);
      }
      resolved /= link_count(key.size());
    }
    num += importance * resolved;
  }
  return {num, den};
}

}  // namespace

double phi4(const std::vector<Span>& key, const std::vector<Span>& response) {
  const double total = static_cast<double>(key.size() + response.size());
  if (total == 0.0) return 0.0;
  return 2.0 * static_cast<double>(overlap(key, response)) / total;
}

MetricCounts muc_counts(const Clusters& gold, const Clusters& sys) {
  MetricCounts out;
  std::tie(out.recall_num, out.recall_den) = muc_side(gold, sys);
  std::tie(out.precision_num, out.precision_den) = muc_side(sys, gold);
  return out;
}

MetricCounts b_cubed_counts(const Clusters& gold, const Clusters& sys) {
  MetricCounts out;
  std::tie(out.recall_num, out.recall_den) = b_cubed_side(gold, sys);
  std::tie(out.precision_num, out.precision_den) = b_cubed_side(sys, gold);
  return out;
}

MetricCounts ceaf_phi4_counts(const Clusters& gold, const Clusters& sys) {
  std::vector<std::vector<double>> similarity(
      gold.size(), std::vector<double>(sys.size(), 0.0));
  for (std::size_t g = 0; g < gold.size(); ++g) {
    for (std::size_t s = 0; s < sys.size(); ++s) {
      similarity[g][s] = phi4(gold[g], sys[s]);
    }
  }
  const double total = max_weight_assignment(similarity).total;
  MetricCounts out;
  out.recall_num = total;
  out.recall_den = static_cast<double>(gold.size());
  out.precision_num = total;
  out.precision_den = static_cast<double>(sys.size());
  return out;
}

MetricCounts lea_counts(const Clusters& gold, const Clusters& sys) {
  MetricCounts out;
  std::tie(out.recall_num, out.recall_den) = lea_side(gold, sys);
  std::tie(out.precision_num, out.precision_den) = lea_side(sys, gold);
  return out;
}

MetricCounts metric_counts(Metric metric, const Clusters& gold,
                           const Clusters& sys) {
  switch (metric) {
    case Metric::kMuc: return muc_counts(gold, sys);
    case Metric::kBCubed: return b_cubed_counts(gold, sys);
    case Metric::kCeafPhi4: return ceaf_phi4_counts(gold, sys);
    case Metric::kLea: return lea_counts(gold, sys);
  }
  return {};
}

Prf muc(const ClusterSet& gold, const ClusterSet& sys) {
  return muc_counts(gold.clusters(), sys.clusters()).prf();
}

Prf b_cubed(const ClusterSet& gold, const ClusterSet& sys) {
  return b_cubed_counts(gold.clusters(), sys.clusters()).prf();
}

Prf ceaf_phi4(const ClusterSet& gold, const ClusterSet& sys) {
  return ceaf_phi4_counts(gold.clusters(), sys.clusters()).prf();
}

Prf lea(const ClusterSet& gold, const ClusterSet& sys) {
  return lea_counts(gold.clusters(), sys.clusters()).prf();
}

namespace {

constexpr std::array<Metric, 4> kAllMetrics = {
    Metric::kMuc, Metric::kBCubed, Metric::kCeafPhi4, Metric::kLea};

std::size_t slot(Metric metric) { return static_cast<std::size_t>(metric); }

}  // namespace

std::vector<DocumentCounts> document_counts(
    const Corpus& gold, const std::map<std::string, ClusterSet>& sys,
    Scheme scheme) {
  std::vector<std::string> missing;
  for (const auto& doc : gold.documents) {
    if (gold.coref_annotations.count(doc.doc_id) != 0 &&
        sys.count(doc.doc_id) == 0) {
      missing.push_back(doc.doc_id);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw ValidationError("system output missing documents: " + list);
  }
  std::vector<DocumentCounts> out;
  for (const auto& doc : gold.documents) {
    auto gold_it = gold.coref_annotations.find(doc.doc_id);
    if (gold_it == gold.coref_annotations.end()) continue;
    auto [g, s] = apply_scheme(gold_it->second, sys.at(doc.doc_id), scheme);
    DocumentCounts counts;
    for (Metric metric : kAllMetrics) {
      counts[slot(metric)] = metric_counts(metric, g.clusters(), s.clusters());
    }
    out.push_back(counts);
  }
  return out;
}

MetricReport report_from_counts(const std::vector<DocumentCounts>& counts,
                                Scheme scheme, MetricSet metric_set) {
  MetricReport out;
  out.scheme = scheme;
  out.metric_set = metric_set;
  const auto included = metrics_in(metric_set);
  for (Metric metric : included) {
    MetricCounts pooled;
    for (const auto& doc : counts) pooled += doc[slot(metric)];
    out.scores[metric] = pooled.prf();
    out.avg_f1 += out.scores[metric].f1;
  }
  out.avg_f1 /= static_cast<double>(included.size());
  return out;
}

MetricReport report(const Corpus& gold,
                    const std::map<std::string, ClusterSet>& sys, Scheme scheme,
                    MetricSet metric_set) {
  return report_from_counts(document_counts(gold, sys, scheme), scheme,
                            metric_set);
}

namespace {

std::map<std::string, double> scores_of(const std::vector<DocumentCounts>& counts,
                                        const std::vector<std::size_t>& sample,
                                        MetricSet metric_set) {
  std::map<std::string, double> out;
  double avg = 0.0;
  const auto included = metrics_in(metric_set);
  for (Metric metric : included) {
    MetricCounts pooled;
    for (std::size_t d : sample) pooled += counts[d][slot(metric)];
    const double f1 = pooled.prf().f1;
    out[to_string(metric)] = f1;
    avg += f1;
  }
  out["avg"] = avg / static_cast<double>(included.size());
  return out;
}

}  // namespace

std::map<std::string, double> paired_bootstrap(
    const std::vector<DocumentCounts>& system_a,
    const std::vector<DocumentCounts>& system_b, MetricSet metric_set,
    int iterations, std::uint64_t seed) {
  if (system_a.size() != system_b.size()) {
    throw ValidationError("paired bootstrap needs the same documents for both systems");
  }
  if (system_a.size() < 2) {
    throw ValidationError("paired bootstrap needs at least 2 documents");
  }
  if (iterations < 1) throw ConfigError("bootstrap iterations must be positive");
  const std::size_t n = system_a.size();
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const auto full_a = scores_of(system_a, all, metric_set);
  const auto full_b = scores_of(system_b, all, metric_set);

  std::map<std::string, int> flips;
  for (const auto& [name, value] : full_a) flips[name] = 0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> sample(n);
  for (int it = 0; it < iterations; ++it) {
    for (auto& d : sample) d = pick(rng);
    const auto a = scores_of(system_a, sample, metric_set);
    const auto b = scores_of(system_b, sample, metric_set);
    for (const auto& [name, value] : full_a) {
      const double full_diff = value - full_b.at(name);
      if (full_diff == 0.0) continue;
      const double diff = a.at(name) - b.at(name);
      if ((full_diff > 0.0 && diff <= 0.0) || (full_diff < 0.0 && diff >= 0.0)) {
        ++flips[name];
      }
    }
  }
  std::map<std::string, double> p_values;
  for (const auto& [name, value] : full_a) {
    if (value == full_b.at(name)) {
      p_values[name] = 1.0;
    } else {
      p_values[name] = static_cast<double>(flips[name]) / iterations;
    }
  }
  return p_values;
}

std::map<std::string, double> paired_bootstrap(
    const Corpus& gold, const std::map<std::string, ClusterSet>& system_a,
    const std::map<std::string, ClusterSet>& system_b, Scheme scheme,
    MetricSet metric_set, int iterations, std::uint64_t seed) {
  return paired_bootstrap(document_counts(gold, system_a, scheme),
                          document_counts(gold, system_b, scheme), metric_set,
                          iterations, seed);
}

}  // namespace coref
