#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coref/corpus.hpp"
#include "coref/run_config.hpp"

namespace coref {

struct ExperimentData {
  Corpus source_train;
  Corpus target_train;  // the annotation pool; gold is revealed per budget
  std::optional<Corpus> target_dev;
  Corpus target_test;
};

// Loads every corpus the configuration names. Throws ConfigError on a missing
// one, before anything is trained.
ExperimentData load_experiment_data(const RunConfig& config);

// Target training corpus for one grid entry: the pool in `order` with gold
// coreference and mention annotation revealed as the entry's budget allows.
Corpus annotated_subset(const Corpus& pool, const std::vector<std::size_t>& order,
                        const GridEntry& entry, const TimingTable& timing);

// Per-seed shuffle of the annotation pool.
std::vector<std::size_t> pool_order(std::size_t pool_size, std::uint64_t seed);

struct SchemeSummary {
  std::map<std::string, double> mean;    // F1 by metric name plus "avg"
  std::map<std::string, double> stddev;  // sample standard deviation over seeds
  std::optional<double> p_value;         // avg F1 against the baseline
  bool significant = false;
};

struct ExperimentRow {
  std::string name;
  double coref_docs = 0.0;    // mean over seeds
  double mention_docs = 0.0;  // includes the coreference documents
  std::vector<std::uint64_t> seeds;
  std::map<Scheme, SchemeSummary> schemes;
  std::map<Scheme, std::vector<double>> avg_per_seed;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::string baseline;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> metric_names;
};

// Trains one source model per seed, adapts it under every grid entry and
// evaluates on target_test in both singleton schemes. Seeds run on up to
// `jobs` threads; the result does not depend on `jobs`.
ExperimentResult run_experiment(const RunConfig& config, const ExperimentData& data,
                                int jobs, std::uint64_t base_seed);

// One JSON object per (configuration, scheme).
std::vector<nlohmann::json> result_lines(const ExperimentResult& result);
// Aligned table: mean F1 per metric and scheme, `*` marks significance.
std::string format_table(const ExperimentResult& result);

}  // namespace coref
