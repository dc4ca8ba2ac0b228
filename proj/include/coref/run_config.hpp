#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coref/budget.hpp"
#include "coref/metrics.hpp"
#include "coref/model.hpp"
#include "coref/training.hpp"

namespace coref {

enum class BudgetMode { kCount, kTime };

std::string to_string(BudgetMode mode);
BudgetMode parse_budget_mode(const std::string& name);

// One row of an experiment grid.
struct GridEntry {
  std::string name;
  // No objectives means the source model is evaluated as is.
  std::optional<ObjectiveConfig> objectives;
  FreezeConfig freeze;
  double q = 0.0;
  SingletonMode emit_singletons = SingletonMode::kAuto;
  BudgetMode budget_mode = BudgetMode::kCount;
  // Count mode: fractions of the target training pool given coreference and
  // mention annotation (coreference documents also count as mention data).
  double coref_fraction = 1.0;
  double mention_fraction = 0.0;
  // Time mode: the budget is budget_fraction of the time to annotate the whole
  // pool with coreference; coref_share of it goes to coreference annotation
  // and the rest to mention annotation of further documents.
  double budget_fraction = 1.0;
  double coref_share = 1.0;
  // When positive, the remaining unannotated pool is tagged with silver
  // mentions at this threshold by a detector adapted on the gold subset.
  double silver_q = 0.0;
};

struct CorpusPaths {
  std::string source_train;
  std::string source_dev;
  std::string target_train;
  std::string target_dev;
  std::string target_test;
};

struct MetricsConfig {
  std::optional<Scheme> scheme;  // unset: match the target annotation style
  MetricSet metric_set = MetricSet::kAll;
  int bootstrap_iterations = 10000;
  double significance = 0.05;
};

struct ExperimentConfig {
  std::optional<int> num_seeds;  // unset: the seed rule on target mentions
  std::string baseline;
  std::vector<GridEntry> grid;
};

struct RunConfig {
  CorpusPaths corpus;
  ModelConfig model;
  std::size_t max_vocab = 20000;
  TrainSchedule schedule;
  MetricsConfig metrics;
  TimingTable timing = default_timing();
  ExperimentConfig experiment;
  // Directory that relative corpus paths resolve against.
  std::filesystem::path base_dir;

  void validate() const;
};

// Every key is optional; unknown keys and out-of-range values raise
// ConfigError.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical JSON form with all defaults filled in.
nlohmann::json to_json(const RunConfig& config);
std::string run_config_hash(const RunConfig& config);

// A corpus path ending in .cfg names a synthetic spec, generated with the
// spec's own seed; anything else is loaded from disk.
Corpus load_corpus_ref(const RunConfig& config, const std::string& ref);
std::filesystem::path resolve(const RunConfig& config, const std::string& ref);

}  // namespace coref
