#include "coref/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "coref/errors.hpp"
#include "coref/training.hpp"

namespace coref {

ExperimentData load_experiment_data(const RunConfig& config) {
  ExperimentData data;
  data.source_train = load_corpus_ref(config, config.corpus.source_train);
  data.target_train = load_corpus_ref(config, config.corpus.target_train);
  if (!config.corpus.target_dev.empty()) {
    data.target_dev = load_corpus_ref(config, config.corpus.target_dev);
  }
  data.target_test = load_corpus_ref(config, config.corpus.target_test);
  return data;
}

std::vector<std::size_t> pool_order(std::size_t pool_size, std::uint64_t seed) {
  std::vector<std::size_t> order(pool_size);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ 0x5deece66dULL);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

namespace {

std::size_t count_of(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

MentionAnnotation gold_mentions(const Corpus& pool, const std::string& doc_id) {
  auto it = pool.mention_annotations.find(doc_id);
  if (it != pool.mention_annotations.end()) return it->second;
  auto c = pool.coref_annotations.find(doc_id);
  if (c != pool.coref_annotations.end()) return derive_mentions(c->second);
  return {doc_id, {}};
}

}  // namespace

Corpus annotated_subset(const Corpus& pool, const std::vector<std::size_t>& order,
                        const GridEntry& entry, const TimingTable& timing) {
  std::vector<Document> ordered;
  for (std::size_t i : order) ordered.push_back(pool.documents.at(i));

  std::size_t n_coref = 0;
  std::size_t n_mention = 0;  // documents after the coreference prefix
  if (entry.budget_mode == BudgetMode::kCount) {
    n_coref = count_of(entry.coref_fraction, ordered.size());
    const std::size_t wanted = count_of(entry.mention_fraction, ordered.size());
    n_mention = wanted > n_coref ? wanted - n_coref : 0;
  } else {
    double total = 0.0;
    for (const auto& doc : ordered) total += estimate(doc, AnnotationTask::kCoreference, timing);
    const double budget = entry.budget_fraction * total;
    const BudgetPlan coref = plan(ordered, AnnotationTask::kCoreference,
                                  budget * entry.coref_share, timing);
    n_coref = coref.allocation.size();
    const std::vector<Document> rest(ordered.begin() + static_cast<std::ptrdiff_t>(n_coref),
                                     ordered.end());
    // Unspent coreference time carries over to mention annotation.
    const BudgetPlan mention = plan(rest, AnnotationTask::kMention,
                                    budget * (1.0 - entry.coref_share) + coref.residual_seconds,
                                    timing);
    n_mention = mention.allocation.size();
  }

  Corpus out;
  out.documents = ordered;
  out.style = pool.style;
  out.split = pool.split;
  for (std::size_t k = 0; k < ordered.size(); ++k) {
    const std::string& id = ordered[k].doc_id;
    if (k < n_coref) {
      auto it = pool.coref_annotations.find(id);
      if (it != pool.coref_annotations.end()) out.coref_annotations.emplace(id, it->second);
    }
    if (k < n_coref + n_mention) out.mention_annotations.emplace(id, gold_mentions(pool, id));
  }
  return out;
}

namespace {

struct SeedOutcome {
  std::size_t coref_docs = 0;
  std::size_t mention_docs = 0;
  std::map<Scheme, std::vector<DocumentCounts>> counts;
  std::map<Scheme, MetricReport> reports;
};

CorefModel configured(const CorefModel& model, const GridEntry& entry) {
  CorefModel out = model;
  out.mutable_config().detector.q = entry.q;
  out.mutable_config().linker.emit_singletons = entry.emit_singletons;
  return out;
}

SeedOutcome run_entry(const RunConfig& config, const ExperimentData& data,
                      const CorefModel& source_model, const GridEntry& entry,
                      std::uint64_t seed) {
  SeedOutcome outcome;
  const std::vector<std::size_t> order = pool_order(data.target_train.documents.size(), seed);
  Corpus target = annotated_subset(data.target_train, order, entry, config.timing);
  if (entry.objectives) {
    outcome.coref_docs = target.coref_annotations.size();
    outcome.mention_docs = target.mention_annotations.size();
  }

  CorefModel model = configured(source_model, entry);
  if (entry.objectives) {
    AdaptationData adaptation{&target, data.target_dev ? &*data.target_dev : nullptr,
                              &data.source_train};
    model = adapt(model, adaptation, *entry.objectives, entry.freeze, config.schedule, seed).model;
    if (entry.silver_q > 0.0 && entry.objectives->md_target) {
      Corpus unlabeled;
      for (const auto& doc : target.documents) {
        if (!target.mention_annotations.contains(doc.doc_id)) unlabeled.documents.push_back(doc);
      }
      for (auto& [id, mentions] : tag_silver(unlabeled, model, entry.silver_q)) {
        target.mention_annotations.emplace(id, std::move(mentions));
      }
      model = adapt(configured(source_model, entry), adaptation, *entry.objectives,
                    entry.freeze, config.schedule, seed)
                  .model;
    }
  }
  const auto predictions = predict_corpus(model, data.target_test);
  for (Scheme scheme : {Scheme::kWithSingletons, Scheme::kWithoutSingletons}) {
    outcome.counts[scheme] = document_counts(data.target_test, predictions, scheme);
    outcome.reports[scheme] =
        report_from_counts(outcome.counts[scheme], scheme, config.metrics.metric_set);
  }
  return outcome;
}

// Fails fast on objective/annotation conflicts, using the first seed's split.
void check_grid(const RunConfig& config, const ExperimentData& data, std::uint64_t seed) {
  const std::vector<std::size_t> order = pool_order(data.target_train.documents.size(), seed);
  for (const auto& entry : config.experiment.grid) {
    if (!entry.objectives) continue;
    const Corpus target = annotated_subset(data.target_train, order, entry, config.timing);
    AdaptationData adaptation{&target, data.target_dev ? &*data.target_dev : nullptr,
                              &data.source_train};
    try {
      check_adaptation(*entry.objectives, entry.freeze, adaptation, config.schedule);
    } catch (const ConfigError& e) {
      throw ConfigError("configuration " + entry.name + ": " + e.what());
    }
  }
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& config, const ExperimentData& data,
                                int jobs, std::uint64_t base_seed) {
  if (config.experiment.grid.empty()) throw ConfigError("experiment has no configurations");
  if (data.source_train.coref_annotations.empty()) {
    throw ConfigError("source corpus has no coreference annotations");
  }
  check_grid(config, data, base_seed);

  int num_seeds = 0;
  if (config.experiment.num_seeds) {
    num_seeds = *config.experiment.num_seeds;
  } else {
    std::size_t mentions = 0;
    for (const auto& [id, m] : data.target_train.mention_annotations) mentions += m.mentions.size();
    if (mentions == 0) {
      for (const auto& [id, c] : data.target_train.coref_annotations) mentions += c.mention_count();
    }
    num_seeds = seed_count(static_cast<long long>(mentions));
  }

  const Vocabulary vocab =
      Vocabulary::build({&data.source_train, &data.target_train}, config.max_vocab);
  const auto& grid = config.experiment.grid;
  std::vector<std::vector<SeedOutcome>> outcomes(
      static_cast<std::size_t>(num_seeds), std::vector<SeedOutcome>(grid.size()));

  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (int s = next++; s < num_seeds; s = next++) {
      try {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(s);
        const CorefModel init = CorefModel::initialize(config.model, vocab, seed);
        const CorefModel source = train_source(init, data.source_train, config.schedule, seed).model;
        for (std::size_t g = 0; g < grid.size(); ++g) {
          outcomes[static_cast<std::size_t>(s)][g] = run_entry(config, data, source, grid[g], seed);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min(jobs, num_seeds));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  ExperimentResult result;
  result.baseline = config.experiment.baseline;
  for (int s = 0; s < num_seeds; ++s) result.seeds.push_back(base_seed + static_cast<std::uint64_t>(s));
  for (Metric m : metrics_in(config.metrics.metric_set)) result.metric_names.push_back(to_string(m));

  std::optional<std::size_t> baseline_index;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid[g].name == config.experiment.baseline) baseline_index = g;
  }

  for (std::size_t g = 0; g < grid.size(); ++g) {
    ExperimentRow row;
    row.name = grid[g].name;
    row.seeds = result.seeds;
    for (const auto& per_seed : outcomes) {
      row.coref_docs += static_cast<double>(per_seed[g].coref_docs) / num_seeds;
      row.mention_docs += static_cast<double>(per_seed[g].mention_docs) / num_seeds;
    }
    for (Scheme scheme : {Scheme::kWithSingletons, Scheme::kWithoutSingletons}) {
      SchemeSummary summary;
      std::map<std::string, std::vector<double>> values;
      for (const auto& per_seed : outcomes) {
        const MetricReport& r = per_seed[g].reports.at(scheme);
        for (const auto& [metric, prf] : r.scores) values[to_string(metric)].push_back(prf.f1);
        values["avg"].push_back(r.avg_f1);
      }
      for (const auto& [name, v] : values) {
        summary.mean[name] = mean_of(v);
        summary.stddev[name] = stddev_of(v);
      }
      row.avg_per_seed[scheme] = values["avg"];
      if (baseline_index && *baseline_index != g) {
        std::vector<DocumentCounts> a, b;
        for (const auto& per_seed : outcomes) {
          const auto& ca = per_seed[g].counts.at(scheme);
          const auto& cb = per_seed[*baseline_index].counts.at(scheme);
          a.insert(a.end(), ca.begin(), ca.end());
          b.insert(b.end(), cb.begin(), cb.end());
        }
        if (a.size() >= 2) {
          const auto p = paired_bootstrap(a, b, config.metrics.metric_set,
                                          config.metrics.bootstrap_iterations, base_seed);
          summary.p_value = p.at("avg");
          summary.significant = *summary.p_value < config.metrics.significance;
        }
      }
      row.schemes[scheme] = std::move(summary);
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::vector<nlohmann::json> result_lines(const ExperimentResult& result) {
  std::vector<nlohmann::json> out;
  for (const auto& row : result.rows) {
    for (const auto& [scheme, summary] : row.schemes) {
      nlohmann::json line;
      line["configuration"] = row.name;
      line["scheme"] = to_string(scheme);
      line["seeds"] = row.seeds;
      line["coref_docs"] = row.coref_docs;
      line["mention_docs"] = row.mention_docs;
      line["mean_f1"] = summary.mean;
      line["std_f1"] = summary.stddev;
      line["avg_f1_per_seed"] = row.avg_per_seed.at(scheme);
      line["baseline"] = result.baseline;
      line["p_value"] = summary.p_value ? nlohmann::json(*summary.p_value) : nlohmann::json(nullptr);
      line["significant"] = summary.significant;
      out.push_back(std::move(line));
    }
  }
  return out;
}

std::string format_table(const ExperimentResult& result) {
  std::vector<std::string> columns = result.metric_names;
  columns.push_back("avg");
  std::size_t name_width = 13;
  for (const auto& row : result.rows) name_width = std::max(name_width, row.name.size());
  constexpr int kCell = 13;

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "configuration"
      << std::right << std::setw(8) << "coref" << std::setw(8) << "mention";
  for (Scheme scheme : {Scheme::kWithSingletons, Scheme::kWithoutSingletons}) {
    out << "  | " << std::left
        << std::setw(static_cast<int>(columns.size()) * kCell) << to_string(scheme);
  }
  out << "\n" << std::string(name_width + 16, ' ');
  for (int s = 0; s < 2; ++s) {
    out << "  | ";
    for (const auto& c : columns) out << std::left << std::setw(kCell) << c;
  }
  out << "\n";
  for (const auto& row : result.rows) {
    out << std::left << std::setw(static_cast<int>(name_width)) << row.name << std::right
        << std::fixed << std::setprecision(1) << std::setw(8) << row.coref_docs
        << std::setw(8) << row.mention_docs;
    for (Scheme scheme : {Scheme::kWithSingletons, Scheme::kWithoutSingletons}) {
      const SchemeSummary& s = row.schemes.at(scheme);
      out << "  | ";
      for (const auto& c : columns) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(1) << 100.0 * s.mean.at(c) << "±"
             << 100.0 * s.stddev.at(c);
        if (c == "avg" && s.significant) cell << "*";
        // "±" is two bytes in UTF-8 but one column wide.
        out << std::left << std::setw(kCell + 1) << cell.str();
      }
    }
    out << "\n";
  }
  out << "seeds: " << result.seeds.size();
  if (!result.baseline.empty()) out << "; * marks p < significance against " << result.baseline;
  out << "\n";
  return out.str();
}

}  // namespace coref
