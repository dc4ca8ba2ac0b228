// Command-line entry point: coref <subcommand> [flags]. Run with --help.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "coref/budget.hpp"
#include "coref/errors.hpp"
#include "coref/experiment.hpp"
#include "coref/formats.hpp"
#include "coref/hashing.hpp"
#include "coref/metrics.hpp"
#include "coref/model.hpp"
#include "coref/run_config.hpp"
#include "coref/synthetic.hpp"
#include "coref/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace coref;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kInputError = 2;

fs::path runs_root() {
  const char* env = std::getenv("COREF_RUNS_ROOT");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Records how a run directory was produced. Everything here is a function of
// the inputs; wall-clock time goes to timing.json next to it.
class Run {
 public:
  Run(std::string command, const RunConfig& config, json args, std::uint64_t seed)
      : start_(std::chrono::steady_clock::now()) {
    manifest_["command"] = std::move(command);
    manifest_["config"] = to_json(config);
    manifest_["args"] = std::move(args);
    manifest_["seed"] = seed;
    const std::string hash = hex64(fnv1a64(manifest_["config"].dump() + manifest_["command"].dump() +
                                           manifest_["args"].dump()));
    manifest_["config_hash"] = hash;
    manifest_["inputs"] = json::object();
    manifest_["outputs"] = json::object();
    dir_ = runs_root() / hash / std::to_string(seed);
    fs::create_directories(dir_);
  }

  const fs::path& dir() const { return dir_; }

  void input(const std::string& role, const fs::path& path) {
    if (path.empty() || !fs::exists(path)) return;
    manifest_["inputs"][role] = {{"path", path.string()}, {"sha1", git_blob_sha1_file(path)}};
  }

  void output(const std::string& role, const fs::path& path) {
    manifest_["outputs"][role] = {{"path", path.filename().string()},
                                  {"sha1", git_blob_sha1_file(path)}};
  }

  void finish() {
    write_text(dir_ / "manifest.json", manifest_.dump(2) + "\n");
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text(dir_ / "timing.json", json({{"wall_clock_seconds", seconds}}).dump(2) + "\n");
    std::cout << "run directory: " << dir_.string() << "\n";
  }

 private:
  json manifest_;
  fs::path dir_;
  std::chrono::steady_clock::time_point start_;
};

void record_corpora(Run& run, const RunConfig& config) {
  const std::map<std::string, std::string> roles = {
      {"source_train", config.corpus.source_train},
      {"source_dev", config.corpus.source_dev},
      {"target_train", config.corpus.target_train},
      {"target_dev", config.corpus.target_dev},
      {"target_test", config.corpus.target_test}};
  for (const auto& [role, ref] : roles) {
    if (!ref.empty()) run.input(role, resolve(config, ref));
  }
}

json report_json(const MetricReport& r) {
  json j;
  j["scheme"] = to_string(r.scheme);
  j["metric_set"] = to_string(r.metric_set);
  for (const auto& [metric, prf] : r.scores) {
    j["scores"][to_string(metric)] = {{"precision", prf.precision},
                                      {"recall", prf.recall},
                                      {"f1", prf.f1}};
  }
  j["avg_f1"] = r.avg_f1;
  return j;
}

std::string report_text(const MetricReport& r) {
  std::ostringstream out;
  out << "scheme: " << to_string(r.scheme) << "\n";
  out << std::left << std::setw(10) << "metric" << std::right << std::setw(10) << "P"
      << std::setw(10) << "R" << std::setw(10) << "F1" << "\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& [metric, prf] : r.scores) {
    out << std::left << std::setw(10) << to_string(metric) << std::right << std::setw(10)
        << prf.precision << std::setw(10) << prf.recall << std::setw(10) << prf.f1 << "\n";
  }
  out << std::left << std::setw(30) << "avg" << std::right << std::setw(10) << r.avg_f1 << "\n";
  return out.str();
}

std::map<std::string, ClusterSet> clusters_of(const Corpus& corpus) {
  return corpus.coref_annotations;
}

void save_corpus(const Corpus& corpus, const fs::path& path,
                 const std::map<std::string, std::string>& provenance = {}) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const std::string ext = path.extension().string();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (ext == ".conll" || path.string().ends_with("_conll")) {
    serialize_conll(corpus, out);
  } else {
    serialize_standoff(corpus, out, provenance);
  }
}

Corpus predicted_corpus(const CorefModel& model, const Corpus& input) {
  Corpus out;
  out.documents = input.documents;
  out.style = input.style;
  out.split = input.split;
  for (const auto& doc : input.documents) {
    ClusterSet clusters = model.predict(doc).clusters;
    out.mention_annotations.emplace(doc.doc_id, derive_mentions(clusters));
    out.coref_annotations.emplace(doc.doc_id, std::move(clusters));
  }
  return out;
}

// --- prepare ---------------------------------------------------------------

struct PrepareArgs {
  std::string format = "standoff";
  std::string input;
  std::string spec;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string output;
};

int cmd_prepare(const PrepareArgs& a) {
  Corpus corpus;
  if (a.format == "synthetic") {
    if (a.spec.empty()) throw ConfigError("--format synthetic needs --spec");
    const SyntheticSpec spec = load_synthetic_spec(a.spec);
    corpus = generate_synthetic_corpus(spec, a.seed_given ? a.seed : spec.seed);
  } else {
    if (a.input.empty()) throw ConfigError("--input is required");
    std::ifstream in(a.input, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + a.input);
    if (a.format == "conll") corpus = parse_conll(in);
    else if (a.format == "standoff") corpus = parse_standoff(in);
    else throw ConfigError("unknown format '" + a.format + "'");
  }
  validate(corpus);
  save_corpus(corpus, a.output);

  std::map<std::size_t, std::size_t> histogram;
  std::size_t clusters = 0;
  std::size_t singletons = 0;
  for (const auto& [id, set] : corpus.coref_annotations) {
    for (const auto& c : set.clusters()) {
      ++histogram[c.size()];
      ++clusters;
      if (c.size() == 1) ++singletons;
    }
  }
  std::size_t tokens = 0;
  for (const auto& doc : corpus.documents) tokens += doc.tokens.size();
  std::cout << "documents: " << corpus.documents.size() << "\n"
            << "tokens: " << tokens << "\n"
            << "mentions: " << corpus.mention_count() << "\n"
            << "clusters: " << clusters << "\n"
            << "singleton rate: " << std::fixed << std::setprecision(4)
            << (clusters == 0 ? 0.0 : static_cast<double>(singletons) / clusters) << "\n"
            << "cluster sizes:";
  for (const auto& [size, count] : histogram) std::cout << " " << size << ":" << count;
  std::cout << "\nwrote " << a.output << "\n";
  return 0;
}

// --- train / adapt ---------------------------------------------------------

Vocabulary build_vocab(const RunConfig& config, const Corpus& source) {
  if (config.corpus.target_train.empty()) return Vocabulary::build({&source}, config.max_vocab);
  const Corpus target = load_corpus_ref(config, config.corpus.target_train);
  return Vocabulary::build({&source, &target}, config.max_vocab);
}

json history_json(const TrainResult& result) {
  json out = json::array();
  for (const auto& e : result.history) {
    json row = {{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"steps", e.steps}};
    if (e.dev_avg_f1) row["dev_avg_f1"] = *e.dev_avg_f1;
    out.push_back(row);
  }
  return out;
}

void evaluate_into(Run& run, const CorefModel& model, const RunConfig& config,
                   const std::string& ref, const std::string& name) {
  if (ref.empty()) return;
  const Corpus gold = load_corpus_ref(config, ref);
  const Scheme scheme = config.metrics.scheme.value_or(matching_scheme(gold));
  const MetricReport r = report(gold, predict_corpus(model, gold), scheme, config.metrics.metric_set);
  const fs::path path = run.dir() / (name + ".json");
  write_text(path, report_json(r).dump(2) + "\n");
  run.output(name, path);
  std::cout << name << ":\n" << report_text(r);
}

int cmd_train(const std::string& config_path, std::uint64_t seed) {
  const RunConfig config = load_run_config(config_path);
  Run run("train", config, json::object(), seed);
  run.input("config", config_path);
  record_corpora(run, config);
  const Corpus source = load_corpus_ref(config, config.corpus.source_train);
  const CorefModel init = CorefModel::initialize(config.model, build_vocab(config, source), seed);
  const TrainResult result = train_source(init, source, config.schedule, seed);
  const fs::path ckpt = run.dir() / "source.ckpt";
  save_checkpoint(result.model, ckpt);
  run.output("checkpoint", ckpt);
  write_text(run.dir() / "history.json", history_json(result).dump(2) + "\n");
  run.output("history", run.dir() / "history.json");
  evaluate_into(run, result.model, config, config.corpus.source_dev, "source_dev_report");
  run.finish();
  return 0;
}

struct AdaptArgs {
  std::string config;
  std::string checkpoint;
  std::string objectives = "md_t";
  std::string freeze = "none";
  std::optional<double> q;
  std::uint64_t seed = 0;
};

int cmd_adapt(const AdaptArgs& a) {
  const RunConfig config = load_run_config(a.config);
  const ObjectiveConfig objectives = parse_objectives(a.objectives);
  const FreezeConfig freeze = parse_freeze(a.freeze);
  const Corpus target = load_corpus_ref(config, config.corpus.target_train);
  std::optional<Corpus> dev;
  if (!config.corpus.target_dev.empty()) dev = load_corpus_ref(config, config.corpus.target_dev);
  std::optional<Corpus> source;
  if (!config.corpus.source_train.empty()) source = load_corpus_ref(config, config.corpus.source_train);
  const AdaptationData data{&target, dev ? &*dev : nullptr, source ? &*source : nullptr};
  check_adaptation(objectives, freeze, data, config.schedule);

  CorefModel model = load_checkpoint(a.checkpoint);
  if (a.q) model.mutable_config().detector.q = *a.q;
  json args = {{"checkpoint_sha1", git_blob_sha1_file(a.checkpoint)},
               {"objectives", to_string(objectives)},
               {"freeze", to_string(freeze)},
               {"q", model.config().detector.q}};
  Run run("adapt", config, args, a.seed);
  run.input("config", a.config);
  run.input("checkpoint", a.checkpoint);
  record_corpora(run, config);
  const TrainResult result = adapt(model, data, objectives, freeze, config.schedule, a.seed);
  const fs::path ckpt = run.dir() / "adapted.ckpt";
  save_checkpoint(result.model, ckpt);
  run.output("checkpoint", ckpt);
  json history = {{"epochs", history_json(result)},
                  {"best_epoch", result.best_epoch},
                  {"stopped_early", result.stopped_early}};
  write_text(run.dir() / "history.json", history.dump(2) + "\n");
  run.output("history", run.dir() / "history.json");
  evaluate_into(run, result.model, config, config.corpus.target_test, "target_test_report");
  run.finish();
  return 0;
}

// --- tag-silver / predict --------------------------------------------------

int cmd_tag_silver(const std::string& checkpoint, const std::string& input, double q,
                   const std::string& output) {
  const CorefModel model = load_checkpoint(checkpoint);
  const Corpus unlabeled = load_corpus(input);
  Corpus out;
  out.documents = unlabeled.documents;
  out.style = unlabeled.style;
  out.split = unlabeled.split;
  out.mention_annotations = tag_silver(unlabeled, model, q);
  std::map<std::string, std::string> provenance;
  std::size_t mentions = 0;
  for (const auto& [id, m] : out.mention_annotations) {
    provenance[id] = "silver";
    mentions += m.mentions.size();
  }
  save_corpus(out, output, provenance);
  std::cout << "tagged " << mentions << " silver mentions in " << out.documents.size()
            << " documents; wrote " << output << "\n";
  return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& input,
                std::optional<double> q, const std::string& output) {
  CorefModel model = load_checkpoint(checkpoint);
  if (q) model.mutable_config().detector.q = *q;
  const Corpus predicted = predicted_corpus(model, load_corpus(input));
  save_corpus(predicted, output);
  std::cout << "wrote " << output << "\n";
  return 0;
}

// --- evaluate ----------------------------------------------------------------

int cmd_evaluate(const std::string& gold_path, const std::string& sys_path,
                 const std::string& scheme_name, const std::string& metric_set,
                 bool as_json) {
  const Corpus gold = load_corpus(gold_path);
  const Corpus sys = load_corpus(sys_path);
  std::vector<Scheme> schemes;
  if (scheme_name == "both") schemes = {Scheme::kWithSingletons, Scheme::kWithoutSingletons};
  else schemes = {parse_scheme(scheme_name)};
  json all = json::array();
  for (Scheme scheme : schemes) {
    const MetricReport r = report(gold, clusters_of(sys), scheme, parse_metric_set(metric_set));
    if (as_json) all.push_back(report_json(r));
    else std::cout << report_text(r);
  }
  if (as_json) std::cout << all.dump(2) << "\n";
  return 0;
}

// --- budget ------------------------------------------------------------------

struct BudgetArgs {
  double coref_fraction = 0.5;
  std::string corpus;
  std::optional<double> budget_seconds;
  std::string config;
};

int cmd_budget(const BudgetArgs& a) {
  TimingTable table = default_timing();
  if (!a.config.empty()) table = load_run_config(a.config).timing;
  const double mention_fraction = equivalent_fractions(a.coref_fraction, table);
  std::cout << std::fixed << std::setprecision(6) << "overall speed-up: " << table.overall_speedup()
            << "\ncoref fraction: " << a.coref_fraction
            << "\nmention fraction: " << mention_fraction << "\n";
  if (a.corpus.empty()) return 0;

  const Corpus corpus = load_corpus(a.corpus);
  double full = 0.0;
  for (const auto& doc : corpus.documents) full += estimate(doc, AnnotationTask::kCoreference, table);
  const double budget = a.budget_seconds.value_or(a.coref_fraction * full);
  std::cout << std::setprecision(1) << "budget seconds: " << budget << "\n";
  for (AnnotationTask task : {AnnotationTask::kCoreference, AnnotationTask::kMention}) {
    const BudgetPlan p = plan(corpus, task, budget, table);
    std::cout << to_string(task) << " allocation: " << p.allocation.size() << " of "
              << corpus.documents.size() << " documents, residual " << p.residual_seconds
              << " s\n";
    for (const auto& alloc : p.allocation) {
      std::cout << "  " << alloc.doc_id << "\t" << alloc.seconds << "\n";
    }
  }
  return 0;
}

// --- experiment --------------------------------------------------------------

int cmd_experiment(const std::string& config_path, int jobs, std::uint64_t seed) {
  const RunConfig config = load_run_config(config_path);
  const ExperimentData data = load_experiment_data(config);
  Run run("experiment", config, json::object(), seed);
  run.input("config", config_path);
  record_corpora(run, config);
  const ExperimentResult result = run_experiment(config, data, jobs, seed);
  std::string lines;
  for (const auto& line : result_lines(result)) lines += line.dump() + "\n";
  write_text(run.dir() / "results.jsonl", lines);
  run.output("results", run.dir() / "results.jsonl");
  const std::string table = format_table(result);
  write_text(run.dir() / "results.txt", table);
  run.output("table", run.dir() / "results.txt");
  std::cout << table;
  run.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coreference domain adaptation toolkit"};
  app.require_subcommand(1);

  PrepareArgs prepare;
  auto* p = app.add_subcommand("prepare", "Validate a corpus and write it as standoff");
  p->add_option("--format", prepare.format, "conll, standoff or synthetic")
      ->check(CLI::IsMember({"conll", "standoff", "synthetic"}));
  p->add_option("--input", prepare.input, "Input corpus file");
  p->add_option("--spec", prepare.spec, "Synthetic spec file");
  p->add_option("--seed", prepare.seed, "Generator seed (default: from the synthetic spec)");
  p->add_option("--output", prepare.output, "Output path")->required();

  std::string config;
  std::uint64_t seed = 0;
  auto* t = app.add_subcommand("train", "Train on the source domain");
  t->add_option("--config", config, "Run configuration (JSON)")->required();
  t->add_option("--seed", seed, "Random seed");

  AdaptArgs adapt_args;
  auto* a = app.add_subcommand("adapt", "Continue training on the target domain");
  a->add_option("--config", adapt_args.config, "Run configuration (JSON)")->required();
  a->add_option("--checkpoint", adapt_args.checkpoint, "Source checkpoint")->required();
  a->add_option("--objectives", adapt_args.objectives, "Subset of cl_s,cl_t,md_t,mlm_t");
  a->add_option("--freeze", adapt_args.freeze, "Subset of enc,md,al or none");
  a->add_option("--q", adapt_args.q, "High-precision mention threshold");
  a->add_option("--seed", adapt_args.seed, "Random seed");

  std::string checkpoint, input, output;
  double q = 0.5;
  auto* s = app.add_subcommand("tag-silver", "Tag silver mentions on unlabeled documents");
  s->add_option("--checkpoint", checkpoint, "Trained detector")->required();
  s->add_option("--input", input, "Unlabeled corpus")->required();
  s->add_option("--q", q, "Mention probability threshold");
  s->add_option("--output", output, "Standoff output")->required();

  std::optional<double> predict_q;
  auto* pr = app.add_subcommand("predict", "Predict clusters for a corpus");
  pr->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  pr->add_option("--input", input, "Input corpus")->required();
  pr->add_option("--q", predict_q, "Override the mention threshold");
  pr->add_option("--output", output, "Output path (.conll or standoff)")->required();

  std::string gold, sys, scheme = "both", metric_set = "all";
  bool as_json = false;
  auto* e = app.add_subcommand("evaluate", "Score system clusters against gold");
  e->add_option("--gold", gold, "Gold corpus")->required();
  e->add_option("--sys", sys, "System corpus")->required();
  e->add_option("--scheme", scheme, "with, without or both")
      ->check(CLI::IsMember({"with", "without", "with_singletons", "without_singletons", "both"}));
  e->add_option("--metrics", metric_set, "all or conll")->check(CLI::IsMember({"all", "conll"}));
  e->add_flag("--json", as_json, "Print JSON");

  BudgetArgs budget;
  auto* b = app.add_subcommand("budget", "Time-equivalent annotation planning");
  b->add_option("--coref-fraction", budget.coref_fraction, "Fraction annotated for coreference");
  b->add_option("--corpus", budget.corpus, "Corpus to allocate");
  b->add_option("--budget-seconds", budget.budget_seconds, "Explicit budget in seconds");
  b->add_option("--config", budget.config, "Run configuration with a timing override");

  int jobs = 1;
  auto* x = app.add_subcommand("experiment", "Run an experiment grid");
  x->add_option("--config", config, "Run configuration (JSON)")->required();
  x->add_option("--jobs", jobs, "Seeds run in parallel")->check(CLI::PositiveNumber);
  x->add_option("--seed", seed, "First seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kInputError;
  }

  try {
    if (*p) {
      prepare.seed_given = p->count("--seed") > 0;
      return cmd_prepare(prepare);
    }
    if (*t) return cmd_train(config, seed);
    if (*a) return cmd_adapt(adapt_args);
    if (*s) return cmd_tag_silver(checkpoint, input, q, output);
    if (*pr) return cmd_predict(checkpoint, input, predict_q, output);
    if (*e) return cmd_evaluate(gold, sys, scheme, metric_set, as_json);
    if (*b) return cmd_budget(budget);
    if (*x) return cmd_experiment(config, jobs, seed);
  } catch (const FormatError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kInputError;
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kInputError;
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kInputError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kRuntimeFailure;
  }
  return kRuntimeFailure;
}
