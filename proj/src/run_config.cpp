#include "coref/run_config.hpp"

#include <fstream>
#include <set>

#include "coref/errors.hpp"
#include "coref/formats.hpp"
#include "coref/hashing.hpp"
#include "coref/synthetic.hpp"

namespace coref {

std::string to_string(BudgetMode mode) {
  return mode == BudgetMode::kTime ? "time" : "count";
}

BudgetMode parse_budget_mode(const std::string& name) {
  if (name == "time") return BudgetMode::kTime;
  if (name == "count") return BudgetMode::kCount;
  throw ConfigError("budget_mode must be time or count, got '" + name + "'");
}

namespace {

using json = nlohmann::json;

void check_keys(const json& j, const std::string& section,
                const std::set<std::string>& known) {
  if (!j.is_object()) throw ConfigError(section + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown key " + section + "." + key);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for " + section + "." + key);
  }
}

void check_fraction(double value, const std::string& what) {
  if (!(value >= 0.0 && value <= 1.0)) throw ConfigError(what + " must lie in [0,1]");
}

GridEntry parse_entry(const json& j) {
  const std::string section = "experiment.configurations";
  check_keys(j, section,
             {"name", "objectives", "freeze", "q", "emit_singletons", "budget_mode",
              "coref_fraction", "mention_fraction", "budget_fraction", "coref_share",
              "silver_q"});
  GridEntry e;
  read(j, "name", e.name, section);
  if (e.name.empty()) throw ConfigError("every configuration needs a name");
  std::string objectives = "none";
  read(j, "objectives", objectives, section);
  if (objectives != "none") e.objectives = parse_objectives(objectives);
  std::string freeze = "none";
  read(j, "freeze", freeze, section);
  e.freeze = parse_freeze(freeze);
  read(j, "q", e.q, section);
  if (j.contains("emit_singletons")) {
    const auto& v = j.at("emit_singletons");
    e.emit_singletons = v.is_boolean()
                            ? (v.get<bool>() ? SingletonMode::kOn : SingletonMode::kOff)
                            : parse_singleton_mode(v.get<std::string>());
  }
  std::string mode = "count";
  read(j, "budget_mode", mode, section);
  e.budget_mode = parse_budget_mode(mode);
  read(j, "coref_fraction", e.coref_fraction, section);
  read(j, "mention_fraction", e.mention_fraction, section);
  read(j, "budget_fraction", e.budget_fraction, section);
  read(j, "coref_share", e.coref_share, section);
  read(j, "silver_q", e.silver_q, section);
  check_fraction(e.q, e.name + ".q");
  check_fraction(e.coref_fraction, e.name + ".coref_fraction");
  check_fraction(e.mention_fraction, e.name + ".mention_fraction");
  check_fraction(e.budget_fraction, e.name + ".budget_fraction");
  check_fraction(e.coref_share, e.name + ".coref_share");
  check_fraction(e.silver_q, e.name + ".silver_q");
  return e;
}

json entry_json(const GridEntry& e) {
  return {{"name", e.name},
          {"objectives", e.objectives ? to_string(*e.objectives) : "none"},
          {"freeze", to_string(e.freeze)},
          {"q", e.q},
          {"emit_singletons", to_string(e.emit_singletons)},
          {"budget_mode", to_string(e.budget_mode)},
          {"coref_fraction", e.coref_fraction},
          {"mention_fraction", e.mention_fraction},
          {"budget_fraction", e.budget_fraction},
          {"coref_share", e.coref_share},
          {"silver_q", e.silver_q}};
}

void read_times(const json& j, const char* key, TaskTimes& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) {
    throw ConfigError(std::string("budget.timing.") + key +
                      " must be [coref_seconds, mention_seconds]");
  }
  out = {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  schedule.validate();
  timing.validate();
  if (max_vocab < 2) throw ConfigError("encoder.max_vocab must be at least 2");
  if (metrics.bootstrap_iterations < 1) throw ConfigError("bootstrap_iterations must be positive");
  if (!(metrics.significance > 0.0 && metrics.significance < 1.0)) {
    throw ConfigError("significance must lie in (0,1)");
  }
  if (experiment.num_seeds && *experiment.num_seeds < 1) {
    throw ConfigError("experiment.num_seeds must be positive");
  }
  std::set<std::string> names;
  for (const auto& e : experiment.grid) {
    if (!names.insert(e.name).second) throw ConfigError("duplicate configuration " + e.name);
  }
  if (!experiment.baseline.empty() && !names.contains(experiment.baseline)) {
    throw ConfigError("baseline " + experiment.baseline + " is not a configuration");
  }
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  check_keys(j, "config",
             {"corpus", "encoder", "mention_detector", "antecedent_linker", "training",
              "metrics", "budget", "experiment"});

  if (j.contains("corpus")) {
    const auto& s = j.at("corpus");
    check_keys(s, "corpus",
               {"source_train", "source_dev", "target_train", "target_dev", "target_test"});
    read(s, "source_train", c.corpus.source_train, "corpus");
    read(s, "source_dev", c.corpus.source_dev, "corpus");
    read(s, "target_train", c.corpus.target_train, "corpus");
    read(s, "target_dev", c.corpus.target_dev, "corpus");
    read(s, "target_test", c.corpus.target_test, "corpus");
  }

  json model = json::object();
  for (const char* key : {"encoder", "mention_detector", "antecedent_linker"}) {
    if (j.contains(key)) model[key] = j.at(key);
  }
  if (model.contains("encoder") && model["encoder"].is_object()) {
    read(model["encoder"], "max_vocab", c.max_vocab, "encoder");
    model["encoder"].erase("max_vocab");
    if (model["encoder"].contains("vocab_size")) {
      throw ConfigError("encoder.vocab_size is derived from the corpora; set encoder.max_vocab");
    }
  }
  c.model = model_config_from_json(model);

  if (j.contains("training")) {
    const auto& s = j.at("training");
    check_keys(s, "training",
               {"source_epochs", "target_epochs", "early_stop_patience", "lr_encoder",
                "lr_other", "weight_decay", "clip_norm", "mask_rate",
                "interleave_threshold_mentions"});
    read(s, "source_epochs", c.schedule.source_epochs, "training");
    read(s, "target_epochs", c.schedule.target_epochs, "training");
    read(s, "early_stop_patience", c.schedule.early_stop_patience, "training");
    read(s, "lr_encoder", c.schedule.lr_encoder, "training");
    read(s, "lr_other", c.schedule.lr_other, "training");
    read(s, "weight_decay", c.schedule.weight_decay, "training");
    read(s, "clip_norm", c.schedule.clip_norm, "training");
    read(s, "mask_rate", c.schedule.mask_rate, "training");
    read(s, "interleave_threshold_mentions", c.schedule.interleave_threshold_mentions,
         "training");
  }

  if (j.contains("metrics")) {
    const auto& s = j.at("metrics");
    check_keys(s, "metrics", {"scheme", "metric_set", "bootstrap_iterations", "significance"});
    std::string scheme = "auto";
    read(s, "scheme", scheme, "metrics");
    if (scheme != "auto") c.metrics.scheme = parse_scheme(scheme);
    std::string set = to_string(c.metrics.metric_set);
    read(s, "metric_set", set, "metrics");
    c.metrics.metric_set = parse_metric_set(set);
    read(s, "bootstrap_iterations", c.metrics.bootstrap_iterations, "metrics");
    read(s, "significance", c.metrics.significance, "metrics");
  }

  if (j.contains("budget")) {
    const auto& s = j.at("budget");
    check_keys(s, "budget", {"timing"});
    if (s.contains("timing")) {
      const auto& t = s.at("timing");
      check_keys(t, "budget.timing",
                 {"short", "medium", "long", "all", "reported_speedup", "medium_from",
                  "long_from"});
      TimingTable table = default_timing();
      read_times(t, "short", table.classes[0]);
      read_times(t, "medium", table.classes[1]);
      read_times(t, "long", table.classes[2]);
      read_times(t, "all", table.overall);
      // New overall times without a published speed-up use their own ratio.
      if (t.contains("all")) table.reported_speedup = 0.0;
      read(t, "reported_speedup", table.reported_speedup, "budget.timing");
      read(t, "medium_from", table.medium_from, "budget.timing");
      read(t, "long_from", table.long_from, "budget.timing");
      c.timing = table;
    }
  }

  if (j.contains("experiment")) {
    const auto& s = j.at("experiment");
    check_keys(s, "experiment", {"num_seeds", "baseline", "configurations"});
    if (s.contains("num_seeds") && !s.at("num_seeds").is_null()) {
      int n = 0;
      read(s, "num_seeds", n, "experiment");
      c.experiment.num_seeds = n;
    }
    read(s, "baseline", c.experiment.baseline, "experiment");
    if (s.contains("configurations")) {
      if (!s.at("configurations").is_array()) {
        throw ConfigError("experiment.configurations must be a list");
      }
      for (const auto& e : s.at("configurations")) c.experiment.grid.push_back(parse_entry(e));
    }
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

json to_json(const RunConfig& c) {
  json model = to_json(c.model);
  model["encoder"].erase("vocab_size");
  model["encoder"]["max_vocab"] = c.max_vocab;
  json grid = json::array();
  for (const auto& e : c.experiment.grid) grid.push_back(entry_json(e));
  const auto times = [](const TaskTimes& t) {
    return json::array({t.coref_seconds, t.mention_seconds});
  };
  return {
      {"corpus",
       {{"source_train", c.corpus.source_train},
        {"source_dev", c.corpus.source_dev},
        {"target_train", c.corpus.target_train},
        {"target_dev", c.corpus.target_dev},
        {"target_test", c.corpus.target_test}}},
      {"encoder", model["encoder"]},
      {"mention_detector", model["mention_detector"]},
      {"antecedent_linker", model["antecedent_linker"]},
      {"training",
       {{"source_epochs", c.schedule.source_epochs},
        {"target_epochs", c.schedule.target_epochs},
        {"early_stop_patience", c.schedule.early_stop_patience},
        {"lr_encoder", c.schedule.lr_encoder},
        {"lr_other", c.schedule.lr_other},
        {"weight_decay", c.schedule.weight_decay},
        {"clip_norm", c.schedule.clip_norm},
        {"mask_rate", c.schedule.mask_rate},
        {"interleave_threshold_mentions", c.schedule.interleave_threshold_mentions}}},
      {"metrics",
       {{"scheme", c.metrics.scheme ? to_string(*c.metrics.scheme) : "auto"},
        {"metric_set", to_string(c.metrics.metric_set)},
        {"bootstrap_iterations", c.metrics.bootstrap_iterations},
        {"significance", c.metrics.significance}}},
      {"budget",
       {{"timing",
         {{"short", times(c.timing.classes[0])},
          {"medium", times(c.timing.classes[1])},
          {"long", times(c.timing.classes[2])},
          {"all", times(c.timing.overall)},
          {"reported_speedup", c.timing.reported_speedup},
          {"medium_from", c.timing.medium_from},
          {"long_from", c.timing.long_from}}}}},
      {"experiment",
       {{"num_seeds", c.experiment.num_seeds ? json(*c.experiment.num_seeds) : json(nullptr)},
        {"baseline", c.experiment.baseline},
        {"configurations", grid}}},
  };
}

std::string run_config_hash(const RunConfig& config) {
  return hex64(fnv1a64(to_json(config).dump()));
}

std::filesystem::path resolve(const RunConfig& config, const std::string& ref) {
  const std::filesystem::path p(ref);
  return p.is_absolute() ? p : config.base_dir / p;
}

Corpus load_corpus_ref(const RunConfig& config, const std::string& ref) {
  if (ref.empty()) throw ConfigError("corpus path is not set");
  const std::filesystem::path path = resolve(config, ref);
  if (!std::filesystem::exists(path)) throw ConfigError("missing corpus " + path.string());
  if (path.extension() == ".cfg") {
    const SyntheticSpec spec = load_synthetic_spec(path.string());
    return generate_synthetic_corpus(spec, spec.seed);
  }
  return load_corpus(path.string());
}

}  // namespace coref
