#include "coref/budget.hpp"

#include <algorithm>

#include "coref/errors.hpp"

namespace coref {

std::string to_string(AnnotationTask task) {
  return task == AnnotationTask::kMention ? "mention" : "coreference";
}

AnnotationTask parse_task(const std::string& name) {
  if (name == "mention") return AnnotationTask::kMention;
  if (name == "coreference" || name == "coref") return AnnotationTask::kCoreference;
  throw ConfigError("unknown annotation task '" + name + "'");
}

LengthClass TimingTable::classify(int tokens) const {
  if (tokens >= long_from) return LengthClass::kLong;
  if (tokens >= medium_from) return LengthClass::kMedium;
  return LengthClass::kShort;
}

double TimingTable::overall_speedup() const {
  if (reported_speedup > 0.0) return reported_speedup;
  return overall.coref_seconds / overall.mention_seconds;
}

double TimingTable::seconds(LengthClass length, AnnotationTask task) const {
  const TaskTimes& times = classes[static_cast<std::size_t>(length)];
  return task == AnnotationTask::kMention ? times.mention_seconds
                                          : times.coref_seconds;
}

void TimingTable::validate() const {
  auto check = [](const TaskTimes& t, const std::string& name) {
    if (!(t.coref_seconds > 0.0) || !(t.mention_seconds > 0.0)) {
      throw ConfigError("timing '" + name + "': times must be positive");
    }
    if (t.mention_seconds > t.coref_seconds) {
      throw ConfigError("timing '" + name +
                        "': mention time exceeds coreference time");
    }
  };
  check(classes[0], "short");
  check(classes[1], "medium");
  check(classes[2], "long");
  check(overall, "all");
  if (reported_speedup < 0.0) {
    throw ConfigError("timing: reported speed-up must be nonnegative");
  }
  if (medium_from < 1 || long_from <= medium_from) {
    throw ConfigError("timing class boundaries must satisfy 0 < medium < long");
  }
}

TimingTable default_timing() {
  TimingTable table;
  table.classes[0] = {287.3, 186.1};
  table.classes[1] = {582.5, 408.8};
  table.classes[2] = {1306.1, 649.5};
  table.overall = {881.2, 475.9};
  table.reported_speedup = 1.85;
  table.medium_from = 350;
  table.long_from = 650;
  return table;
}

double estimate(const Document& doc, AnnotationTask task,
                const TimingTable& table) {
  return table.seconds(table.classify(doc.length()), task);
}

BudgetPlan plan(const std::vector<Document>& documents, AnnotationTask task,
                double budget_seconds, const TimingTable& table) {
  if (budget_seconds < 0.0) throw ConfigError("budget must be nonnegative");
  BudgetPlan out;
  out.total_seconds = budget_seconds;
  out.task = task;
  // Relative slack absorbs rounding when the budget is a sum of table times.
  const double slack = 1e-9 * std::max(1.0, budget_seconds);
  double spent = 0.0;
  for (const auto& doc : documents) {
    const double cost = estimate(doc, task, table);
    if (spent + cost > budget_seconds + slack) break;
    spent += cost;
    out.allocation.push_back({doc.doc_id, cost});
  }
  out.residual_seconds = std::max(0.0, budget_seconds - spent);
  return out;
}

BudgetPlan plan(const Corpus& corpus, AnnotationTask task, double budget_seconds,
                const TimingTable& table) {
  return plan(corpus.documents, task, budget_seconds, table);
}

double equivalent_fractions(double coref_fraction, const TimingTable& table) {
  if (coref_fraction < 0.0 || coref_fraction > 1.0) {
    throw ConfigError("coreference fraction must lie in [0,1]");
  }
  return std::min(1.0, coref_fraction * table.overall_speedup());
}

}  // namespace coref
