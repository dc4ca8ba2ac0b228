#pragma once

#include <array>
#include <string>
#include <vector>

#include "coref/corpus.hpp"

namespace coref {

enum class AnnotationTask { kMention, kCoreference };

std::string to_string(AnnotationTask task);
AnnotationTask parse_task(const std::string& name);

enum class LengthClass { kShort = 0, kMedium = 1, kLong = 2 };

struct TaskTimes {
  double coref_seconds = 0.0;
  double mention_seconds = 0.0;
};

// Average per-document annotation time by document-length class.
struct TimingTable {
  std::array<TaskTimes, 3> classes;
  TaskTimes overall;
  // Published all-document speed-up, rounded as reported alongside the
  // timings. Zero means derive it from `overall`.
  double reported_speedup = 0.0;
  // Token counts where the medium and long classes begin.
  int medium_from = 350;
  int long_from = 650;

  LengthClass classify(int tokens) const;
  // reported_speedup when set, else overall coref / mention seconds.
  double overall_speedup() const;
  double seconds(LengthClass length, AnnotationTask task) const;

  // Throws ConfigError unless all times are positive, mention time never
  // exceeds coreference time, and class boundaries increase.
  void validate() const;
};

// Timed-annotation averages for short (~200 words), medium (~500) and long
// (~800) documents plus the all-document averages.
TimingTable default_timing();

double estimate(const Document& doc, AnnotationTask task,
                const TimingTable& table);

struct Allocation {
  std::string doc_id;
  double seconds = 0.0;
};

struct BudgetPlan {
  double total_seconds = 0.0;
  AnnotationTask task = AnnotationTask::kMention;
  std::vector<Allocation> allocation;
  double residual_seconds = 0.0;
};

// Takes documents in corpus order until the next one would exceed the budget.
BudgetPlan plan(const Corpus& corpus, AnnotationTask task, double budget_seconds,
                const TimingTable& table);
BudgetPlan plan(const std::vector<Document>& documents, AnnotationTask task,
                double budget_seconds, const TimingTable& table);

// Fraction of documents whose mention annotation costs the same time as
// coreference annotation of `coref_fraction` of them, using the overall
// speed-up; clipped to 1.
double equivalent_fractions(double coref_fraction, const TimingTable& table);

}  // namespace coref
