#include <doctest.h>

#include "coref/budget.hpp"
#include "coref/errors.hpp"

using namespace coref;

namespace {

Document doc_of(const std::string& id, int tokens) {
  return {id, std::vector<std::string>(static_cast<std::size_t>(tokens), "w"), ""};
}

}  // namespace

TEST_CASE("default timing table") {
  TimingTable t = default_timing();
  CHECK(t.seconds(LengthClass::kShort, AnnotationTask::kCoreference) == 287.3);
  CHECK(t.seconds(LengthClass::kShort, AnnotationTask::kMention) == 186.1);
  CHECK(t.seconds(LengthClass::kMedium, AnnotationTask::kCoreference) == 582.5);
  CHECK(t.seconds(LengthClass::kMedium, AnnotationTask::kMention) == 408.8);
  CHECK(t.seconds(LengthClass::kLong, AnnotationTask::kCoreference) == 1306.1);
  CHECK(t.seconds(LengthClass::kLong, AnnotationTask::kMention) == 649.5);
  CHECK(t.overall.coref_seconds == 881.2);
  CHECK(t.overall.mention_seconds == 475.9);
  CHECK(t.overall_speedup() == doctest::Approx(1.85).epsilon(1e-12));
  const double long_speedup = t.seconds(LengthClass::kLong, AnnotationTask::kCoreference) /
                              t.seconds(LengthClass::kLong, AnnotationTask::kMention);
  CHECK(long_speedup == doctest::Approx(2.01).epsilon(0.0025));
  CHECK_NOTHROW(t.validate());
}

TEST_CASE("length classes") {
  TimingTable t = default_timing();
  CHECK(t.classify(1) == LengthClass::kShort);
  CHECK(t.classify(349) == LengthClass::kShort);
  CHECK(t.classify(350) == LengthClass::kMedium);
  CHECK(t.classify(649) == LengthClass::kMedium);
  CHECK(t.classify(650) == LengthClass::kLong);
  CHECK(estimate(doc_of("a", 700), AnnotationTask::kMention, t) == 649.5);
}

TEST_CASE("equivalent fractions") {
  TimingTable t = default_timing();
  CHECK(equivalent_fractions(0.5, t) == doctest::Approx(0.925).epsilon(1e-9));
  CHECK(equivalent_fractions(0.0, t) == 0.0);
  CHECK(equivalent_fractions(0.9, t) == 1.0);
  TimingTable derived = t;
  derived.reported_speedup = 0.0;
  CHECK(equivalent_fractions(0.5, derived) == doctest::Approx(0.5 * 881.2 / 475.9));
}

TEST_CASE("greedy plan stops at the first document that does not fit") {
  TimingTable t = default_timing();
  std::vector<Document> docs = {doc_of("a", 100), doc_of("b", 400), doc_of("c", 100)};
  BudgetPlan p = plan(docs, AnnotationTask::kCoreference, 287.3 + 500.0, t);
  REQUIRE(p.allocation.size() == 1);
  CHECK(p.allocation[0].doc_id == "a");
  CHECK(p.residual_seconds == doctest::Approx(500.0));
  BudgetPlan all = plan(docs, AnnotationTask::kMention, 1e9, t);
  CHECK(all.allocation.size() == 3);
  double spent = 0;
  for (const auto& a : all.allocation) spent += a.seconds;
  CHECK(spent + all.residual_seconds == doctest::Approx(1e9));
  CHECK(plan(docs, AnnotationTask::kMention, 0.0, t).allocation.empty());
}

TEST_CASE("timing validation") {
  TimingTable t = default_timing();
  t.classes[0].mention_seconds = 300.0;  // slower than coreference
  CHECK_THROWS_AS(t.validate(), ConfigError);
  TimingTable u = default_timing();
  u.long_from = 100;
  CHECK_THROWS_AS(u.validate(), ConfigError);
  CHECK(parse_task("mention") == AnnotationTask::kMention);
  CHECK_THROWS(parse_task("skim"));
}
