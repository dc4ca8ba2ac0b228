#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "coref/errors.hpp"
#include "coref/experiment.hpp"
#include "coref/run_config.hpp"

using namespace coref;
using nlohmann::json;

namespace {

const std::filesystem::path kQuickstart = std::filesystem::path(COREF_SOURCE_DIR) / "data" / "quickstart";

Corpus pool_of(int docs, int tokens) {
  Corpus c;
  for (int i = 0; i < docs; ++i) {
    const std::string id = "d" + std::to_string(i);
    c.documents.push_back({id, std::vector<std::string>(static_cast<std::size_t>(tokens), "w"), ""});
    c.coref_annotations[id] = ClusterSet(id, {{{0, 0}, {2, 2}}});
    c.mention_annotations[id] = MentionAnnotation{id, {{0, 0}, {2, 2}}};
  }
  return c;
}

std::vector<std::size_t> identity(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST_CASE("empty config takes defaults") {
  RunConfig c = parse_run_config(json::object(), ".");
  CHECK(c.model.detector.lambda_keep == 0.4);
  CHECK(c.model.linker.top_k == 50);
  CHECK(c.schedule.lr_encoder == 2e-5);
  CHECK(c.schedule.lr_other == 1e-4);
  CHECK(c.metrics.bootstrap_iterations == 10000);
  CHECK(c.timing.overall_speedup() == doctest::Approx(1.85));
  CHECK_FALSE(c.experiment.num_seeds.has_value());
}

TEST_CASE("config sections parse and round trip") {
  json j = {
      {"encoder", {{"embedding_dim", 8}, {"max_vocab", 300}}},
      {"mention_detector", {{"q", 0.5}, {"max_width", 5}}},
      {"antecedent_linker", {{"emit_singletons", "false"}}},
      {"training", {{"target_epochs", 3}, {"lr_encoder", 0.01}}},
      {"metrics", {{"scheme", "without"}, {"metric_set", "conll"}}},
      {"experiment",
       {{"num_seeds", 2},
        {"baseline", "a"},
        {"configurations",
         {{{"name", "a"}, {"objectives", "none"}},
          {{"name", "b"}, {"objectives", "cl_s,md_t"}, {"q", 0.5}, {"budget_mode", "time"},
           {"budget_fraction", 0.5}, {"coref_share", 0.0}}}}}}};
  RunConfig c = parse_run_config(j, ".");
  CHECK(c.model.encoder.embedding_dim == 8);
  CHECK(c.max_vocab == 300);
  CHECK(c.model.detector.q == 0.5);
  CHECK(c.model.linker.emit_singletons == SingletonMode::kOff);
  CHECK(c.schedule.target_epochs == 3);
  CHECK(c.metrics.scheme == Scheme::kWithoutSingletons);
  CHECK(c.metrics.metric_set == MetricSet::kConll);
  REQUIRE(c.experiment.grid.size() == 2);
  CHECK_FALSE(c.experiment.grid[0].objectives.has_value());
  CHECK(c.experiment.grid[1].objectives->md_target);
  CHECK(c.experiment.grid[1].budget_mode == BudgetMode::kTime);
  RunConfig back = parse_run_config(to_json(c), ".");
  CHECK(to_json(back) == to_json(c));
  CHECK(run_config_hash(back) == run_config_hash(c));
}

TEST_CASE("config errors") {
  auto bad = [](const json& j) { return parse_run_config(j, "."); };
  CHECK_THROWS_AS(bad({{"encoder", {{"colour", 1}}}}), ConfigError);
  CHECK_THROWS_AS(bad({{"surprise", {}}}), ConfigError);
  CHECK_THROWS_AS(bad({{"encoder", {{"vocab_size", 10}}}}), ConfigError);
  CHECK_THROWS_AS(bad({{"mention_detector", {{"q", 1.5}}}}), ConfigError);
  CHECK_THROWS_AS(bad({{"training", {{"lr_other", "fast"}}}}), ConfigError);
  CHECK_THROWS_AS(bad({{"experiment", {{"baseline", "x"}, {"configurations", json::array()}}}}),
                  ConfigError);
  CHECK_THROWS_AS(bad({{"experiment",
                        {{"configurations", {{{"name", "a"}}, {{"name", "a"}}}}}}}),
                  ConfigError);
  CHECK_THROWS_AS(bad({{"budget", {{"timing", {{"short", {100.0, 200.0}}}}}}}), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("bundled quick-start configs load") {
  for (const char* name : {"table1.json", "table3.json"}) {
    RunConfig c = load_run_config(kQuickstart / name);
    CHECK(c.experiment.num_seeds == 6);
    CHECK_FALSE(c.experiment.grid.empty());
    Corpus source = load_corpus_ref(c, c.corpus.source_train);
    CHECK_FALSE(source.documents.empty());
    CHECK_FALSE(source.style.singletons_annotated);
    Corpus target = load_corpus_ref(c, c.corpus.target_train);
    CHECK(target.style.singletons_annotated);
  }
}

TEST_CASE("pool order is a seeded permutation") {
  auto a = pool_order(20, 3);
  auto b = pool_order(20, 3);
  CHECK(a == b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == identity(20));
  CHECK(pool_order(20, 4) != a);
}

TEST_CASE("count-mode subsets reveal prefixes of the pool") {
  Corpus pool = pool_of(10, 30);
  GridEntry e;
  e.coref_fraction = 0.3;
  e.mention_fraction = 0.5;
  auto order = pool_order(10, 1);
  Corpus sub = annotated_subset(pool, order, e, default_timing());
  CHECK(sub.documents.size() == 10);
  CHECK(sub.coref_annotations.size() == 3);
  CHECK(sub.mention_annotations.size() == 5);
  for (std::size_t k = 0; k < 3; ++k) CHECK(sub.coref_annotations.contains(sub.documents[k].doc_id));
  for (std::size_t k = 0; k < 5; ++k) CHECK(sub.mention_annotations.contains(sub.documents[k].doc_id));
  CHECK(sub.documents.front().doc_id == pool.documents[order.front()].doc_id);
}

TEST_CASE("time-mode subsets spend the matched budget") {
  Corpus pool = pool_of(20, 40);  // all short: 287.3 s / 186.1 s per document
  GridEntry half;
  half.budget_mode = BudgetMode::kTime;
  half.budget_fraction = 0.5;
  half.coref_share = 1.0;
  Corpus coref = annotated_subset(pool, identity(20), half, default_timing());
  CHECK(coref.coref_annotations.size() == 10);
  CHECK(coref.mention_annotations.size() == 10);

  GridEntry mentions = half;
  mentions.coref_share = 0.0;
  Corpus md = annotated_subset(pool, identity(20), mentions, default_timing());
  CHECK(md.coref_annotations.empty());
  // floor(0.5 * 20 * 287.3 / 186.1) = 15
  CHECK(md.mention_annotations.size() == 15);
}
