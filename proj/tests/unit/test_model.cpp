#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "../support/fixtures.hpp"
#include "coref/errors.hpp"
#include "coref/hashing.hpp"
#include "coref/model.hpp"

using namespace coref;
using coref::testing::check_gradients;
using coref::testing::tiny_problem;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("coref_unit_" + name);
}

bool same_weights(const ModelWeights& a, const ModelWeights& b) {
  std::vector<Matrix> left;
  ModelWeights::visit(a, [&](const std::string&, const Matrix& m) { left.push_back(m); });
  std::size_t k = 0;
  bool same = true;
  ModelWeights::visit(b, [&](const std::string&, const Matrix& m) {
    const Matrix& l = left[k++];
    same = same && l.rows() == m.rows() && l.cols() == m.cols() && l == m;
  });
  return same && k == left.size();
}

}  // namespace

TEST_CASE("analytic gradients match central differences") {
  auto p = tiny_problem();
  const MentionAnnotation mentions = derive_mentions(p.gold());
  const MaskingPlan plan = make_masking_plan(p.model.vocab().encode(p.doc().tokens), 0.15, 3);
  REQUIRE(p.model.detect(p.doc(), 0.0).kept_spans.size() <= 10);
  SUBCASE("coreference") {
    LossTargets t;
    t.clusters = &p.gold();
    auto r = check_gradients(p.model, p.doc(), t);
    CHECK(r.analytic_norm > 0.0);
    CHECK_MESSAGE(r.worst_relative_error < 1e-4, r.worst_entry);
  }
  SUBCASE("mention detection") {
    LossTargets t;
    t.mentions = &mentions;
    auto r = check_gradients(p.model, p.doc(), t);
    CHECK(r.analytic_norm > 0.0);
    CHECK_MESSAGE(r.worst_relative_error < 1e-4, r.worst_entry);
  }
  SUBCASE("masked language model") {
    LossTargets t;
    t.mlm = &plan;
    auto r = check_gradients(p.model, p.doc(), t);
    CHECK(r.analytic_norm > 0.0);
    CHECK_MESSAGE(r.worst_relative_error < 1e-4, r.worst_entry);
  }
  SUBCASE("all three together") {
    LossTargets t{&p.gold(), &mentions, &plan};
    auto r = check_gradients(p.model, p.doc(), t);
    CHECK_MESSAGE(r.worst_relative_error < 1e-4, r.worst_entry);
  }
}

TEST_CASE("combined loss is the sum of its parts") {
  auto p = tiny_problem(8);
  const MentionAnnotation mentions = derive_mentions(p.gold());
  const MaskingPlan plan = make_masking_plan(p.model.vocab().encode(p.doc().tokens), 0.15, 1);
  LossBreakdown all = p.model.loss(p.doc(), {&p.gold(), &mentions, &plan}, nullptr);
  LossBreakdown cl = p.model.loss(p.doc(), {&p.gold(), nullptr, nullptr}, nullptr);
  LossBreakdown md = p.model.loss(p.doc(), {nullptr, &mentions, nullptr}, nullptr);
  LossBreakdown mlm = p.model.loss(p.doc(), {nullptr, nullptr, &plan}, nullptr);
  CHECK(all.cl == doctest::Approx(cl.cl));
  CHECK(all.md == doctest::Approx(md.md));
  CHECK(all.mlm == doctest::Approx(mlm.mlm));
  CHECK(all.total() == doctest::Approx(cl.total() + md.total() + mlm.total()));
  CHECK(p.model.loss(p.doc(), {}, nullptr).total() == 0.0);
}

TEST_CASE("detector keeps ceil(lambda T) spans and q narrows them") {
  auto p = tiny_problem();
  const int t = p.doc().length();
  DetectorOutput d = p.model.detect(p.doc(), 0.0);
  CHECK(d.kept_spans.size() ==
        static_cast<std::size_t>(std::ceil(p.model.config().detector.lambda_keep * t)));
  DetectorOutput strict = p.model.detect(p.doc(), 0.5);
  CHECK(strict.kept_spans.size() <= d.kept_spans.size());
  for (const auto& s : strict.kept_spans) {
    CHECK(std::find(d.kept_spans.begin(), d.kept_spans.end(), s) != d.kept_spans.end());
  }
}

TEST_CASE("singleton emission follows q unless overridden") {
  LinkerConfig c;
  CHECK_FALSE(c.emits_singletons(0.0));
  CHECK(c.emits_singletons(0.5));
  c.emit_singletons = SingletonMode::kOff;
  CHECK_FALSE(c.emits_singletons(0.5));
  c.emit_singletons = SingletonMode::kOn;
  CHECK(c.emits_singletons(0.0));
  CHECK(parse_singleton_mode("true") == SingletonMode::kOn);
  CHECK(parse_singleton_mode("off") == SingletonMode::kOff);
  CHECK_THROWS(parse_singleton_mode("maybe"));
}

TEST_CASE("prediction output is a valid cluster set over kept spans") {
  auto p = tiny_problem();
  p.model.mutable_config().detector.q = 0.3;
  Prediction pred = p.model.predict(p.doc());
  CHECK_NOTHROW(validate(p.doc(), pred.clusters));
  for (const auto& c : pred.clusters.clusters()) {
    for (const auto& s : c) {
      CHECK(std::find(pred.kept_spans.begin(), pred.kept_spans.end(), s) != pred.kept_spans.end());
    }
  }
  CHECK(p.model.predict(p.doc()).clusters == pred.clusters);
}

TEST_CASE("model config json round trip rejects unknown keys") {
  ModelConfig c;
  c.encoder.vocab_size = 50;
  c.detector.q = 0.25;
  c.linker.emit_singletons = SingletonMode::kOff;
  nlohmann::json j = to_json(c);
  ModelConfig back = model_config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(config_hash(back) == config_hash(c));
  c.detector.q = 0.3;
  CHECK(config_hash(back) != config_hash(c));
  j["mention_detector"]["threshold"] = 1;
  CHECK_THROWS_AS(model_config_from_json(j), ConfigError);
  nlohmann::json bad = to_json(back);
  bad["mention_detector"]["q"] = 2.0;
  CHECK_THROWS_AS(model_config_from_json(bad), ConfigError);
}

TEST_CASE("tensor names map to components") {
  CHECK(component_of("encoder.embedding") == Component::kEncoder);
  CHECK(component_of("mention.output") == Component::kMentionDetector);
  CHECK(component_of("linker.coarse") == Component::kAntecedentLinker);
  CHECK_THROWS_AS(component_of("other.x"), ValidationError);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  auto p = tiny_problem();
  const auto path = temp_path("roundtrip.ckpt");
  save_checkpoint(p.model, path);
  CorefModel loaded = load_checkpoint(path);
  CHECK(same_weights(loaded.weights(), p.model.weights()));
  CHECK(loaded.vocab().tokens() == p.model.vocab().tokens());
  CHECK(config_hash(loaded.config()) == config_hash(p.model.config()));
  CHECK(loaded.predict(p.doc()).clusters == p.model.predict(p.doc()).clusters);
  const auto again = temp_path("roundtrip2.ckpt");
  save_checkpoint(loaded, again);
  CHECK(git_blob_sha1_file(path) == git_blob_sha1_file(again));
  std::filesystem::remove(again);

  // Truncation and a foreign file are both rejected.
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 8);
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "NOTACKPTxxxxxxxxxxxx";
  }
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("hashes") {
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  // git hash-object of "hello" without a trailing newline.
  CHECK(git_blob_sha1("hello") == "b6fc4c620b67d95f953a5c1c1230aaab5db5a1b0");
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}
