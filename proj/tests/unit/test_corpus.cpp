#include <doctest.h>

#include <sstream>

#include "coref/corpus.hpp"
#include "coref/errors.hpp"
#include "coref/formats.hpp"
#include "coref/metrics.hpp"
#include "coref/synthetic.hpp"
#include "coref/vocabulary.hpp"

using namespace coref;

namespace {

const char* kConll =
    "#begin document (nw/wsj/00/0001); part 000\n"
    "nw/wsj/00/0001 0 0 Pierre NNP * - - - - * (0\n"
    "nw/wsj/00/0001 0 1 Vinken NNP * - - - - * 0)\n"
    "nw/wsj/00/0001 0 2 said VBD * - - - - * -\n"
    "nw/wsj/00/0001 0 3 he PRP * - - - - * (0)\n"
    "nw/wsj/00/0001 0 4 saw VBD * - - - - * -\n"
    "nw/wsj/00/0001 0 5 his PRP$ * - - - - * (1|(0)\n"
    "nw/wsj/00/0001 0 6 dog NN * - - - - * 1)\n"
    "\n"
    "#end document\n";

std::string round_trip_conll(const Corpus& corpus) {
  std::ostringstream out;
  serialize_conll(corpus, out);
  return out.str();
}

std::string round_trip_standoff(const Corpus& corpus) {
  std::ostringstream out;
  serialize_standoff(corpus, out);
  return out.str();
}

std::size_t format_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_conll(in);
  } catch (const FormatError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("conll reader recovers nested and single-token mentions") {
  std::istringstream in(kConll);
  Corpus corpus = parse_conll(in);
  REQUIRE(corpus.documents.size() == 1);
  const Document& doc = corpus.documents[0];
  CHECK(doc.doc_id == "nw/wsj/00/0001_000");
  CHECK(doc.domain == "nw");
  CHECK(doc.tokens[0] == "Pierre");
  CHECK(doc.length() == 7);
  const ClusterSet& clusters = corpus.coref_annotations.at(doc.doc_id);
  ClusterSet expected(doc.doc_id, {{{0, 1}, {3, 3}, {5, 5}}, {{5, 6}}});
  CHECK(clusters == expected);
  CHECK(corpus.mention_annotations.at(doc.doc_id).mentions.size() == 4);
  CHECK(corpus.style.singletons_annotated);
}

TEST_CASE("conll two-column form reads word and last column") {
  std::istringstream in("a (3\nb 3)\nc -\nd (3)\n");
  Corpus corpus = parse_conll(in);
  REQUIRE(corpus.documents.size() == 1);
  CHECK(corpus.documents[0].tokens == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(corpus.coref_annotations.begin()->second.clusters() ==
        Clusters{{{0, 1}, {3, 3}}});
  CHECK_FALSE(corpus.style.singletons_annotated);
}

TEST_CASE("conll serialization is a fixed point") {
  std::istringstream in(kConll);
  Corpus corpus = parse_conll(in);
  const std::string once = round_trip_conll(corpus);
  std::istringstream again(once);
  Corpus reparsed = parse_conll(again);
  CHECK(reparsed.coref_annotations == corpus.coref_annotations);
  CHECK(round_trip_conll(reparsed) == once);
  CHECK(once.find("#begin document (nw/wsj/00/0001); part 000") != std::string::npos);
}

TEST_CASE("conll errors carry the offending line") {
  CHECK(format_error_line("#begin document (x)\na (0\nb -\n#end document\n") == 4);
  CHECK(format_error_line("a 0)\n") == 1);
  CHECK(format_error_line("a -\nb (x)\n") == 2);
  CHECK(format_error_line("#end document\n") == 1);
  CHECK(format_error_line("#begin document (x)\na -\n#begin document (y)\n") == 3);
  CHECK(format_error_line("#begin document x\n") == 1);
  // The same span listed twice in one cluster violates the data model.
  CHECK(format_error_line("#begin document (x)\na (0)|(0)\n#end document\n") == 3);
}

TEST_CASE("standoff round trip with derived mentions") {
  const std::string text =
      R"({"doc_id":"d1","tokens":["the","cat","sat","it","purred"],"clusters":[[[0,1],[3,3]]]})"
      "\n"
      R"({"doc_id":"d2","tokens":["x","y"],"mentions":[[0,0]]})"
      "\n";
  std::istringstream in(text);
  Corpus corpus = parse_standoff(in);
  REQUIRE(corpus.documents.size() == 2);
  CHECK(corpus.mention_annotations.at("d1").mentions == std::vector<Span>{{0, 1}, {3, 3}});
  CHECK(corpus.mention_annotations.at("d2").mentions == std::vector<Span>{{0, 0}});
  CHECK_FALSE(corpus.coref_annotations.contains("d2"));
  const std::string once = round_trip_standoff(corpus);
  std::istringstream again(once);
  Corpus reparsed = parse_standoff(again);
  CHECK(round_trip_standoff(reparsed) == once);
  CHECK(reparsed.coref_annotations == corpus.coref_annotations);
  CHECK(reparsed.mention_annotations == corpus.mention_annotations);
}

TEST_CASE("standoff rejects malformed records with line numbers") {
  std::istringstream bad_json("{\"doc_id\":\"a\",\"tokens\":[\"x\"]}\n{oops\n");
  try {
    parse_standoff(bad_json);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream bad_span(R"({"doc_id":"a","tokens":["x"],"mentions":[[0]]})");
  CHECK_THROWS_AS(parse_standoff(bad_span), FormatError);
  std::istringstream duplicate(
      "{\"doc_id\":\"a\",\"tokens\":[\"x\"]}\n{\"doc_id\":\"a\",\"tokens\":[\"y\"]}\n");
  CHECK_THROWS_AS(parse_standoff(duplicate), ValidationError);
}

TEST_CASE("validation catches bounds, repeats and overlaps") {
  Document doc{"d", {"a", "b", "c"}, ""};
  CHECK_NOTHROW(validate(doc, ClusterSet("d", {{{0, 0}, {2, 2}}})));
  CHECK_THROWS_AS(validate(doc, ClusterSet("d", {{{0, 3}}})), ValidationError);
  CHECK_THROWS_AS(validate(doc, ClusterSet("d", {{{2, 1}}})), ValidationError);
  CHECK_THROWS_AS(validate(doc, ClusterSet("d", {{{0, 0}}, {{0, 0}}})), ValidationError);
  CHECK_THROWS_AS(validate(doc, MentionAnnotation{"d", {{1, 5}}}), ValidationError);
  Corpus corpus;
  corpus.documents = {doc};
  corpus.coref_annotations["missing"] = ClusterSet("missing", {});
  CHECK_THROWS_AS(validate(corpus), ValidationError);
}

TEST_CASE("cluster sets are canonical") {
  ClusterSet a("d", {{{5, 5}, {1, 1}}, {}, {{0, 0}}});
  ClusterSet b("d", {{{0, 0}}, {{1, 1}, {5, 5}}});
  CHECK(a == b);
  CHECK(a.size() == 2);
  CHECK(a.mention_count() == 3);
  CHECK(a.cluster_of({5, 5}) == 1u);
  CHECK_FALSE(a.cluster_of({2, 2}).has_value());
}

TEST_CASE("synthetic corpora are a pure function of spec and seed") {
  SyntheticSpec spec;
  spec.num_docs = 8;
  spec.singleton_rate = 0.3;
  Corpus a = generate_synthetic_corpus(spec, 9);
  Corpus b = generate_synthetic_corpus(spec, 9);
  Corpus c = generate_synthetic_corpus(spec, 10);
  CHECK(round_trip_standoff(a) == round_trip_standoff(b));
  CHECK(round_trip_standoff(a) != round_trip_standoff(c));
  CHECK_NOTHROW(validate(a));
  for (const auto& doc : a.documents) {
    CHECK(doc.length() >= spec.min_tokens);
    CHECK(doc.length() <= spec.max_tokens);
  }
}

TEST_CASE("synthetic singleton annotation follows the generator settings") {
  SyntheticSpec spec;
  spec.num_docs = 20;
  spec.singleton_rate = 0.5;
  spec.annotate_singletons = false;
  Corpus without = generate_synthetic_corpus(spec, 1);
  for (const auto& [id, clusters] : without.coref_annotations) {
    for (const auto& cluster : clusters.clusters()) CHECK(cluster.size() >= 2);
  }
  CHECK_FALSE(without.style.singletons_annotated);
  spec.annotate_singletons = true;
  Corpus with = generate_synthetic_corpus(spec, 1);
  CHECK(with.style.singletons_annotated);
}

TEST_CASE("lexicon shift controls the out-of-vocabulary rate") {
  SyntheticSpec source;
  source.domain = "a";
  source.num_docs = 60;
  SyntheticSpec target = source;
  target.domain = "b";
  target.lexicon_shift = 0.6;
  Corpus s = generate_synthetic_corpus(source, 1);
  Corpus t = generate_synthetic_corpus(target, 2);
  Vocabulary vocab = Vocabulary::build({&s}, 1000000);
  std::size_t tokens = 0;
  std::size_t unknown = 0;
  for (const auto& doc : t.documents) {
    for (int id : vocab.encode(doc.tokens)) {
      ++tokens;
      unknown += id == Vocabulary::kUnknownId ? 1 : 0;
    }
  }
  const double rate = static_cast<double>(unknown) / static_cast<double>(tokens);
  CHECK(rate == doctest::Approx(0.6).epsilon(0.1));
}

TEST_CASE("synthetic spec parsing") {
  std::istringstream in(
      "# comment\ndomain = clinic\nnum_docs = 5\nlexicon_shift = 0.25\n"
      "annotate_singletons = false\nsplit = dev\nseed = 7\n");
  SyntheticSpec spec = parse_synthetic_spec(in);
  CHECK(spec.domain == "clinic");
  CHECK(spec.num_docs == 5);
  CHECK(spec.lexicon_shift == 0.25);
  CHECK_FALSE(spec.annotate_singletons);
  CHECK(spec.split == Split::kDev);
  CHECK(spec.seed == 7u);
  std::istringstream again(format_synthetic_spec(spec));
  CHECK(format_synthetic_spec(parse_synthetic_spec(again)) == format_synthetic_spec(spec));

  std::istringstream unknown("colour = red\n");
  CHECK_THROWS_AS(parse_synthetic_spec(unknown), ConfigError);
  std::istringstream bad_value("num_docs = many\n");
  CHECK_THROWS_AS(parse_synthetic_spec(bad_value), ConfigError);
  SyntheticSpec infeasible;
  infeasible.min_tokens = 50;
  infeasible.max_tokens = 10;
  CHECK_THROWS_AS(check_feasible(infeasible), ConfigError);
}

TEST_CASE("vocabulary reserves unknown and mask ids") {
  Corpus corpus;
  corpus.documents = {{"d", {"b", "a", "b", "c"}, ""}};
  Vocabulary vocab = Vocabulary::build({&corpus}, 4);
  CHECK(vocab.size() == 4);
  CHECK(vocab.id("b") == 2);  // most frequent first
  CHECK(vocab.id("a") == 3);  // then by spelling
  CHECK(vocab.id("c") == Vocabulary::kUnknownId);
  CHECK(vocab.encode({"a", "zzz"}) == std::vector<int>{3, 0});
}
