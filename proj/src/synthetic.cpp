#include "coref/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "coref/errors.hpp"

namespace coref {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (!in || !in.eof()) {
    throw ConfigError("synthetic spec: bad value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("synthetic spec: bad boolean '" + value + "' for " + key);
}

class Lexicon {
 public:
  Lexicon(const SyntheticSpec& spec, std::mt19937_64& rng)
      : spec_(spec), rng_(rng) {}

  std::string filler() {
    if (is_private()) return spec_.domain + "_w" + pick(spec_.private_vocab);
    return "w" + pick(spec_.shared_vocab);
  }

  std::string modifier() {
    if (is_private()) return spec_.domain + "_m" + pick(spec_.modifier_vocab);
    return "m" + pick(spec_.modifier_vocab);
  }

  // Distinct head words for `count` entities.
  std::vector<std::string> heads(int count) {
    std::vector<std::string> out;
    while (static_cast<int>(out.size()) < count) {
      std::string head = is_private()
                             ? spec_.domain + "_e" + pick(spec_.entity_vocab)
                             : "e" + pick(spec_.entity_vocab);
      if (std::find(out.begin(), out.end(), head) == out.end()) {
        out.push_back(std::move(head));
      }
    }
    return out;
  }

  bool chance(double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p;
  }

  int uniform(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }

 private:
  bool is_private() { return chance(spec_.lexicon_shift); }
  std::string pick(int size) { return std::to_string(uniform(0, size - 1)); }

  const SyntheticSpec& spec_;
  std::mt19937_64& rng_;
};

struct PlannedMention {
  int entity;
  bool with_modifier;
};

}  // namespace

SyntheticSpec parse_synthetic_spec(std::istream& in) {
  SyntheticSpec spec;
  std::map<std::string, std::function<void(const std::string&)>> setters = {
      {"domain", [&](const std::string& v) { spec.domain = v; }},
      {"split", [&](const std::string& v) { spec.split = parse_split(v); }},
      {"num_docs", [&](const std::string& v) { spec.num_docs = parse_number<int>("num_docs", v); }},
      {"min_tokens", [&](const std::string& v) { spec.min_tokens = parse_number<int>("min_tokens", v); }},
      {"max_tokens", [&](const std::string& v) { spec.max_tokens = parse_number<int>("max_tokens", v); }},
      {"min_entities", [&](const std::string& v) { spec.min_entities = parse_number<int>("min_entities", v); }},
      {"max_entities", [&](const std::string& v) { spec.max_entities = parse_number<int>("max_entities", v); }},
      {"min_mentions", [&](const std::string& v) { spec.min_mentions = parse_number<int>("min_mentions", v); }},
      {"max_mentions", [&](const std::string& v) { spec.max_mentions = parse_number<int>("max_mentions", v); }},
      {"singleton_rate", [&](const std::string& v) { spec.singleton_rate = parse_number<double>("singleton_rate", v); }},
      {"annotate_singletons", [&](const std::string& v) { spec.annotate_singletons = parse_bool("annotate_singletons", v); }},
      {"shared_vocab", [&](const std::string& v) { spec.shared_vocab = parse_number<int>("shared_vocab", v); }},
      {"private_vocab", [&](const std::string& v) { spec.private_vocab = parse_number<int>("private_vocab", v); }},
      {"entity_vocab", [&](const std::string& v) { spec.entity_vocab = parse_number<int>("entity_vocab", v); }},
      {"modifier_vocab", [&](const std::string& v) { spec.modifier_vocab = parse_number<int>("modifier_vocab", v); }},
      {"modifier_prob", [&](const std::string& v) { spec.modifier_prob = parse_number<double>("modifier_prob", v); }},
      {"lexicon_shift", [&](const std::string& v) { spec.lexicon_shift = parse_number<double>("lexicon_shift", v); }},
      {"seed", [&](const std::string& v) { spec.seed = parse_number<std::uint64_t>("seed", v); }},
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("synthetic spec line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto setter = setters.find(key);
    if (setter == setters.end()) {
      throw ConfigError("synthetic spec line " + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
    }
    setter->second(value);
  }
  check_feasible(spec);
  return spec;
}

SyntheticSpec load_synthetic_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synthetic spec '" + path + "'");
  return parse_synthetic_spec(in);
}

std::string format_synthetic_spec(const SyntheticSpec& spec) {
  std::ostringstream out;
  out << "domain = " << spec.domain << "\n"
      << "split = " << to_string(spec.split) << "\n"
      << "num_docs = " << spec.num_docs << "\n"
      << "min_tokens = " << spec.min_tokens << "\n"
      << "max_tokens = " << spec.max_tokens << "\n"
      << "min_entities = " << spec.min_entities << "\n"
      << "max_entities = " << spec.max_entities << "\n"
      << "min_mentions = " << spec.min_mentions << "\n"
      << "max_mentions = " << spec.max_mentions << "\n"
      << "singleton_rate = " << spec.singleton_rate << "\n"
      << "annotate_singletons = " << (spec.annotate_singletons ? "true" : "false") << "\n"
      << "shared_vocab = " << spec.shared_vocab << "\n"
      << "private_vocab = " << spec.private_vocab << "\n"
      << "entity_vocab = " << spec.entity_vocab << "\n"
      << "modifier_vocab = " << spec.modifier_vocab << "\n"
      << "modifier_prob = " << spec.modifier_prob << "\n"
      << "lexicon_shift = " << spec.lexicon_shift << "\n"
      << "seed = " << spec.seed << "\n";
  return out.str();
}

void check_feasible(const SyntheticSpec& spec) {
  auto fail = [](const std::string& why) {
    throw ConfigError("infeasible synthetic spec: " + why);
  };
  if (spec.domain.empty()) fail("domain must be nonempty");
  if (spec.num_docs < 0) fail("num_docs must be nonnegative");
  if (spec.min_tokens < 1 || spec.max_tokens < spec.min_tokens) {
    fail("need 1 <= min_tokens <= max_tokens");
  }
  if (spec.min_entities < 0 || spec.max_entities < spec.min_entities) {
    fail("need 0 <= min_entities <= max_entities");
  }
  if (spec.min_mentions < 2 || spec.max_mentions < spec.min_mentions) {
    fail("need 2 <= min_mentions <= max_mentions");
  }
  if (spec.singleton_rate < 0.0 || spec.singleton_rate > 1.0) {
    fail("singleton_rate must lie in [0,1]");
  }
  if (spec.lexicon_shift < 0.0 || spec.lexicon_shift > 1.0) {
    fail("lexicon_shift must lie in [0,1]");
  }
  if (spec.modifier_prob < 0.0 || spec.modifier_prob > 1.0) {
    fail("modifier_prob must lie in [0,1]");
  }
  if (spec.shared_vocab < 1 || spec.private_vocab < 1 ||
      spec.modifier_vocab < 1) {
    fail("vocabulary sizes must be positive");
  }
  if (spec.entity_vocab < spec.max_entities) {
    fail("entity_vocab must cover max_entities distinct heads");
  }
  // The smallest document has min_entities entities; in the worst case none
  // of them is a singleton.
  const long needed =
      static_cast<long>(spec.min_entities) * spec.min_mentions;
  const long singleton_floor = static_cast<long>(spec.min_entities);
  if ((spec.singleton_rate < 1.0 ? needed : singleton_floor) >
      spec.max_tokens) {
    fail("min_entities x min_mentions exceeds max_tokens");
  }
}

Corpus generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed) {
  check_feasible(spec);
  std::mt19937_64 rng(seed);
  Lexicon lexicon(spec, rng);
  Corpus corpus;
  corpus.split = spec.split;
  corpus.style.singletons_annotated = spec.annotate_singletons;

  long entities_so_far = 0;
  long singletons_so_far = 0;
  for (int d = 0; d < spec.num_docs; ++d) {
    const int entity_count = lexicon.uniform(spec.min_entities, spec.max_entities);
    // Error diffusion keeps the pooled singleton fraction within one entity
    // of the declared rate.
    const long target = std::lround(spec.singleton_rate *
                                    static_cast<double>(entities_so_far + entity_count));
    const int singles = static_cast<int>(
        std::clamp<long>(target - singletons_so_far, 0, entity_count));
    entities_so_far += entity_count;
    singletons_so_far += singles;

    std::vector<int> mention_counts(entity_count);
    for (int e = 0; e < entity_count; ++e) {
      mention_counts[e] =
          e < singles ? 1 : lexicon.uniform(spec.min_mentions, spec.max_mentions);
    }
    std::vector<PlannedMention> plan;
    for (int e = 0; e < entity_count; ++e) {
      for (int m = 0; m < mention_counts[e]; ++m) {
        plan.push_back({e, lexicon.chance(spec.modifier_prob)});
      }
    }
    std::shuffle(plan.begin(), plan.end(), rng);
    const std::vector<std::string> heads = lexicon.heads(entity_count);

    int mention_tokens = 0;
    for (const auto& m : plan) mention_tokens += m.with_modifier ? 2 : 1;
    const int separators = plan.empty() ? 0 : static_cast<int>(plan.size()) - 1;
    int length = lexicon.uniform(spec.min_tokens, spec.max_tokens);
    length = std::max(length, mention_tokens + separators);
    if (length < 1) length = 1;

    // Filler gap sizes: one mandatory filler between adjacent mentions, the
    // remainder scattered uniformly over all gaps.
    std::vector<int> gaps(plan.size() + 1, 0);
    for (std::size_t g = 1; g + 1 < gaps.size(); ++g) gaps[g] = 1;
    int spare = length - mention_tokens - separators;
    for (int s = 0; s < spare; ++s) {
      gaps[lexicon.uniform(0, static_cast<int>(gaps.size()) - 1)] += 1;
    }

    Document doc;
    char id[64];
    std::snprintf(id, sizeof(id), "_%s_%04d", to_string(spec.split).c_str(), d);
    doc.doc_id = spec.domain + id;
    doc.domain = spec.domain;
    std::vector<std::vector<Span>> clusters(entity_count);
    for (std::size_t i = 0; i <= plan.size(); ++i) {
      for (int g = 0; g < gaps[i]; ++g) doc.tokens.push_back(lexicon.filler());
      if (i == plan.size()) break;
      const int start = doc.length();
      if (plan[i].with_modifier) doc.tokens.push_back(lexicon.modifier());
      doc.tokens.push_back(heads[plan[i].entity]);
      clusters[plan[i].entity].push_back({start, doc.length() - 1});
    }

    std::vector<std::vector<Span>> gold;
    for (auto& cluster : clusters) {
      if (cluster.size() == 1 && !spec.annotate_singletons) continue;
      gold.push_back(std::move(cluster));
    }
    ClusterSet set(doc.doc_id, std::move(gold));
    corpus.mention_annotations[doc.doc_id] = derive_mentions(set);
    corpus.coref_annotations[doc.doc_id] = std::move(set);
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

}  // namespace coref
