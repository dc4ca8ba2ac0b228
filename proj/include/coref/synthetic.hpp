#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "coref/corpus.hpp"

namespace coref {

// Parameters of a generated corpus. Every document is a sequence of filler
// words with entity mentions embedded in it; a mention is an optional
// modifier followed by the entity's head word, so all mentions of one entity
// share a head lexeme. With probability `lexicon_shift` each drawn word comes
// from a lexicon private to `domain` instead of the shared one, which makes
// the token-level out-of-vocabulary rate of this domain against any other
// domain approximately `lexicon_shift`.
struct SyntheticSpec {
  std::string domain = "synthetic";
  Split split = Split::kTrain;
  int num_docs = 100;
  int min_tokens = 40;
  int max_tokens = 80;
  int min_entities = 3;
  int max_entities = 6;
  int min_mentions = 2;  // per non-singleton entity
  int max_mentions = 4;
  double singleton_rate = 0.0;  // fraction of entities with one mention
  bool annotate_singletons = true;
  int shared_vocab = 300;
  int private_vocab = 300;
  int entity_vocab = 200;
  int modifier_vocab = 30;
  double modifier_prob = 0.4;
  double lexicon_shift = 0.0;
  // Only consulted when a spec file is referenced without an explicit seed.
  std::uint64_t seed = 0;
};

// Flat `key = value` lines; `#` starts a comment. Unknown keys are rejected.
SyntheticSpec parse_synthetic_spec(std::istream& in);
SyntheticSpec load_synthetic_spec(const std::string& path);
std::string format_synthetic_spec(const SyntheticSpec& spec);

// Throws ConfigError when the synthetic spec cannot be realized.
void check_feasible(const SyntheticSpec& spec);

// Pure function of (spec, seed).
Corpus generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace coref
