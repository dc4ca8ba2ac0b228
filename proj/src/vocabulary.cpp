#include "coref/vocabulary.hpp"

#include <algorithm>
#include <map>

#include "coref/errors.hpp"

namespace coref {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  tokens_ = {"<unk>", "<mask>"};
  for (auto& token : tokens) {
    if (token == "<unk>" || token == "<mask>") continue;
    tokens_.push_back(std::move(token));
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw ValidationError("vocabulary token '" + tokens_[i] + "' repeated");
    }
  }
}

Vocabulary Vocabulary::build(const std::vector<const Corpus*>& corpora,
                             std::size_t max_size) {
  std::map<std::string, std::size_t> counts;
  for (const Corpus* corpus : corpora) {
    if (corpus == nullptr) continue;
    for (const auto& doc : corpus->documents) {
      for (const auto& token : doc.tokens) ++counts[token];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t room = max_size > 2 ? max_size - 2 : 0;
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < ranked.size() && tokens.size() < room; ++i) {
    tokens.push_back(ranked[i].first);
  }
  return Vocabulary(std::move(tokens));
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnknownId : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& token : tokens) ids.push_back(id(token));
  return ids;
}

}  // namespace coref
