#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "coref/corpus.hpp"

namespace coref {

// Closed whitespace-token vocabulary with reserved unknown and mask ids.
class Vocabulary {
 public:
  static constexpr int kUnknownId = 0;
  static constexpr int kMaskId = 1;

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);

  // Most frequent types first (ties by spelling), capped so that the total
  // size including the reserved ids is at most `max_size`.
  static Vocabulary build(const std::vector<const Corpus*>& corpora,
                          std::size_t max_size);

  int id(const std::string& token) const;
  const std::string& token(int id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace coref
