#include "coref/corpus.hpp"

#include <algorithm>
#include <unordered_set>

#include "coref/errors.hpp"

namespace coref {

std::string to_string(const Span& span) {
  return "[" + std::to_string(span.start) + "," + std::to_string(span.end) +
         "]";
}

bool MentionAnnotation::contains(const Span& span) const {
  return std::binary_search(mentions.begin(), mentions.end(), span);
}

ClusterSet::ClusterSet(std::string doc_id,
                       std::vector<std::vector<Span>> clusters)
    : doc_id_(std::move(doc_id)) {
  for (auto& cluster : clusters) {
    if (cluster.empty()) continue;
    std::sort(cluster.begin(), cluster.end());
    clusters_.push_back(std::move(cluster));
  }
  std::sort(clusters_.begin(), clusters_.end());
}

std::size_t ClusterSet::mention_count() const {
  std::size_t total = 0;
  for (const auto& cluster : clusters_) total += cluster.size();
  return total;
}

std::optional<std::size_t> ClusterSet::cluster_of(const Span& span) const {
  for (std::size_t i = 0; i < clusters_.size(); ++i) {
    if (std::binary_search(clusters_[i].begin(), clusters_[i].end(), span)) {
      return i;
    }
  }
  return std::nullopt;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + name + "'");
}

const Document* Corpus::find(const std::string& doc_id) const {
  for (const auto& doc : documents) {
    if (doc.doc_id == doc_id) return &doc;
  }
  return nullptr;
}

std::size_t Corpus::mention_count() const {
  std::size_t total = 0;
  for (const auto& [id, mentions] : mention_annotations) {
    total += mentions.mentions.size();
  }
  return total;
}

MentionAnnotation derive_mentions(const ClusterSet& clusters) {
  MentionAnnotation out;
  out.doc_id = clusters.doc_id();
  for (const auto& cluster : clusters.clusters()) {
    out.mentions.insert(out.mentions.end(), cluster.begin(), cluster.end());
  }
  std::sort(out.mentions.begin(), out.mentions.end());
  return out;
}

namespace {

void check_bounds(const Document& doc, const Span& span) {
  if (span.start < 0 || span.end < span.start || span.end >= doc.length()) {
    throw ValidationError("document '" + doc.doc_id + "': span " +
                          to_string(span) + " out of bounds for " +
                          std::to_string(doc.length()) + " tokens");
  }
}

}  // namespace

void validate(const Document& doc, const ClusterSet& clusters) {
  std::set<Span> seen;
  for (const auto& cluster : clusters.clusters()) {
    for (const auto& span : cluster) {
      check_bounds(doc, span);
      if (!seen.insert(span).second) {
        throw ValidationError("document '" + doc.doc_id + "': span " +
                              to_string(span) +
                              " appears more than once across clusters");
      }
    }
  }
}

void validate(const Document& doc, const MentionAnnotation& mentions) {
  for (std::size_t i = 0; i < mentions.mentions.size(); ++i) {
    check_bounds(doc, mentions.mentions[i]);
    if (i > 0 && !(mentions.mentions[i - 1] < mentions.mentions[i])) {
      throw ValidationError("document '" + doc.doc_id + "': mention " +
                            to_string(mentions.mentions[i]) +
                            " duplicated or out of order");
    }
  }
}

void validate(const Corpus& corpus) {
  std::unordered_set<std::string> ids;
  for (const auto& doc : corpus.documents) {
    if (doc.tokens.empty()) {
      throw ValidationError("document '" + doc.doc_id + "' has no tokens");
    }
    if (!ids.insert(doc.doc_id).second) {
      throw ValidationError("duplicate doc_id '" + doc.doc_id + "'");
    }
  }
  for (const auto& [id, mentions] : corpus.mention_annotations) {
    const Document* doc = corpus.find(id);
    if (doc == nullptr) {
      throw ValidationError("mention annotation for unknown document '" + id +
                            "'");
    }
    validate(*doc, mentions);
  }
  for (const auto& [id, clusters] : corpus.coref_annotations) {
    const Document* doc = corpus.find(id);
    if (doc == nullptr) {
      throw ValidationError("cluster annotation for unknown document '" + id +
                            "'");
    }
    validate(*doc, clusters);
  }
}

void infer_style(Corpus& corpus) {
  corpus.style.singletons_annotated = false;
  for (const auto& [id, clusters] : corpus.coref_annotations) {
    for (const auto& cluster : clusters.clusters()) {
      if (cluster.size() == 1) {
        corpus.style.singletons_annotated = true;
        return;
      }
    }
  }
}

}  // namespace coref
