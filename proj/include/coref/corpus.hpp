#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace coref {

// Contiguous token range, 0-based and inclusive on both ends.
struct Span {
  int start = 0;
  int end = 0;

  int width() const { return end - start + 1; }
  bool contains(int token) const { return start <= token && token <= end; }

  auto operator<=>(const Span&) const = default;
};

std::string to_string(const Span& span);

struct Document {
  std::string doc_id;
  std::vector<std::string> tokens;
  std::string domain;

  int length() const { return static_cast<int>(tokens.size()); }
};

// Mention-only annotation. Spans are kept sorted and unique.
struct MentionAnnotation {
  std::string doc_id;
  std::vector<Span> mentions;

  bool contains(const Span& span) const;
  bool operator==(const MentionAnnotation&) const = default;
};

// Disjoint mention clusters over one document. Held in canonical order:
// spans sorted within each cluster, clusters sorted by their first span.
class ClusterSet {
 public:
  ClusterSet() = default;
  ClusterSet(std::string doc_id, std::vector<std::vector<Span>> clusters);

  const std::string& doc_id() const { return doc_id_; }
  const std::vector<std::vector<Span>>& clusters() const { return clusters_; }
  std::size_t size() const { return clusters_.size(); }
  bool empty() const { return clusters_.empty(); }

  // Total number of mentions across clusters.
  std::size_t mention_count() const;

  // Index of the cluster holding `span`, if any.
  std::optional<std::size_t> cluster_of(const Span& span) const;

  bool operator==(const ClusterSet&) const = default;

 private:
  std::string doc_id_;
  std::vector<std::vector<Span>> clusters_;
};

struct AnnotationStyle {
  bool singletons_annotated = false;
  std::optional<std::set<std::string>> entity_categories;
};

enum class Split { kTrain, kDev, kTest };

std::string to_string(Split split);
Split parse_split(const std::string& name);

struct Corpus {
  std::vector<Document> documents;
  std::map<std::string, MentionAnnotation> mention_annotations;
  std::map<std::string, ClusterSet> coref_annotations;
  AnnotationStyle style;
  Split split = Split::kTrain;

  const Document* find(const std::string& doc_id) const;
  std::size_t mention_count() const;
};

// Union of all cluster spans.
MentionAnnotation derive_mentions(const ClusterSet& clusters);

// Throws ValidationError naming the document when a span is out of bounds,
// a span repeats, or clusters overlap.
void validate(const Document& doc, const ClusterSet& clusters);
void validate(const Document& doc, const MentionAnnotation& mentions);

// Checks doc-id uniqueness, annotation keys, and each annotation.
void validate(const Corpus& corpus);

// Sets style.singletons_annotated from whether any singleton cluster exists.
void infer_style(Corpus& corpus);

}  // namespace coref
