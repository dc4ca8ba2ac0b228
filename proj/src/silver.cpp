#include "coref/errors.hpp"
#include "coref/mention_detector.hpp"
#include "coref/model.hpp"

namespace coref {

std::map<std::string, MentionAnnotation> tag_silver(const Corpus& unlabeled,
                                                    const CorefModel& detector,
                                                    double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("q must lie in [0,1]");
  std::map<std::string, MentionAnnotation> out;
  for (const auto& doc : unlabeled.documents) {
    DetectorOutput detected = detector.detect(doc, 0.0);
    // q = 0 keeps the c2f set as is.
    const PrunedCandidates kept = high_precision_prune(detected.pruned, detected.scores, q);
    MentionAnnotation silver{doc.doc_id, {}};
    for (std::size_t k : kept.kept) silver.mentions.push_back(detected.candidates.spans[k]);
    out.emplace(doc.doc_id, std::move(silver));
  }
  return out;
}

}  // namespace coref
