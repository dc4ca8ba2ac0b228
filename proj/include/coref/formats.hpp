#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "coref/corpus.hpp"

namespace coref {

// CoNLL-2012 coreference column format. The word is read from column 3 when
// a line has at least 6 columns (the shared-task layout) and from column 0
// otherwise; the coreference column is always the last one. Other columns are
// tolerated and dropped. Mention annotations are derived from the clusters.
Corpus parse_conll(std::istream& in);

// Writes one document per `#begin document` block. Singleton clusters are
// written as ordinary cluster ids.
void serialize_conll(const Corpus& corpus, std::ostream& out);

// Line-delimited standoff records:
//   {"doc_id": ..., "tokens": [...], "mentions": [[s,e],...],
//    "clusters": [[[s,e],...],...], "domain": ..., "provenance": ...}
// `mentions`, `clusters`, `domain` and `provenance` are optional. When only
// clusters are present, mentions are derived from them.
Corpus parse_standoff(std::istream& in);

// `provenance` maps doc_id to a provenance tag (e.g. "silver") written into
// that document's record.
void serialize_standoff(const Corpus& corpus, std::ostream& out,
                        const std::map<std::string, std::string>& provenance =
                            {});

// Dispatches on file extension: .conll / .v4_gold_conll / .gold_conll use the
// CoNLL reader, anything else the standoff reader.
Corpus load_corpus(const std::string& path);
void save_standoff(const Corpus& corpus, const std::string& path);

}  // namespace coref
