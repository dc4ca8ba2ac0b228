#include "coref/formats.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coref/errors.hpp"

namespace coref {

namespace {

using json = nlohmann::json;

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream stream(line);
  std::string field;
  while (stream >> field) fields.push_back(field);
  return fields;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

struct OpenMention {
  int start;
  std::size_t line;
};

// Accumulates one CoNLL document while its lines are read.
class ConllDocumentBuilder {
 public:
  ConllDocumentBuilder(std::string doc_id, std::size_t begin_line)
      : begin_line_(begin_line) {
    doc_.doc_id = std::move(doc_id);
    auto slash = doc_.doc_id.find('/');
    if (slash != std::string::npos) doc_.domain = doc_.doc_id.substr(0, slash);
  }

  void add_token(const std::string& word, const std::string& cell,
                 std::size_t line) {
    const int index = doc_.length();
    doc_.tokens.push_back(word);
    if (cell == "-" || cell == "_") return;
    std::size_t pos = 0;
    while (pos <= cell.size()) {
      std::size_t bar = cell.find('|', pos);
      if (bar == std::string::npos) bar = cell.size();
      apply_entry(cell.substr(pos, bar - pos), index, line);
      pos = bar + 1;
    }
  }

  void finish(Corpus& corpus, std::size_t line) {
    for (const auto& [id, stack] : open_) {
      if (!stack.empty()) {
        throw FormatError(line, "cluster " + std::to_string(id) +
                                    " opened at line " +
                                    std::to_string(stack.back().line) +
                                    " is never closed in document '" +
                                    doc_.doc_id + "'");
      }
    }
    if (doc_.tokens.empty()) {
      throw FormatError(line, "document '" + doc_.doc_id + "' has no tokens");
    }
    std::vector<std::vector<Span>> clusters;
    for (auto& [id, spans] : spans_) clusters.push_back(std::move(spans));
    ClusterSet set(doc_.doc_id, std::move(clusters));
    try {
      validate(doc_, set);
    } catch (const ValidationError& e) {
      throw FormatError(line, e.what());
    }
    if (corpus.find(doc_.doc_id) != nullptr) {
      throw FormatError(begin_line_,
                        "duplicate document '" + doc_.doc_id + "'");
    }
    corpus.mention_annotations[doc_.doc_id] = derive_mentions(set);
    corpus.coref_annotations[doc_.doc_id] = std::move(set);
    corpus.documents.push_back(std::move(doc_));
  }

 private:
  static int parse_id(const std::string& text, std::size_t line) {
    if (text.empty() ||
        !std::all_of(text.begin(), text.end(),
                     [](unsigned char c) { return std::isdigit(c); })) {
      throw FormatError(line, "bad cluster id '" + text + "'");
    }
    return std::stoi(text);
  }

  void apply_entry(const std::string& entry, int index, std::size_t line) {
    if (entry.empty()) throw FormatError(line, "empty coreference entry");
    const bool opens = entry.front() == '(';
    const bool closes = entry.back() == ')';
    if (opens && closes) {
      if (entry.size() < 3) throw FormatError(line, "bad entry '" + entry + "'");
      int id = parse_id(entry.substr(1, entry.size() - 2), line);
      spans_[id].push_back({index, index});
    } else if (opens) {
      int id = parse_id(entry.substr(1), line);
      open_[id].push_back({index, line});
    } else if (closes) {
      int id = parse_id(entry.substr(0, entry.size() - 1), line);
      auto it = open_.find(id);
      if (it == open_.end() || it->second.empty()) {
        throw FormatError(line, "cluster " + std::to_string(id) +
                                    " closed without a matching open");
      }
      spans_[id].push_back({it->second.back().start, index});
      it->second.pop_back();
    } else {
      throw FormatError(line, "bad coreference entry '" + entry + "'");
    }
  }

  Document doc_;
  std::size_t begin_line_;
  std::map<int, std::vector<OpenMention>> open_;
  std::map<int, std::vector<Span>> spans_;
};

std::string conll_doc_id(const std::string& header, std::size_t line) {
  static const std::regex kHeader(
      R"(#begin document \(([^)]*)\)(?:;\s*part\s+(\S+))?.*)");
  std::smatch match;
  if (!std::regex_match(header, match, kHeader)) {
    throw FormatError(line, "malformed document header");
  }
  std::string id = match[1];
  if (match[2].matched) id += "_" + match[2].str();
  return id;
}

void write_conll_header(const std::string& doc_id, std::ostream& out) {
  static const std::regex kPart(R"((.*)_(\d{3}))");
  std::smatch match;
  if (std::regex_match(doc_id, match, kPart)) {
    out << "#begin document (" << match[1] << "); part " << match[2] << "\n";
  } else {
    out << "#begin document (" << doc_id << ")\n";
  }
}

std::string conll_cell(const std::vector<std::pair<Span, int>>& mentions,
                       int token) {
  std::vector<std::pair<Span, int>> closes;
  std::vector<std::pair<Span, int>> singles;
  std::vector<std::pair<Span, int>> opens;
  for (const auto& m : mentions) {
    if (m.first.start == token && m.first.end == token) {
      singles.push_back(m);
    } else if (m.first.start == token) {
      opens.push_back(m);
    } else if (m.first.end == token) {
      closes.push_back(m);
    }
  }
  // Inner spans close first; outer spans open first.
  std::sort(closes.begin(), closes.end(), [](const auto& a, const auto& b) {
    if (a.first.start != b.first.start) return a.first.start > b.first.start;
    return a.second < b.second;
  });
  std::sort(opens.begin(), opens.end(), [](const auto& a, const auto& b) {
    if (a.first.end != b.first.end) return a.first.end > b.first.end;
    return a.second < b.second;
  });
  std::sort(singles.begin(), singles.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  std::string cell;
  auto append = [&cell](const std::string& entry) {
    if (!cell.empty()) cell += "|";
    cell += entry;
  };
  for (const auto& [span, id] : closes) append(std::to_string(id) + ")");
  for (const auto& [span, id] : singles) {
    append("(" + std::to_string(id) + ")");
  }
  for (const auto& [span, id] : opens) append("(" + std::to_string(id));
  return cell.empty() ? "-" : cell;
}

Span parse_span(const json& value, const std::string& doc_id,
                std::size_t line) {
  if (!value.is_array() || value.size() != 2 || !value[0].is_number_integer() ||
      !value[1].is_number_integer()) {
    throw FormatError(line, "document '" + doc_id +
                                "': span must be an [start,end] integer pair");
  }
  return {value[0].get<int>(), value[1].get<int>()};
}

}  // namespace

Corpus parse_conll(std::istream& in) {
  Corpus corpus;
  std::optional<ConllDocumentBuilder> current;
  std::string line;
  std::size_t line_no = 0;
  std::size_t implicit_docs = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (starts_with(line, "#begin document")) {
      if (current) {
        throw FormatError(line_no, "document begins before previous one ends");
      }
      current.emplace(conll_doc_id(line, line_no), line_no);
      continue;
    }
    if (starts_with(line, "#end document")) {
      if (!current) throw FormatError(line_no, "#end document without #begin");
      current->finish(corpus, line_no);
      current.reset();
      continue;
    }
    if (starts_with(line, "#")) continue;
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (!current) {
      current.emplace("document_" + std::to_string(implicit_docs++), line_no);
    }
    const std::string& word = fields.size() >= 6 ? fields[3] : fields[0];
    const std::string cell = fields.size() >= 2 ? fields.back() : "-";
    current->add_token(word, cell, line_no);
  }
  if (current) current->finish(corpus, line_no);
  infer_style(corpus);
  return corpus;
}

void serialize_conll(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus.documents) {
    write_conll_header(doc.doc_id, out);
    std::vector<std::pair<Span, int>> mentions;
    auto it = corpus.coref_annotations.find(doc.doc_id);
    if (it != corpus.coref_annotations.end()) {
      const auto& clusters = it->second.clusters();
      for (std::size_t id = 0; id < clusters.size(); ++id) {
        for (const auto& span : clusters[id]) {
          mentions.emplace_back(span, static_cast<int>(id));
        }
      }
    }
    const std::string name = doc.doc_id.empty() ? "-" : doc.doc_id;
    for (int t = 0; t < doc.length(); ++t) {
      out << name << "\t0\t" << t << "\t" << doc.tokens[t]
          << "\t-\t-\t-\t-\t-\t-\t-\t" << conll_cell(mentions, t) << "\n";
    }
    out << "\n#end document\n";
  }
}

Corpus parse_standoff(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object() || !record.contains("doc_id") ||
        !record["doc_id"].is_string() || !record.contains("tokens") ||
        !record["tokens"].is_array()) {
      throw FormatError(line_no,
                        "record needs a string doc_id and a tokens array");
    }
    Document doc;
    doc.doc_id = record["doc_id"].get<std::string>();
    for (const auto& token : record["tokens"]) {
      if (!token.is_string()) {
        throw FormatError(line_no, "document '" + doc.doc_id +
                                       "': tokens must be strings");
      }
      doc.tokens.push_back(token.get<std::string>());
    }
    if (doc.tokens.empty()) {
      throw ValidationError("document '" + doc.doc_id + "' has no tokens");
    }
    if (record.contains("domain")) doc.domain = record["domain"].get<std::string>();
    if (corpus.find(doc.doc_id) != nullptr) {
      throw ValidationError("duplicate doc_id '" + doc.doc_id + "'");
    }

    std::optional<ClusterSet> clusters;
    if (record.contains("clusters")) {
      std::vector<std::vector<Span>> spans;
      for (const auto& cluster : record["clusters"]) {
        if (!cluster.is_array() || cluster.empty()) {
          throw FormatError(line_no, "document '" + doc.doc_id +
                                         "': clusters must be nonempty arrays");
        }
        auto& out = spans.emplace_back();
        for (const auto& span : cluster) {
          out.push_back(parse_span(span, doc.doc_id, line_no));
        }
      }
      clusters.emplace(doc.doc_id, std::move(spans));
      validate(doc, *clusters);
    }
    std::optional<MentionAnnotation> mentions;
    if (record.contains("mentions")) {
      MentionAnnotation m;
      m.doc_id = doc.doc_id;
      for (const auto& span : record["mentions"]) {
        m.mentions.push_back(parse_span(span, doc.doc_id, line_no));
      }
      std::sort(m.mentions.begin(), m.mentions.end());
      validate(doc, m);
      mentions = std::move(m);
    } else if (clusters) {
      mentions = derive_mentions(*clusters);
    }
    if (mentions) corpus.mention_annotations[doc.doc_id] = std::move(*mentions);
    if (clusters) corpus.coref_annotations[doc.doc_id] = std::move(*clusters);
    corpus.documents.push_back(std::move(doc));
  }
  infer_style(corpus);
  return corpus;
}

void serialize_standoff(const Corpus& corpus, std::ostream& out,
                        const std::map<std::string, std::string>& provenance) {
  for (const auto& doc : corpus.documents) {
    json record;
    record["doc_id"] = doc.doc_id;
    record["tokens"] = doc.tokens;
    if (!doc.domain.empty()) record["domain"] = doc.domain;
    auto mentions = corpus.mention_annotations.find(doc.doc_id);
    if (mentions != corpus.mention_annotations.end()) {
      json list = json::array();
      for (const auto& span : mentions->second.mentions) {
        list.push_back({span.start, span.end});
      }
      record["mentions"] = std::move(list);
    }
    auto clusters = corpus.coref_annotations.find(doc.doc_id);
    if (clusters != corpus.coref_annotations.end()) {
      json list = json::array();
      for (const auto& cluster : clusters->second.clusters()) {
        json spans = json::array();
        for (const auto& span : cluster) spans.push_back({span.start, span.end});
        list.push_back(std::move(spans));
      }
      record["clusters"] = std::move(list);
    }
    auto tag = provenance.find(doc.doc_id);
    if (tag != provenance.end()) record["provenance"] = tag->second;
    out << record.dump() << "\n";
  }
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file '" + path + "'");
  auto ends_with = [&path](const std::string& suffix) {
    return path.size() >= suffix.size() &&
           path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".conll") || ends_with("_conll")) return parse_conll(in);
  return parse_standoff(in);
}

void save_standoff(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  serialize_standoff(corpus, out);
}

}  // namespace coref
