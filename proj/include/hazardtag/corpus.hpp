#ifndef HAZARDTAG_CORPUS_HPP
#define HAZARDTAG_CORPUS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "hazardtag/prng.hpp"

// Data model and line-delimited record I/O for the annotated corpus.
// One JSON object per line: {"tokens": [...], "tags": [...], "doc_id": ...}.

namespace hazardtag {

using json = nlohmann::ordered_json;

inline constexpr std::array<std::string_view, 6> kEntityClasses = {
    "PERS", "LOC", "ORG", "QUANT", "EVT", "DTE"};

enum class DocSource { report, website, social };

inline std::optional<DocSource> parse_source(std::string_view s) {
  if (s == "report") return DocSource::report;
  if (s == "website") return DocSource::website;
  if (s == "social") return DocSource::social;
  return std::nullopt;
}

inline std::string_view to_string(DocSource s) {
  switch (s) {
    case DocSource::report: return "report";
    case DocSource::website: return "website";
    default: return "social";
  }
}

struct Document {
  std::string id;
  std::string text;
  DocSource source = DocSource::report;
  std::string date;  // ISO-8601, empty when absent
};

struct AnnotatedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::string doc_id;  // empty when absent

  bool operator==(const AnnotatedSentence&) const = default;
};

// Long class names are accepted and folded to the short forms.
inline std::optional<std::string> canonical_class(std::string_view name) {
  for (auto c : kEntityClasses)
    if (name == c) return std::string(c);
  if (name == "PERSON") return "PERS";
  if (name == "LOCATION") return "LOC";
  if (name == "ORGANIZATION") return "ORG";
  if (name == "QUANTITY") return "QUANT";
  if (name == "EVENT") return "EVT";
  if (name == "DATE") return "DTE";
  return std::nullopt;
}

// "O", "B-<class>" or "I-<class>" with the class canonicalized; anything
// else comes back empty.
inline std::optional<std::string> canonicalize_tag(std::string_view tag) {
  if (tag == "O") return "O";
  if (tag.size() < 3 || tag[1] != '-') return std::nullopt;
  if (tag[0] != 'B' && tag[0] != 'I') return std::nullopt;
  auto cls = canonical_class(tag.substr(2));
  if (!cls) return std::nullopt;
  return std::string(1, tag[0]) + "-" + *cls;
}

struct TagViolation {
  std::size_t index;
  std::string reason;
};

// ok (nullopt) iff every tag is canonical IOB over the six classes and
// every I-X directly follows B-X or I-X.
inline std::optional<TagViolation> validate_tags(
    const std::vector<std::string>& tags) {
  std::string_view prev_class;  // empty = previous tag closed any span
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& t = tags[i];
    if (t == "O") {
      prev_class = {};
      continue;
    }
    auto canonical = canonicalize_tag(t);
    if (!canonical || *canonical != t)
      return TagViolation{i, "unknown tag '" + t + "'"};
    const std::string_view cls = std::string_view(t).substr(2);
    if (t[0] == 'I') {
      if (prev_class.empty())
        return TagViolation{i, "I-" + std::string(cls) + " without B"};
      if (prev_class != cls)
        return TagViolation{i, "label switch inside I (" +
                                   std::string(prev_class) + " -> " +
                                   std::string(cls) + ")"};
    }
    prev_class = cls;
  }
  return std::nullopt;
}

namespace detail {

inline std::vector<std::string> json_string_array(const json& j,
                                                  const char* field,
                                                  std::size_t lineno) {
  if (!j.contains(field) || !j[field].is_array())
    throw std::runtime_error("line " + std::to_string(lineno) +
                             ": missing array field '" + field + "'");
  std::vector<std::string> out;
  for (const auto& e : j[field]) {
    if (!e.is_string())
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": non-string entry in '" + field + "'");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace detail

inline AnnotatedSentence parse_sentence_record(const std::string& line,
                                               std::size_t lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw std::runtime_error("line " + std::to_string(lineno) +
                             ": malformed record: " + e.what());
  }
  AnnotatedSentence s;
  s.tokens = detail::json_string_array(j, "tokens", lineno);
  s.tags = detail::json_string_array(j, "tags", lineno);
  if (j.contains("doc_id") && j["doc_id"].is_string())
    s.doc_id = j["doc_id"].get<std::string>();
  if (s.tokens.size() != s.tags.size())
    throw std::runtime_error(
        "line " + std::to_string(lineno) + ": tokens/tags length mismatch (" +
        std::to_string(s.tokens.size()) + " vs " +
        std::to_string(s.tags.size()) + ")");
  if (s.tokens.empty())
    throw std::runtime_error("line " + std::to_string(lineno) +
                             ": empty sentence");
  for (auto& t : s.tags) {
    auto canonical = canonicalize_tag(t);
    if (!canonical)
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": invalid tag '" + t + "'");
    t = *canonical;
  }
  if (auto v = validate_tags(s.tags))
    throw std::runtime_error("line " + std::to_string(lineno) +
                             ": tag sequence invalid at index " +
                             std::to_string(v->index) + ": " + v->reason);
  return s;
}

inline std::vector<AnnotatedSentence> load_corpus(std::istream& in) {
  std::vector<AnnotatedSentence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    out.push_back(parse_sentence_record(line, lineno));
  }
  return out;
}

inline std::vector<AnnotatedSentence> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  return load_corpus(in);
}

inline json sentence_to_json(const AnnotatedSentence& s) {
  json j;
  j["tokens"] = s.tokens;
  j["tags"] = s.tags;
  if (!s.doc_id.empty()) j["doc_id"] = s.doc_id;
  return j;
}

inline void save_corpus(std::ostream& out,
                        const std::vector<AnnotatedSentence>& sentences) {
  for (const auto& s : sentences) out << sentence_to_json(s).dump() << '\n';
}

inline void save_corpus(const std::string& path,
                        const std::vector<AnnotatedSentence>& sentences) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  save_corpus(out, sentences);
}

// Unannotated sentence record: {"tokens": [...], "doc_id"?}. Extra fields
// (e.g. "tags" on an annotated file) are ignored.
struct TokenRecord {
  std::vector<std::string> tokens;
  std::string doc_id;
};

inline std::vector<TokenRecord> load_token_records(std::istream& in) {
  std::vector<TokenRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": malformed record: " + e.what());
    }
    TokenRecord rec;
    rec.tokens = detail::json_string_array(j, "tokens", lineno);
    if (rec.tokens.empty())
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": empty sentence");
    if (j.contains("doc_id") && j["doc_id"].is_string())
      rec.doc_id = j["doc_id"].get<std::string>();
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<TokenRecord> load_token_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sentences file: " + path);
  return load_token_records(in);
}

// Raw-document records: {"id", "text", "source", "date"?}.
inline std::vector<Document> load_documents(std::istream& in) {
  std::vector<Document> out;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": malformed record: " + e.what());
    }
    Document d;
    if (!j.contains("id") || !j["id"].is_string() ||
        j["id"].get<std::string>().empty())
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": missing or empty 'id'");
    if (!j.contains("text") || !j["text"].is_string() ||
        j["text"].get<std::string>().empty())
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": missing or empty 'text'");
    d.id = j["id"].get<std::string>();
    d.text = j["text"].get<std::string>();
    if (j.contains("source")) {
      auto src = parse_source(j["source"].is_string()
                                  ? j["source"].get<std::string>()
                                  : std::string());
      if (!src)
        throw std::runtime_error("line " + std::to_string(lineno) +
                                 ": bad 'source'");
      d.source = *src;
    }
    if (j.contains("date") && j["date"].is_string())
      d.date = j["date"].get<std::string>();
    if (!seen_ids.insert(d.id).second)
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": duplicate document id '" + d.id + "'");
    out.push_back(std::move(d));
  }
  return out;
}

inline std::vector<Document> load_documents(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open documents file: " + path);
  return load_documents(in);
}

struct CorpusSplit {
  std::vector<AnnotatedSentence> train;
  std::vector<AnnotatedSentence> dev;
  std::vector<AnnotatedSentence> test;
};

// Seeded shuffle, then cut: |train| = floor(N*r0), |dev| = floor(N*r1),
// test takes the remainder.
inline CorpusSplit split_corpus(std::vector<AnnotatedSentence> sentences,
                                std::array<double, 3> ratios,
                                std::uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0 ||
      std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split_corpus: ratios must sum to 1");
  Lcg64 rng(seed);
  rng.shuffle(sentences);
  const auto n = sentences.size();
  const auto n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * ratios[0]));
  const auto n_dev = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * ratios[1]));
  CorpusSplit split;
  split.train.assign(sentences.begin(), sentences.begin() + n_train);
  split.dev.assign(sentences.begin() + n_train,
                   sentences.begin() + n_train + n_dev);
  split.test.assign(sentences.begin() + n_train + n_dev, sentences.end());
  return split;
}

}  // namespace hazardtag

#endif  // HAZARDTAG_CORPUS_HPP
