#ifndef HAZARDTAG_EXTRACTION_HPP
#define HAZARDTAG_EXTRACTION_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hazardtag/corpus.hpp"

// IOB tag sequences <-> entity spans, and the food-hazard event template.

namespace hazardtag {

struct EntitySpan {
  std::string label;      // PERS / LOC / ORG / QUANT / EVT / DTE
  std::size_t start = 0;  // token indices, inclusive
  std::size_t end = 0;
  std::string text;       // space-joined surface tokens

  bool operator==(const EntitySpan&) const = default;
};

namespace detail {

inline std::string join_tokens(const std::vector<std::string>& tokens,
                               std::size_t start, std::size_t end) {
  std::string out = tokens[start];
  for (std::size_t i = start + 1; i <= end; ++i) {
    out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace detail

// Maximal B-X (I-X)* runs become spans; a stray I-X with no live span of
// the same class is repaired as if it were B-X.
inline std::vector<EntitySpan> decode_spans(
    const std::vector<std::string>& tokens,
    const std::vector<std::string>& tags) {
  if (tokens.size() != tags.size())
    throw std::invalid_argument("decode_spans: tokens/tags length mismatch");
  std::vector<EntitySpan> spans;
  std::string open_label;
  std::size_t open_start = 0;

  auto close = [&](std::size_t end) {
    if (open_label.empty()) return;
    spans.push_back({open_label, open_start, end,
                     detail::join_tokens(tokens, open_start, end)});
    open_label.clear();
  };

  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& t = tags[i];
    if (t == "O") {
      close(i == 0 ? 0 : i - 1);
      continue;
    }
    const std::string cls = t.substr(2);
    if (t[0] == 'B' || open_label != cls) {
      close(i == 0 ? 0 : i - 1);
      open_label = cls;
      open_start = i;
    }
  }
  close(tags.empty() ? 0 : tags.size() - 1);
  return spans;
}

// Inverse of decode_spans for valid span sets; unclaimed positions are "O".
inline std::vector<std::string> encode_spans(std::vector<EntitySpan> spans,
                                             std::size_t length) {
  std::sort(spans.begin(), spans.end(),
            [](const EntitySpan& a, const EntitySpan& b) {
              return a.start < b.start;
            });
  std::vector<std::string> tags(length, "O");
  std::size_t prev_end = 0;
  bool first = true;
  for (const auto& s : spans) {
    if (s.start > s.end || s.end >= length)
      throw std::invalid_argument("encode_spans: span out of range");
    if (!canonical_class(s.label) || canonical_class(s.label) != s.label)
      throw std::invalid_argument("encode_spans: bad label '" + s.label +
                                  "'");
    if (!first && s.start <= prev_end)
      throw std::invalid_argument("encode_spans: overlapping spans");
    tags[s.start] = "B-" + s.label;
    for (std::size_t i = s.start + 1; i <= s.end; ++i)
      tags[i] = "I-" + s.label;
    prev_end = s.end;
    first = false;
  }
  return tags;
}

struct HazardEvent {
  std::optional<std::string> hazard_type;   // EVT
  std::optional<std::string> location;      // LOC
  std::optional<std::string> organization;  // ORG
  std::optional<std::string> person;        // PERS
  std::optional<std::string> quantity;      // QUANT
  std::optional<std::string> date;          // DTE
  std::map<std::string, std::vector<std::string>> extras;
  std::string doc_id;

  bool operator==(const HazardEvent&) const = default;
};

// First span of each label (lowest start) fills the slot; later spans of
// the same label land in extras.
inline HazardEvent fill_template(const std::vector<EntitySpan>& spans,
                                 const std::string& doc_id = {}) {
  HazardEvent ev;
  ev.doc_id = doc_id;
  std::vector<EntitySpan> ordered = spans;
  std::sort(ordered.begin(), ordered.end(),
            [](const EntitySpan& a, const EntitySpan& b) {
              return a.start < b.start;
            });
  for (const auto& s : ordered) {
    std::optional<std::string>* slot = nullptr;
    if (s.label == "EVT") slot = &ev.hazard_type;
    else if (s.label == "LOC") slot = &ev.location;
    else if (s.label == "ORG") slot = &ev.organization;
    else if (s.label == "PERS") slot = &ev.person;
    else if (s.label == "QUANT") slot = &ev.quantity;
    else if (s.label == "DTE") slot = &ev.date;
    if (slot != nullptr && !slot->has_value())
      *slot = s.text;
    else
      ev.extras[s.label].push_back(s.text);
  }
  return ev;
}

inline json event_to_json(const HazardEvent& ev) {
  auto opt = [](const std::optional<std::string>& v) {
    return v ? json(*v) : json(nullptr);
  };
  json j;
  j["doc_id"] = ev.doc_id.empty() ? json(nullptr) : json(ev.doc_id);
  j["hazard_type"] = opt(ev.hazard_type);
  j["location"] = opt(ev.location);
  j["organization"] = opt(ev.organization);
  j["person"] = opt(ev.person);
  j["quantity"] = opt(ev.quantity);
  j["date"] = opt(ev.date);
  j["extras"] = json::object();
  for (const auto& [label, texts] : ev.extras) j["extras"][label] = texts;
  return j;
}

inline HazardEvent event_from_json(const json& j) {
  HazardEvent ev;
  auto opt = [&j](const char* field) -> std::optional<std::string> {
    if (!j.contains(field) || j[field].is_null()) return std::nullopt;
    return j[field].get<std::string>();
  };
  if (j.contains("doc_id") && j["doc_id"].is_string())
    ev.doc_id = j["doc_id"].get<std::string>();
  ev.hazard_type = opt("hazard_type");
  ev.location = opt("location");
  ev.organization = opt("organization");
  ev.person = opt("person");
  ev.quantity = opt("quantity");
  ev.date = opt("date");
  if (j.contains("extras"))
    for (const auto& [label, texts] : j["extras"].items())
      ev.extras[label] = texts.get<std::vector<std::string>>();
  return ev;
}

// One record per event, input order, fixed field order.
inline void events_to_report(const std::vector<HazardEvent>& events,
                             std::ostream& out) {
  for (const auto& ev : events) out << event_to_json(ev).dump() << '\n';
}

}  // namespace hazardtag

#endif  // HAZARDTAG_EXTRACTION_HPP
