#ifndef HAZARDTAG_EVAL_HPP
#define HAZARDTAG_EVAL_HPP

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "hazardtag/extraction.hpp"
#include "hazardtag/tagger.hpp"

// Token-level confusion matrix metrics and exact-match entity scoring.

namespace hazardtag {

struct ConfusionMatrix {
  TagSet tags;
  std::vector<std::int64_t> counts;  // row = gold, column = predicted

  explicit ConfusionMatrix(TagSet t = TagSet::default13())
      : tags(std::move(t)), counts(tags.size() * tags.size(), 0) {}

  std::int64_t& at(std::size_t gold, std::size_t pred) {
    return counts[gold * tags.size() + pred];
  }
  std::int64_t at(std::size_t gold, std::size_t pred) const {
    return counts[gold * tags.size() + pred];
  }

  std::int64_t total() const {
    std::int64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
};

inline ConfusionMatrix confusion_matrix(
    const std::vector<std::vector<std::string>>& gold,
    const std::vector<std::vector<std::string>>& pred,
    TagSet tags = TagSet::default13()) {
  if (gold.size() != pred.size())
    throw std::invalid_argument("confusion_matrix: sentence count mismatch");
  ConfusionMatrix cm(std::move(tags));
  for (std::size_t n = 0; n < gold.size(); ++n) {
    if (gold[n].size() != pred[n].size())
      throw std::invalid_argument(
          "confusion_matrix: length mismatch at sentence " +
          std::to_string(n));
    for (std::size_t k = 0; k < gold[n].size(); ++k) {
      const int g = cm.tags.find(gold[n][k]);
      const int p = cm.tags.find(pred[n][k]);
      if (g < 0 || p < 0)
        throw std::invalid_argument("confusion_matrix: unknown tag at sentence " +
                                    std::to_string(n));
      ++cm.at(g, p);
    }
  }
  return cm;
}

struct ClassMetrics {
  std::int64_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// 0/0 counts as 0 everywhere.
inline ClassMetrics prf(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  ClassMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.precision = tp + fp == 0 ? 0.0
                             : static_cast<double>(tp) /
                                   static_cast<double>(tp + fp);
  m.recall = tp + fn == 0
                 ? 0.0
                 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f1 = m.precision + m.recall == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

struct MetricsReport {
  std::map<std::string, ClassMetrics> per_class;  // one entry per tag
  double macro_precision = 0.0;  // unweighted mean over non-O tags
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double token_accuracy = 0.0;
  ClassMetrics entity;  // exact-match spans, micro-aggregated
};

// Per-tag P/R/F1 from the confusion matrix, token accuracy = trace/total,
// macro averages over every tag except "O".
inline MetricsReport token_metrics(const ConfusionMatrix& cm) {
  const std::int64_t total = cm.total();
  if (total == 0) throw std::invalid_argument("token_metrics: empty matrix");
  const std::size_t t = cm.tags.size();

  MetricsReport report;
  std::int64_t trace = 0;
  double macro_p = 0.0, macro_r = 0.0, macro_f = 0.0;
  std::size_t macro_n = 0;
  for (std::size_t c = 0; c < t; ++c) {
    const std::int64_t tp = cm.at(c, c);
    std::int64_t fp = 0, fn = 0;
    for (std::size_t o = 0; o < t; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    trace += tp;
    ClassMetrics m = prf(tp, fp, fn);
    if (cm.tags.tag(c) != "O") {
      macro_p += m.precision;
      macro_r += m.recall;
      macro_f += m.f1;
      ++macro_n;
    }
    report.per_class[cm.tags.tag(c)] = m;
  }
  report.token_accuracy =
      static_cast<double>(trace) / static_cast<double>(total);
  if (macro_n > 0) {
    report.macro_precision = macro_p / static_cast<double>(macro_n);
    report.macro_recall = macro_r / static_cast<double>(macro_n);
    report.macro_f1 = macro_f / static_cast<double>(macro_n);
  }
  return report;
}

// A predicted span is correct only when a gold span with the same label and
// boundaries exists in the same sentence.
inline ClassMetrics entity_metrics(
    const std::vector<std::vector<EntitySpan>>& gold,
    const std::vector<std::vector<EntitySpan>>& pred) {
  if (gold.size() != pred.size())
    throw std::invalid_argument("entity_metrics: sentence count mismatch");
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t n = 0; n < gold.size(); ++n) {
    std::int64_t matched = 0;
    for (const auto& p : pred[n]) {
      const bool hit = std::any_of(
          gold[n].begin(), gold[n].end(), [&p](const EntitySpan& g) {
            return g.label == p.label && g.start == p.start && g.end == p.end;
          });
      if (hit) ++matched;
      else ++fp;
    }
    tp += matched;
    fn += static_cast<std::int64_t>(gold[n].size()) - matched;
  }
  return prf(tp, fp, fn);
}

inline json report_to_json(const MetricsReport& r) {
  json j;
  j["token_accuracy"] = r.token_accuracy;
  j["macro_precision"] = r.macro_precision;
  j["macro_recall"] = r.macro_recall;
  j["macro_f1"] = r.macro_f1;
  json per_class = json::object();
  for (const auto& [tag, m] : r.per_class) {
    per_class[tag] = {{"tp", m.tp},          {"fp", m.fp},
                      {"fn", m.fn},          {"precision", m.precision},
                      {"recall", m.recall},  {"f1", m.f1}};
  }
  j["per_class"] = per_class;
  j["entity"] = {{"tp", r.entity.tp},
                 {"fp", r.entity.fp},
                 {"fn", r.entity.fn},
                 {"precision", r.entity.precision},
                 {"recall", r.entity.recall},
                 {"f1", r.entity.f1}};
  return j;
}

inline void print_report(const MetricsReport& r, std::ostream& out) {
  out << std::fixed << std::setprecision(4);
  out << "tag            tp     fp     fn   prec    rec     f1\n";
  for (const auto& [tag, m] : r.per_class) {
    out << std::left << std::setw(10) << tag << std::right << std::setw(7)
        << m.tp << std::setw(7) << m.fp << std::setw(7) << m.fn
        << std::setw(7) << m.precision << std::setw(7) << m.recall
        << std::setw(7) << m.f1 << '\n';
  }
  out << "token accuracy " << r.token_accuracy << '\n';
  out << "macro (non-O)  P " << r.macro_precision << "  R " << r.macro_recall
      << "  F1 " << r.macro_f1 << '\n';
  out << "entity exact   P " << r.entity.precision << "  R "
      << r.entity.recall << "  F1 " << r.entity.f1 << " (tp " << r.entity.tp
      << " fp " << r.entity.fp << " fn " << r.entity.fn << ")\n";
}

}  // namespace hazardtag

#endif  // HAZARDTAG_EVAL_HPP
