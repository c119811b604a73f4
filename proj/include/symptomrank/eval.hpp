#pragma once

/// \file eval.hpp
/// \brief Classification (F1) and ranking (AP, R-PREC, P@k, NDCG@k) metrics
/// against binary qrels, with macro aggregation over symptoms and report
/// rendering.
///
/// Ranking metrics follow the trec_eval conventions: unjudged documents are
/// non-relevant, relevant documents that were not retrieved contribute zero,
/// gains are binary and the NDCG discount is log2(rank + 1).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "symptomrank/error.hpp"
#include "symptomrank/runs.hpp"
#include "symptomrank/score_table.hpp"
#include "symptomrank/text.hpp"
#include "symptomrank/types.hpp"

namespace symptomrank {

enum class Setting { majority, unanimity };

inline const char* to_string(Setting s) { return s == Setting::majority ? "majority" : "unanimity"; }

/// doc_id -> relevance (0/1) for one symptom.
using Judgments = std::map<std::string, int>;

struct Qrels {
  Setting setting = Setting::majority;
  std::map<SymptomId, Judgments> judgments;

  const Judgments& of(SymptomId s) const {
    static const Judgments kEmpty;
    const auto it = judgments.find(s);
    return it == judgments.end() ? kEmpty : it->second;
  }
};

/// TREC qrels: `<symptom_id> 0 <doc_id> <0|1>`.
inline Qrels parse_qrels(std::istream& in, Setting setting) {
  Qrels q;
  q.setting = setting;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::chomp(raw);
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto f = text::split_ws(line);
    if (f.size() != 4) throw ParseError("expected '<symptom_id> 0 <doc_id> <rel>'", line_no);
    const auto sid = text::parse_int<int>(f[0]);
    const auto rel = text::parse_int<int>(f[3]);
    if (!sid || !is_valid_symptom(*sid)) throw ParseError("bad symptom id", line_no);
    if (!rel || (*rel != 0 && *rel != 1)) throw ParseError("relevance must be 0 or 1", line_no);
    if (!q.judgments[*sid].emplace(std::string(f[2]), *rel).second)
      throw ParseError("duplicate judgment for doc '" + std::string(f[2]) + "'", line_no);
  }
  return q;
}

inline void write_qrels(std::ostream& out, const Qrels& q) {
  for (const auto& [sid, docs] : q.judgments)
    for (const auto& [doc, rel] : docs) out << sid << " 0 " << doc << ' ' << rel << '\n';
}

/// Qrels from labeled instances, optionally restricted to one split.
inline Qrels qrels_from_labels(const std::vector<LabeledInstance>& labels, Setting setting,
                               const std::vector<SplitAssignment>* split = nullptr,
                               Split which = Split::val) {
  std::set<std::pair<std::string, SymptomId>> keep;
  if (split)
    for (const auto& a : *split)
      if (a.split == which) keep.emplace(a.doc_id, a.symptom_id);
  Qrels q;
  q.setting = setting;
  for (const auto& l : labels) {
    if (split && !keep.contains({l.doc_id, l.symptom_id})) continue;
    q.judgments[l.symptom_id][l.doc_id] = setting == Setting::majority ? l.majority : l.unanimity;
  }
  return q;
}

inline std::size_t relevant_count(const Judgments& j) {
  std::size_t r = 0;
  for (const auto& [_, rel] : j) r += rel > 0;
  return r;
}

inline bool is_relevant(const Judgments& j, const std::string& doc) {
  const auto it = j.find(doc);
  return it != j.end() && it->second > 0;
}

// ---------------------------------------------------------------------------
// Classification

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// 2tp / (2tp + fp + fn), 0 when the denominator is 0.
inline double f1(const ConfusionCounts& c) {
  const auto denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0 : double(2 * c.tp) / double(denom);
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

inline MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / double(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / double(values.size()))};
}

struct ClassificationReport {
  Setting setting = Setting::majority;
  std::map<SymptomId, ConfusionCounts> counts;
  std::map<SymptomId, double> f1;
  MeanStd macro;
};

/// Per-symptom confusion over judged docs (a doc absent from `predictions` is
/// predicted negative), F1, and macro mean/std over the 21 symptoms.
inline ClassificationReport evaluate_classification(const PositiveSet& predictions, const Qrels& qrels) {
  std::string missing;
  for (int s = 1; s <= kNumSymptoms; ++s)
    if (!qrels.judgments.contains(s) || qrels.judgments.at(s).empty())
      missing += (missing.empty() ? "" : ", ") + std::to_string(s);
  if (!missing.empty()) throw ValidationError("qrels lack judgments for symptoms: " + missing);

  ClassificationReport r;
  r.setting = qrels.setting;
  std::vector<double> values;
  for (const auto& [sid, judged] : qrels.judgments) {
    if (!is_valid_symptom(sid)) continue;
    ConfusionCounts c;
    for (const auto& [doc, rel] : judged) {
      const bool pred = predictions.contains(sid, doc);
      if (pred && rel) ++c.tp;
      else if (pred) ++c.fp;
      else if (rel) ++c.fn;
      else ++c.tn;
    }
    r.counts[sid] = c;
    r.f1[sid] = f1(c);
    values.push_back(r.f1[sid]);
  }
  r.macro = mean_std(values);
  return r;
}

// ---------------------------------------------------------------------------
// Ranking metrics over one symptom's ranked list

namespace detail {
inline std::size_t require_relevant(const Judgments& j, const char* metric) {
  const auto r = relevant_count(j);
  if (r == 0) throw UndefinedMetricError(std::string(metric) + " undefined: no relevant documents");
  return r;
}
}  // namespace detail

inline double average_precision(std::span<const RunEntry> ranking, const Judgments& judged) {
  const auto r = detail::require_relevant(judged, "AP");
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranking.size(); ++i)
    if (is_relevant(judged, ranking[i].doc_id)) sum += double(++hits) / double(i + 1);
  return sum / double(r);
}

inline double r_precision(std::span<const RunEntry> ranking, const Judgments& judged) {
  const auto r = detail::require_relevant(judged, "R-PREC");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(r, ranking.size()); ++i) hits += is_relevant(judged, ranking[i].doc_id);
  return double(hits) / double(r);
}

inline double precision_at_k(std::span<const RunEntry> ranking, const Judgments& judged, std::size_t k = 10) {
  if (k == 0) throw ValidationError("P@k needs k >= 1");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) hits += is_relevant(judged, ranking[i].doc_id);
  return double(hits) / double(k);
}

inline double ndcg_at_k(std::span<const RunEntry> ranking, const Judgments& judged, std::size_t k = 1000) {
  const auto r = detail::require_relevant(judged, "NDCG");
  double dcg = 0.0, ideal = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i)
    if (is_relevant(judged, ranking[i].doc_id)) dcg += 1.0 / std::log2(double(i + 2));
  for (std::size_t i = 0; i < std::min(k, r); ++i) ideal += 1.0 / std::log2(double(i + 2));
  return dcg / ideal;
}

struct IrMetrics {
  double ap = 0.0, r_prec = 0.0, p_at_10 = 0.0, ndcg_at_1000 = 0.0;
};

struct IrReport {
  Setting setting = Setting::majority;
  std::string run_tag;
  std::map<SymptomId, IrMetrics> per_symptom;
  IrMetrics macro;
  std::vector<SymptomId> excluded;  // judged symptoms without relevant docs
};

/// Per-symptom metrics over the symptoms judged in `qrels`, macro-averaged
/// over those with at least one relevant document.
inline IrReport evaluate_ir(const Run& run, const Qrels& qrels, std::size_t precision_k = 10,
                            std::size_t ndcg_k = 1000) {
  bool overlap = false;
  for (const auto& [sid, _] : run.per_symptom) overlap = overlap || qrels.judgments.contains(sid);
  if (!overlap) throw ValidationError("run '" + run.tag + "' and qrels share no symptom ids");

  IrReport r;
  r.setting = qrels.setting;
  r.run_tag = run.tag;
  static const std::vector<RunEntry> kEmpty;
  for (const auto& [sid, judged] : qrels.judgments) {
    if (relevant_count(judged) == 0) {
      r.excluded.push_back(sid);
      continue;
    }
    const auto it = run.per_symptom.find(sid);
    const auto& ranking = it == run.per_symptom.end() ? kEmpty : it->second;
    r.per_symptom[sid] = {average_precision(ranking, judged), r_precision(ranking, judged),
                          precision_at_k(ranking, judged, precision_k), ndcg_at_k(ranking, judged, ndcg_k)};
  }
  if (!r.per_symptom.empty()) {
    for (const auto& [_, m] : r.per_symptom) {
      r.macro.ap += m.ap;
      r.macro.r_prec += m.r_prec;
      r.macro.p_at_10 += m.p_at_10;
      r.macro.ndcg_at_1000 += m.ndcg_at_1000;
    }
    const double n = double(r.per_symptom.size());
    r.macro.ap /= n;
    r.macro.r_prec /= n;
    r.macro.p_at_10 /= n;
    r.macro.ndcg_at_1000 /= n;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Reports

/// One approach row: majority and unanimity macro F1, and their difference
/// (unanimity - majority).
struct ClassificationRow {
  std::string approach;
  std::optional<ClassificationReport> majority, unanimity;

  std::optional<double> delta() const {
    if (!majority || !unanimity) return std::nullopt;
    return unanimity->macro.mean - majority->macro.mean;
  }
};

namespace detail {
inline std::string pad(std::string s, std::size_t w) {
  // Pad by display width: count UTF-8 lead bytes only.
  std::size_t width = 0;
  for (unsigned char c : s) width += (c & 0xC0) != 0x80;
  if (width < w) s.append(w - width, ' ');
  return s;
}

inline std::string fmt3(double v) { return text::format_fixed(v, 3); }

inline std::string fmt_mean_std(const std::optional<ClassificationReport>& r) {
  return r ? fmt3(r->macro.mean) + "±" + fmt3(r->macro.std) : "-";
}
}  // namespace detail

inline void render_classification_table(std::ostream& out, std::span<const ClassificationRow> rows) {
  std::size_t w = 8;
  for (const auto& r : rows) w = std::max(w, r.approach.size());
  out << detail::pad("Approach", w) << "  " << detail::pad("Majority", 13) << "  " << detail::pad("Unanimity", 13)
      << "  Delta\n";
  for (const auto& r : rows) {
    const auto d = r.delta();
    out << detail::pad(r.approach, w) << "  " << detail::pad(detail::fmt_mean_std(r.majority), 13) << "  "
        << detail::pad(detail::fmt_mean_std(r.unanimity), 13) << "  " << (d ? detail::fmt3(*d) : "-") << '\n';
  }
}

inline void write_classification_tsv(std::ostream& out, std::span<const ClassificationRow> rows) {
  out << "approach\tmajority_mean\tmajority_std\tunanimity_mean\tunanimity_std\tdelta\n";
  auto cell = [](const std::optional<ClassificationReport>& r, bool std) {
    return r ? text::format_fixed(std ? r->macro.std : r->macro.mean, 6) : std::string("NA");
  };
  for (const auto& r : rows) {
    const auto d = r.delta();
    out << r.approach << '\t' << cell(r.majority, false) << '\t' << cell(r.majority, true) << '\t'
        << cell(r.unanimity, false) << '\t' << cell(r.unanimity, true) << '\t'
        << (d ? text::format_fixed(*d, 6) : "NA") << '\n';
  }
}

/// Per-symptom F1 rows (`symptom_id \t approach \t f1`), the input format of
/// per-symptom best-model selection.
inline void write_per_symptom_f1(std::ostream& out, std::span<const ClassificationRow> rows, Setting setting) {
  for (const auto& r : rows) {
    const auto& rep = setting == Setting::majority ? r.majority : r.unanimity;
    if (!rep) continue;
    for (const auto& [sid, v] : rep->f1) out << sid << '\t' << r.approach << '\t' << text::format_exact(v) << '\n';
  }
}

/// Runs x (AP, R-PREC, P@10, NDCG@1000), one section per setting.
inline void render_ir_table(std::ostream& out, std::span<const IrReport> reports) {
  std::size_t w = 3;
  for (const auto& r : reports) w = std::max(w, r.run_tag.size());
  out << detail::pad("Run", w) << "  AP     R-PREC  P@10   NDCG@1000\n";
  for (Setting s : {Setting::majority, Setting::unanimity}) {
    bool header = false;
    for (const auto& r : reports) {
      if (r.setting != s) continue;
      if (!header) out << "-- annotator " << to_string(s) << " evaluation --\n";
      header = true;
      out << detail::pad(r.run_tag, w) << "  " << detail::fmt3(r.macro.ap) << "  " << detail::fmt3(r.macro.r_prec)
          << "   " << detail::fmt3(r.macro.p_at_10) << "  " << detail::fmt3(r.macro.ndcg_at_1000) << '\n';
    }
  }
}

inline void write_ir_tsv(std::ostream& out, std::span<const IrReport> reports) {
  out << "setting\trun\tap\tr_prec\tp_at_10\tndcg_at_1000\tsymptoms\texcluded\n";
  for (const auto& r : reports)
    out << to_string(r.setting) << '\t' << r.run_tag << '\t' << text::format_fixed(r.macro.ap, 6) << '\t'
        << text::format_fixed(r.macro.r_prec, 6) << '\t' << text::format_fixed(r.macro.p_at_10, 6) << '\t'
        << text::format_fixed(r.macro.ndcg_at_1000, 6) << '\t' << r.per_symptom.size() << '\t' << r.excluded.size()
        << '\n';
}

}  // namespace symptomrank
