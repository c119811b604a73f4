#pragma once

/// \file runs.hpp
/// \brief Ranked submission runs built from score tables: thresholded runs,
/// per-symptom best-model selection, candidate filtering, max / unanimity
/// ensembles, and the TREC run file format.
///
/// Ordering everywhere is descending score, then ascending doc_id (bytewise).

#include <algorithm>
#include <cmath>
#include <istream>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "symptomrank/dataset.hpp"
#include "symptomrank/error.hpp"
#include "symptomrank/score_table.hpp"
#include "symptomrank/similarity.hpp"
#include "symptomrank/text.hpp"
#include "symptomrank/types.hpp"

namespace symptomrank {

inline constexpr std::size_t kRunCap = 1000;
inline constexpr std::size_t kNoCap = std::numeric_limits<std::size_t>::max();

struct RunEntry {
  std::string doc_id;
  std::size_t rank = 0;
  double score = 0.0;

  friend bool operator==(const RunEntry&, const RunEntry&) = default;
};

/// Per-symptom ranked lists. Ranks are 1..n, scores non-increasing, no doc twice.
struct Run {
  std::string tag;
  std::map<SymptomId, std::vector<RunEntry>> per_symptom;

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [_, e] : per_symptom) n += e.size();
    return n;
  }

  friend bool operator==(const Run&, const Run&) = default;
};

/// Throws ValidationError when `run` breaks a Run invariant.
inline void validate_run(const Run& run, std::size_t cap = kRunCap) {
  for (const auto& [sid, entries] : run.per_symptom) {
    const auto where = "run '" + run.tag + "', symptom " + std::to_string(sid) + ": ";
    if (entries.size() > cap) throw ValidationError(where + "more than " + std::to_string(cap) + " entries");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      if (e.rank != i + 1) throw ValidationError(where + "ranks are not consecutive from 1");
      if (i > 0 && e.score > entries[i - 1].score) throw ValidationError(where + "scores increase with rank");
      if (!std::isfinite(e.score)) throw ValidationError(where + "non-finite score");
      if (!seen.insert(e.doc_id).second) throw ValidationError(where + "duplicate doc '" + e.doc_id + "'");
    }
  }
}

/// Sorts by (score desc, doc_id asc), truncates to `cap`, assigns ranks.
inline std::vector<RunEntry> rank_entries(std::vector<std::pair<std::string, double>> scored, std::size_t cap) {
  auto better = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  const auto keep = std::min(cap, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + std::ptrdiff_t(keep), scored.end(), better);
  std::vector<RunEntry> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back({std::move(scored[i].first), i + 1, scored[i].second});
  return out;
}

/// Which scores count as a positive prediction.
class PositiveRule {
 public:
  /// score >= threshold, same for every symptom (regression outputs).
  static PositiveRule at_least(double threshold = kPositiveThreshold) {
    PositiveRule r;
    r.global_ = threshold;
    return r;
  }

  /// score > per-symptom calibrated threshold (maxcos).
  static PositiveRule above(SymptomThresholds thresholds) {
    PositiveRule r;
    r.thresholds_ = std::move(thresholds);
    return r;
  }

  bool accepts(SymptomId s, double score) const {
    if (thresholds_) return score > thresholds_->at(s);
    return binarize(score, global_);
  }

  /// Throws unless every symptom has a threshold.
  void check_complete() const {
    if (!thresholds_) return;
    std::string missing;
    for (int s = 1; s <= kNumSymptoms; ++s)
      if (!thresholds_->per_symptom.contains(s)) missing += (missing.empty() ? "" : ", ") + std::to_string(s);
    if (!missing.empty()) throw ValidationError("no threshold for symptoms: " + missing);
  }

 private:
  double global_ = kPositiveThreshold;
  std::optional<SymptomThresholds> thresholds_;
};

inline PositiveSet positive_set(const ScoreTable& table, const PositiveRule& rule) {
  rule.check_complete();
  PositiveSet out;
  for (const auto& [sid, docs] : table.scores) {
    auto& dst = out.docs[sid];
    for (const auto& [doc, score] : docs)
      if (rule.accepts(sid, score)) dst.insert(dst.end(), doc);
  }
  return out;
}

/// Positives of `table` under `rule`, ranked and capped. Symptoms with no
/// positives get an empty list.
inline Run build_positive_run(const ScoreTable& table, const PositiveRule& rule, std::size_t cap = kRunCap) {
  rule.check_complete();
  Run run;
  run.tag = table.tag;
  for (const auto& [sid, docs] : table.scores) {
    std::vector<std::pair<std::string, double>> kept;
    for (const auto& [doc, score] : docs)
      if (rule.accepts(sid, score)) kept.emplace_back(doc, score);
    run.per_symptom[sid] = rank_entries(std::move(kept), cap);
  }
  return run;
}

/// Validation F1 per (symptom, approach tag).
struct F1Table {
  std::map<std::pair<SymptomId, std::string>, double> values;

  double at(SymptomId s, const std::string& approach) const {
    const auto it = values.find({s, approach});
    if (it == values.end())
      throw ValidationError("missing F1 for symptom " + std::to_string(s) + ", approach '" + approach + "'");
    return it->second;
  }
};

struct AugBestResult {
  ScoreTable table;
  std::map<SymptomId, std::string> chosen;  // symptom -> source tag
};

/// Per symptom, takes the scores of whichever table had the higher validation
/// F1; ties go to `two_step`.
inline AugBestResult select_aug_best(const ScoreTable& one_step, const ScoreTable& two_step, const F1Table& val_f1,
                                     std::string tag = "aug-best") {
  AugBestResult r;
  r.table.tag = std::move(tag);
  for (int s = 1; s <= kNumSymptoms; ++s) {
    const double f1 = val_f1.at(s, one_step.tag), f2 = val_f1.at(s, two_step.tag);
    const auto& src = f1 > f2 ? one_step : two_step;
    r.chosen[s] = src.tag;
    if (const auto it = src.scores.find(s); it != src.scores.end()) r.table.scores[s] = it->second;
  }
  return r;
}

/// All scored doc_ids of a table, per symptom.
inline PositiveSet doc_universe(const ScoreTable& table) {
  PositiveSet u;
  for (const auto& [sid, docs] : table.scores) {
    auto& dst = u.docs[sid];
    for (const auto& [doc, _] : docs) dst.insert(dst.end(), doc);
  }
  return u;
}

/// Per-symptom intersection of the candidate universe with maxcos positives.
inline PositiveSet filter_candidates(const PositiveSet& universe, const PositiveSet& maxcos_positives) {
  PositiveSet out;
  for (const auto& [sid, docs] : universe.docs) {
    auto& dst = out.docs[sid];
    const auto it = maxcos_positives.docs.find(sid);
    if (it == maxcos_positives.docs.end()) continue;
    std::set_intersection(docs.begin(), docs.end(), it->second.begin(), it->second.end(),
                          std::inserter(dst, dst.end()));
  }
  return out;
}

/// Keeps only the (symptom, doc) entries present in `candidates`.
inline ScoreTable restrict_table(const ScoreTable& table, const PositiveSet& candidates) {
  ScoreTable out;
  out.tag = table.tag;
  for (const auto& [sid, docs] : table.scores) {
    auto& dst = out.scores[sid];
    for (const auto& [doc, score] : docs)
      if (candidates.contains(sid, doc)) dst.emplace_hint(dst.end(), doc, score);
  }
  return out;
}

/// Ranks every doc scored by at least one table by its maximum score.
inline Run ensemble_max(std::span<const ScoreTable* const> tables, std::size_t cap = kRunCap,
                        std::string tag = "max") {
  std::map<SymptomId, std::map<std::string, double>> best;
  for (const auto* t : tables)
    for (const auto& [sid, docs] : t->scores) {
      auto& dst = best[sid];
      for (const auto& [doc, score] : docs) {
        auto [it, inserted] = dst.emplace(doc, score);
        if (!inserted) it->second = std::max(it->second, score);
      }
    }
  Run run;
  run.tag = std::move(tag);
  for (auto& [sid, docs] : best)
    run.per_symptom[sid] = rank_entries({docs.begin(), docs.end()}, cap);
  return run;
}

/// Binary oracle grades per (symptom, doc).
struct OracleGrades {
  std::map<SymptomId, std::map<std::string, int>> grades;

  std::optional<int> find(SymptomId s, const std::string& doc) const {
    const auto it = grades.find(s);
    if (it == grades.end()) return std::nullopt;
    const auto g = it->second.find(doc);
    if (g == it->second.end()) return std::nullopt;
    return g->second;
  }

  PositiveSet positives() const {
    PositiveSet p;
    for (const auto& [sid, docs] : grades)
      for (const auto& [doc, g] : docs)
        if (g == 1) p.docs[sid].insert(doc);
    return p;
  }
};

/// Docs predicted positive by every set in `sets`, per symptom.
inline PositiveSet intersect_all(std::span<const PositiveSet* const> sets) {
  PositiveSet out;
  if (sets.empty()) return out;
  for (const auto& [sid, docs] : sets[0]->docs) {
    std::set<std::string> acc = docs;
    for (std::size_t i = 1; i < sets.size() && !acc.empty(); ++i) {
      const auto it = sets[i]->docs.find(sid);
      if (it == sets[i]->docs.end()) {
        acc.clear();
        break;
      }
      std::set<std::string> next;
      std::set_intersection(acc.begin(), acc.end(), it->second.begin(), it->second.end(),
                            std::inserter(next, next.end()));
      acc.swap(next);
    }
    out.docs[sid] = std::move(acc);
  }
  return out;
}

/// Docs positive for every approach and graded relevant by the oracle, ranked
/// by their minimum score across `tables`. Every member of the approach
/// intersection must have an oracle grade.
inline Run ensemble_unanimity(std::span<const PositiveSet* const> positives, const OracleGrades& oracle,
                              std::span<const ScoreTable* const> tables, std::size_t cap = kRunCap,
                              std::string tag = "unanimity") {
  const auto members = intersect_all(positives);
  std::string missing;
  std::size_t n_missing = 0;
  for (const auto& [sid, docs] : members.docs)
    for (const auto& doc : docs)
      if (!oracle.find(sid, doc)) {
        if (n_missing++ < 20) missing += " (" + std::to_string(sid) + ", " + doc + ")";
      }
  if (n_missing)
    throw ValidationError("missing oracle grades for " + std::to_string(n_missing) + " pairs:" + missing +
                          (n_missing > 20 ? " ..." : ""));

  Run run;
  run.tag = std::move(tag);
  for (const auto& [sid, docs] : members.docs) {
    std::vector<std::pair<std::string, double>> kept;
    for (const auto& doc : docs) {
      if (oracle.find(sid, doc) != 1) continue;
      double lo = std::numeric_limits<double>::infinity();
      bool everywhere = true;
      for (const auto* t : tables) {
        const auto* s = t->find(sid, doc);
        if (!s) {
          everywhere = false;
          break;
        }
        lo = std::min(lo, *s);
      }
      if (everywhere) kept.emplace_back(doc, lo);
    }
    run.per_symptom[sid] = rank_entries(std::move(kept), cap);
  }
  return run;
}

// ---------------------------------------------------------------------------
// TREC run files: `<symptom_id> Q0 <doc_id> <rank> <score> <tag>`

inline constexpr int kRunScoreDecimals = 6;

inline void write_run_file(std::ostream& out, const Run& run) {
  validate_run(run, kNoCap);
  if (run.tag.empty() || run.tag.find_first_of(" \t\n") != std::string::npos)
    throw ValidationError("run tag must be a non-empty single token");
  for (const auto& [sid, entries] : run.per_symptom)
    for (const auto& e : entries) {
      if (e.doc_id.find_first_of(" \t\n") != std::string::npos)
        throw ValidationError("doc_id contains whitespace: '" + e.doc_id + "'");
      out << sid << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << text::format_fixed(e.score, kRunScoreDecimals)
          << ' ' << run.tag << '\n';
    }
}

inline Run parse_run_file(std::istream& in) {
  Run run;
  std::map<SymptomId, std::set<std::string>> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::chomp(raw);
    if (text::trim(line).empty()) continue;
    const auto f = text::split_ws(line);
    if (f.size() != 6) throw ParseError("expected 6 fields", line_no);
    const auto sid = text::parse_int<int>(f[0]);
    if (!sid || !is_valid_symptom(*sid)) throw ParseError("bad symptom id", line_no);
    if (f[1] != "Q0") throw ParseError("expected Q0 in second column", line_no);
    const auto rank = text::parse_int<std::size_t>(f[3]);
    const auto score = text::parse_double(f[4]);
    if (!rank) throw ParseError("bad rank", line_no);
    if (!score || !std::isfinite(*score)) throw ParseError("bad score", line_no);
    if (run.tag.empty())
      run.tag = std::string(f[5]);
    else if (run.tag != f[5])
      throw ParseError("mixed run tags '" + run.tag + "' and '" + std::string(f[5]) + "'", line_no);
    auto& entries = run.per_symptom[*sid];
    if (*rank != entries.size() + 1)
      throw ParseError("rank " + std::to_string(*rank) + " where " + std::to_string(entries.size() + 1) +
                           " was expected",
                       line_no);
    if (!entries.empty() && *score > entries.back().score) throw ParseError("score increases with rank", line_no);
    std::string doc(f[2]);
    if (!seen[*sid].insert(doc).second) throw ParseError("duplicate doc '" + doc + "'", line_no);
    entries.push_back({std::move(doc), *rank, *score});
  }
  return run;
}

/// `symptom_id \t approach_tag \t f1`
inline F1Table read_f1_table(std::istream& in) {
  F1Table t;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::chomp(raw);
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 3) throw ParseError("expected symptom_id<TAB>approach_tag<TAB>f1", line_no);
    const auto sid = text::parse_int<int>(text::trim(f[0]));
    const auto v = text::parse_double(text::trim(f[2]));
    if (!sid || !is_valid_symptom(*sid)) throw ParseError("bad symptom id", line_no);
    if (!v || !std::isfinite(*v)) throw ParseError("bad f1 value", line_no);
    t.values[{*sid, std::string(text::trim(f[1]))}] = *v;
  }
  return t;
}

inline void write_f1_table(std::ostream& out, const F1Table& t) {
  for (const auto& [key, v] : t.values) out << key.first << '\t' << key.second << '\t' << text::format_exact(v) << '\n';
}

/// `symptom_id \t doc_id \t grade`
inline OracleGrades read_grades(std::istream& in) {
  OracleGrades g;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::chomp(raw);
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 3) throw ParseError("expected symptom_id<TAB>doc_id<TAB>grade", line_no);
    const auto sid = text::parse_int<int>(text::trim(f[0]));
    const auto grade = text::parse_int<int>(text::trim(f[2]));
    if (!sid || !is_valid_symptom(*sid)) throw ParseError("bad symptom id", line_no);
    if (!grade || (*grade != 0 && *grade != 1)) throw ParseError("grade must be 0 or 1", line_no);
    g.grades[*sid][std::string(text::trim(f[1]))] = *grade;
  }
  return g;
}

inline void write_grades(std::ostream& out, const OracleGrades& g) {
  for (const auto& [sid, docs] : g.grades)
    for (const auto& [doc, grade] : docs) out << sid << '\t' << doc << '\t' << grade << '\n';
}

}  // namespace symptomrank
