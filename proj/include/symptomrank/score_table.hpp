#pragma once

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>

#include "symptomrank/error.hpp"
#include "symptomrank/text.hpp"
#include "symptomrank/types.hpp"

namespace symptomrank {

/// Relevance scores of one approach, keyed by (symptom, doc_id). No NaNs.
struct ScoreTable {
  std::string tag;
  std::map<SymptomId, std::map<std::string, double>> scores;

  void set(SymptomId symptom, const std::string& doc_id, double score) {
    if (!std::isfinite(score))
      throw ValidationError("non-finite score for (" + std::to_string(symptom) + ", " + doc_id + ")");
    scores[symptom][doc_id] = score;
  }

  const double* find(SymptomId symptom, const std::string& doc_id) const {
    const auto s = scores.find(symptom);
    if (s == scores.end()) return nullptr;
    const auto d = s->second.find(doc_id);
    return d == s->second.end() ? nullptr : &d->second;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [_, m] : scores) n += m.size();
    return n;
  }

  friend bool operator==(const ScoreTable&, const ScoreTable&) = default;
};

/// Per-symptom set of doc_ids one approach classified as positive.
struct PositiveSet {
  std::map<SymptomId, std::set<std::string>> docs;

  bool contains(SymptomId s, const std::string& doc_id) const {
    const auto it = docs.find(s);
    return it != docs.end() && it->second.contains(doc_id);
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [_, d] : docs) n += d.size();
    return n;
  }

  friend bool operator==(const PositiveSet&, const PositiveSet&) = default;
};

/// Reads `symptom_id \t doc_id \t score` rows. Lines starting with '#' are comments.
inline ScoreTable ingest_score_table(std::istream& in, std::string tag) {
  ScoreTable table;
  table.tag = std::move(tag);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::chomp(raw);
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 3) throw ParseError("expected symptom_id<TAB>doc_id<TAB>score", line_no);
    const auto sid = text::parse_int<int>(text::trim(f[0]));
    if (!sid || !is_valid_symptom(*sid)) throw ParseError("bad symptom id", line_no);
    const auto doc = std::string(text::trim(f[1]));
    if (doc.empty()) throw ParseError("empty doc_id", line_no);
    const auto score = text::parse_double(text::trim(f[2]));
    if (!score) throw ParseError("bad score '" + std::string(f[2]) + "'", line_no);
    if (!std::isfinite(*score)) throw ParseError("non-finite score", line_no);
    if (!table.scores[*sid].emplace(doc, *score).second)
      throw ParseError("duplicate key (" + std::to_string(*sid) + ", " + doc + ")", line_no);
  }
  return table;
}

/// Writes rows sorted by symptom then doc_id with round-trip exact scores.
inline void write_score_table(std::ostream& out, const ScoreTable& table) {
  for (const auto& [sid, docs] : table.scores)
    for (const auto& [doc, score] : docs) out << sid << '\t' << doc << '\t' << text::format_exact(score) << '\n';
}

/// `symptom_id \t doc_id` rows.
inline PositiveSet read_positive_set(std::istream& in) {
  PositiveSet set;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::chomp(raw);
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 2) throw ParseError("expected symptom_id<TAB>doc_id", line_no);
    const auto sid = text::parse_int<int>(text::trim(f[0]));
    if (!sid || !is_valid_symptom(*sid)) throw ParseError("bad symptom id", line_no);
    set.docs[*sid].insert(std::string(text::trim(f[1])));
  }
  return set;
}

inline void write_positive_set(std::ostream& out, const PositiveSet& set) {
  for (const auto& [sid, docs] : set.docs)
    for (const auto& d : docs) out << sid << '\t' << d << '\n';
}

}  // namespace symptomrank
