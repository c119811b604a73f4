#pragma once

/// \file dataset.hpp
/// \brief Labeled instances: the three-level regression mapping, binarization,
/// deterministic stratified splitting and synthetic-positive merging.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "symptomrank/error.hpp"
#include "symptomrank/questionnaire.hpp"
#include "symptomrank/text.hpp"
#include "symptomrank/types.hpp"

namespace symptomrank {

/// The three label combinations that can occur on a consistent instance.
enum class LabelClass { negative = 0, majority_only = 1, unanimous = 2 };

/// Regression target in {0, 2/3, 1}.
struct RegressionTarget {
  LabelClass label_class = LabelClass::negative;
  double value = 0.0;

  friend bool operator==(const RegressionTarget&, const RegressionTarget&) = default;
};

inline constexpr double kMajorityOnlyTarget = 2.0 / 3.0;
inline constexpr double kPositiveThreshold = 0.5;

inline RegressionTarget map_labels(const LabeledInstance& inst) {
  if (inst.unanimity && !inst.majority)
    throw ValidationError("inconsistent annotation for (" + inst.doc_id + ", " +
                          std::to_string(inst.symptom_id) + "): unanimity=1 but majority=0");
  if (inst.unanimity) return {LabelClass::unanimous, 1.0};
  if (inst.majority) return {LabelClass::majority_only, kMajorityOnlyTarget};
  return {LabelClass::negative, 0.0};
}

/// True iff score >= threshold.
inline bool binarize(double score, double threshold = kPositiveThreshold) {
  if (std::isnan(score)) throw ValidationError("cannot binarize NaN score");
  return score >= threshold;
}

enum class Split { train, val };

inline const char* to_string(Split s) { return s == Split::train ? "train" : "val"; }

struct SplitAssignment {
  std::string doc_id;
  SymptomId symptom_id = 1;
  Split split = Split::train;

  friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

/// Number of training members for a stratum of `size` instances.
inline std::size_t stratum_train_count(std::size_t size, double train_fraction) {
  if (size == 0) return 0;
  if (size == 1) return 1;
  auto n = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(size)));
  return std::clamp<std::size_t>(n, 1, size - 1);
}

/// Position key of an instance inside its stratum. Depends only on
/// (seed, doc_id, symptom_id), so the split survives input reordering.
inline std::uint64_t split_order_key(std::uint64_t seed, const std::string& doc_id, SymptomId symptom) {
  const auto h = text::fnv1a64(doc_id) ^ (static_cast<std::uint64_t>(symptom) * 0x9e3779b97f4a7c15ULL);
  return text::splitmix64(seed ^ text::splitmix64(h));
}

/// Splits instances into train/val within each (symptom, label class) stratum.
/// Output is in input order.
inline std::vector<SplitAssignment> stratified_split(const std::vector<LabeledInstance>& instances,
                                                     double train_fraction, std::uint64_t seed) {
  if (instances.empty()) throw ValidationError("stratified_split: no instances");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("train fraction must lie in (0, 1)");

  std::map<std::pair<SymptomId, LabelClass>, std::vector<std::size_t>> strata;
  std::set<std::pair<std::string, SymptomId>> seen;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    if (!seen.emplace(inst.doc_id, inst.symptom_id).second)
      throw ValidationError("duplicate labeled pair (" + inst.doc_id + ", " +
                            std::to_string(inst.symptom_id) + ")");
    strata[{inst.symptom_id, map_labels(inst).label_class}].push_back(i);
  }

  std::vector<SplitAssignment> out(instances.size());
  for (auto& [key, members] : strata) {
    std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
    keyed.reserve(members.size());
    for (auto i : members) keyed.emplace_back(split_order_key(seed, instances[i].doc_id, key.first), i);
    std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return instances[a.second].doc_id < instances[b.second].doc_id;
    });
    const auto n_train = stratum_train_count(keyed.size(), train_fraction);
    for (std::size_t r = 0; r < keyed.size(); ++r) {
      const auto i = keyed[r].second;
      out[i] = {instances[i].doc_id, instances[i].symptom_id, r < n_train ? Split::train : Split::val};
    }
  }
  return out;
}

/// Per-symptom count of synthetic instances added by merge_synthetic.
struct SyntheticProvenance {
  std::map<SymptomId, std::size_t> per_symptom;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& [_, c] : per_symptom) n += c;
    return n;
  }
};

struct MergeResult {
  std::vector<LabeledInstance> instances;
  SyntheticProvenance provenance;
};

inline constexpr std::string_view kSyntheticPrefix = "synth-";

/// Appends synthetic positives to the training instances. Synthetic doc_ids
/// get the "synth-" prefix when they lack it.
inline MergeResult merge_synthetic(const std::vector<LabeledInstance>& train,
                                   const std::vector<LabeledInstance>& synth) {
  MergeResult result;
  result.instances = train;
  std::unordered_set<std::string> real_ids;
  for (const auto& t : train) real_ids.insert(t.doc_id);
  for (const auto& s : synth) {
    if (!s.majority || !s.unanimity)
      throw ValidationError("synthetic instance '" + s.doc_id + "' is not labeled positive");
    if (!s.synthetic) throw ValidationError("instance '" + s.doc_id + "' is not marked synthetic");
    auto inst = s;
    if (!inst.doc_id.starts_with(kSyntheticPrefix)) inst.doc_id = std::string(kSyntheticPrefix) + inst.doc_id;
    if (real_ids.contains(inst.doc_id))
      throw ValidationError("synthetic doc_id '" + inst.doc_id + "' collides with a real doc_id");
    result.provenance.per_symptom[inst.symptom_id] += 1;
    result.instances.push_back(std::move(inst));
  }
  return result;
}

// ---------------------------------------------------------------------------
// File formats

namespace detail {

template <typename F>
void for_each_data_line(std::istream& in, F&& f) {
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::chomp(raw);
    if (text::trim(line).empty() || line.front() == '#') continue;
    f(line, line_no);
  }
}

inline bool parse_bit(std::string_view s, std::size_t line_no) {
  s = text::trim(s);
  if (s == "0") return false;
  if (s == "1") return true;
  throw ParseError("expected 0 or 1, got '" + std::string(s) + "'", line_no);
}

inline SymptomId parse_symptom(std::string_view s, std::size_t line_no) {
  const auto v = text::parse_int<int>(text::trim(s));
  if (!v || !is_valid_symptom(*v)) throw ParseError("bad symptom id '" + std::string(s) + "'", line_no);
  return *v;
}

}  // namespace detail

/// `doc_id \t symptom_id \t majority \t unanimity`
inline std::vector<LabeledInstance> read_labels(std::istream& in) {
  std::vector<LabeledInstance> out;
  std::set<std::pair<std::string, SymptomId>> seen;
  detail::for_each_data_line(in, [&](std::string_view line, std::size_t n) {
    const auto f = text::split(line, '\t');
    if (f.size() != 4) throw ParseError("expected 4 tab-separated fields", n);
    LabeledInstance inst;
    inst.doc_id = std::string(text::trim(f[0]));
    if (inst.doc_id.empty()) throw ParseError("empty doc_id", n);
    inst.symptom_id = detail::parse_symptom(f[1], n);
    inst.majority = detail::parse_bit(f[2], n);
    inst.unanimity = detail::parse_bit(f[3], n);
    if (inst.unanimity && !inst.majority) throw ParseError("unanimity=1 with majority=0", n);
    if (!seen.emplace(inst.doc_id, inst.symptom_id).second)
      throw ParseError("duplicate (doc_id, symptom_id)", n);
    out.push_back(std::move(inst));
  });
  return out;
}

inline void write_labels(std::ostream& out, const std::vector<LabeledInstance>& labels) {
  for (const auto& l : labels)
    out << l.doc_id << '\t' << l.symptom_id << '\t' << int(l.majority) << '\t' << int(l.unanimity) << '\n';
}

/// `doc_id \t symptom_id \t train|val`
inline std::vector<SplitAssignment> read_split(std::istream& in) {
  std::vector<SplitAssignment> out;
  detail::for_each_data_line(in, [&](std::string_view line, std::size_t n) {
    const auto f = text::split(line, '\t');
    if (f.size() != 3) throw ParseError("expected 3 tab-separated fields", n);
    SplitAssignment a;
    a.doc_id = std::string(text::trim(f[0]));
    a.symptom_id = detail::parse_symptom(f[1], n);
    const auto s = text::trim(f[2]);
    if (s == "train")
      a.split = Split::train;
    else if (s == "val")
      a.split = Split::val;
    else
      throw ParseError("expected train or val", n);
    out.push_back(std::move(a));
  });
  return out;
}

inline void write_split(std::ostream& out, const std::vector<SplitAssignment>& split) {
  for (const auto& a : split) out << a.doc_id << '\t' << a.symptom_id << '\t' << to_string(a.split) << '\n';
}

struct SyntheticSentence {
  std::string doc_id;
  SymptomId symptom_id = 1;
  std::string text;
  std::string generator_tag;

  friend bool operator==(const SyntheticSentence&, const SyntheticSentence&) = default;
};

/// `doc_id \t symptom_id \t text \t generator_tag`; text is backslash-escaped.
inline std::vector<SyntheticSentence> read_synthetic(std::istream& in) {
  std::vector<SyntheticSentence> out;
  detail::for_each_data_line(in, [&](std::string_view line, std::size_t n) {
    const auto f = text::split(line, '\t');
    if (f.size() != 4) throw ParseError("expected 4 tab-separated fields", n);
    out.push_back({std::string(text::trim(f[0])), detail::parse_symptom(f[1], n), text::unescape_field(f[2]),
                   std::string(text::trim(f[3]))});
  });
  return out;
}

inline void write_synthetic(std::ostream& out, const std::vector<SyntheticSentence>& rows) {
  for (const auto& r : rows)
    out << r.doc_id << '\t' << r.symptom_id << '\t' << text::escape_field(r.text) << '\t' << r.generator_tag
        << '\n';
}

inline std::vector<LabeledInstance> to_instances(const std::vector<SyntheticSentence>& rows) {
  std::vector<LabeledInstance> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({r.doc_id, r.symptom_id, true, true, true});
  return out;
}

// ---------------------------------------------------------------------------
// Per-symptom label counts, laid out like the development-split table:
// symptom | train (maj/unan) | val (maj/unan) | total (maj/unan)

struct LabelCounts {
  std::size_t total = 0, majority = 0, unanimity = 0;

  LabelCounts& operator+=(const LabelCounts& o) {
    total += o.total;
    majority += o.majority;
    unanimity += o.unanimity;
    return *this;
  }
};

struct SplitCountTable {
  std::map<SymptomId, LabelCounts> train, val;
};

inline SplitCountTable count_split(const std::vector<LabeledInstance>& labels,
                                   const std::vector<SplitAssignment>& split) {
  std::map<std::pair<std::string, SymptomId>, Split> where;
  for (const auto& a : split) where[{a.doc_id, a.symptom_id}] = a.split;
  SplitCountTable t;
  for (const auto& l : labels) {
    const auto it = where.find({l.doc_id, l.symptom_id});
    if (it == where.end())
      throw ValidationError("no split assignment for (" + l.doc_id + ", " + std::to_string(l.symptom_id) + ")");
    auto& c = (it->second == Split::train ? t.train : t.val)[l.symptom_id];
    c += {1, std::size_t(l.majority), std::size_t(l.unanimity)};
  }
  return t;
}

inline std::string format_counts(const LabelCounts& c) {
  return std::to_string(c.total) + " (" + std::to_string(c.majority) + "/" + std::to_string(c.unanimity) + ")";
}

inline void render_count_table(std::ostream& out, const SplitCountTable& t, const Questionnaire* q) {
  auto name_of = [&](SymptomId id) { return q ? q->at(id).name : "symptom " + std::to_string(id); };
  std::size_t width = 5;
  for (int s = 1; s <= kNumSymptoms; ++s) width = std::max(width, name_of(s).size());
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  auto get = [](const std::map<SymptomId, LabelCounts>& m, SymptomId s) {
    const auto it = m.find(s);
    return it == m.end() ? LabelCounts{} : it->second;
  };
  out << pad("Symptom", width) << "  " << pad("train", 18) << "  " << pad("val", 18) << "  Total\n";
  LabelCounts tr_sum, va_sum;
  for (int s = 1; s <= kNumSymptoms; ++s) {
    const auto tr = get(t.train, s), va = get(t.val, s);
    auto tot = tr;
    tot += va;
    tr_sum += tr;
    va_sum += va;
    out << pad(name_of(s), width) << "  " << pad(format_counts(tr), 18) << "  " << pad(format_counts(va), 18)
        << "  " << format_counts(tot) << '\n';
  }
  auto all = tr_sum;
  all += va_sum;
  out << pad("Total", width) << "  " << pad(format_counts(tr_sum), 18) << "  " << pad(format_counts(va_sum), 18)
      << "  " << format_counts(all) << '\n';
}

inline void write_count_table_tsv(std::ostream& out, const SplitCountTable& t) {
  out << "symptom_id\ttrain\ttrain_majority\ttrain_unanimity\tval\tval_majority\tval_unanimity\ttotal\n";
  for (int s = 1; s <= kNumSymptoms; ++s) {
    LabelCounts tr, va;
    if (auto it = t.train.find(s); it != t.train.end()) tr = it->second;
    if (auto it = t.val.find(s); it != t.val.end()) va = it->second;
    out << s << '\t' << tr.total << '\t' << tr.majority << '\t' << tr.unanimity << '\t' << va.total << '\t'
        << va.majority << '\t' << va.unanimity << '\t' << tr.total + va.total << '\n';
  }
}

}  // namespace symptomrank
