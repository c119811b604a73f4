#pragma once

/// \file similarity.hpp
/// \brief Embedding storage, cosine scoring against questionnaire options
/// (maximum over a symptom's four options) and threshold calibration.
///
/// Dot products and norms are accumulated in double precision, element by
/// element in index order. Every score therefore has one well-defined value,
/// independent of thread count or batching.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <limits>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "symptomrank/error.hpp"
#include "symptomrank/score_table.hpp"
#include "symptomrank/text.hpp"
#include "symptomrank/types.hpp"

namespace symptomrank {

using VectorView = std::span<const float>;

/// Immutable-after-load set of equal-length, finite vectors keyed by id.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dimension = 0) : dimension_(dimension) {}

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::size_t row) const { return ids_.at(row); }

  VectorView row(std::size_t i) const { return {data_.data() + i * dimension_, dimension_}; }

  std::optional<std::size_t> find(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  VectorView at(const std::string& id) const {
    const auto i = find(id);
    if (!i) throw ValidationError("no embedding for '" + id + "'");
    return row(*i);
  }

  /// Adds a vector, fixing the dimension on first insert.
  void add(const std::string& id, VectorView v) {
    if (dimension_ == 0 && ids_.empty()) dimension_ = v.size();
    const auto ordinal = std::to_string(ids_.size() + 1);
    if (v.size() != dimension_ || dimension_ == 0)
      throw ValidationError("record #" + ordinal + " ('" + id + "'): dimension " + std::to_string(v.size()) +
                            " != " + std::to_string(dimension_));
    for (float x : v)
      if (!std::isfinite(x)) throw ValidationError("record #" + ordinal + " ('" + id + "'): non-finite component");
    if (!index_.emplace(id, ids_.size()).second)
      throw ValidationError("record #" + ordinal + ": duplicate id '" + id + "'");
    ids_.push_back(id);
    data_.insert(data_.end(), v.begin(), v.end());
  }

  void reserve(std::size_t n) {
    ids_.reserve(n);
    data_.reserve(n * dimension_);
    index_.reserve(n);
  }

 private:
  std::size_t dimension_;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Embedding files
//
// Binary: "EMB1", u32 LE dimension, then per record: u16 LE id length, id
// bytes, dimension x f32 LE.
// Text:   one record per line, `doc_id \t f1,f2,...,fD`.

inline constexpr char kEmbeddingMagic[4] = {'E', 'M', 'B', '1'};

namespace detail {

inline bool read_exact(std::istream& in, void* dst, std::size_t n) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

template <typename T>
T from_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

inline EmbeddingStore load_binary_embeddings(std::istream& in) {
  unsigned char head[8];
  if (!read_exact(in, head, 8)) throw ParseError("embedding file: truncated header");
  const auto dim = from_le<std::uint32_t>(head + 4);
  if (dim == 0) throw ParseError("embedding file: dimension 0");
  EmbeddingStore store(dim);
  std::vector<unsigned char> raw(std::size_t(dim) * 4);
  std::vector<float> vec(dim);
  std::string id;
  for (std::size_t ordinal = 1;; ++ordinal) {
    unsigned char lenbuf[2];
    in.read(reinterpret_cast<char*>(lenbuf), 2);
    if (in.gcount() == 0) break;
    const auto where = "embedding record #" + std::to_string(ordinal);
    if (in.gcount() != 2) throw ParseError(where + ": truncated id length");
    const auto len = from_le<std::uint16_t>(lenbuf);
    if (len == 0) throw ParseError(where + ": empty id");
    id.resize(len);
    if (!read_exact(in, id.data(), len)) throw ParseError(where + ": truncated id");
    if (!read_exact(in, raw.data(), raw.size()))
      throw ParseError(where + " ('" + id + "'): truncated vector, expected " + std::to_string(dim) + " floats");
    for (std::size_t d = 0; d < dim; ++d) vec[d] = std::bit_cast<float>(from_le<std::uint32_t>(&raw[4 * d]));
    try {
      store.add(id, vec);
    } catch (const ValidationError& e) {
      throw ParseError(std::string("embedding file: ") + e.what());
    }
  }
  return store;
}

inline EmbeddingStore load_text_embeddings(std::istream& in) {
  EmbeddingStore store;
  std::string raw;
  std::vector<float> vec;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::chomp(raw);
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError("expected doc_id<TAB>components", line_no);
    const auto id = std::string(text::trim(line.substr(0, tab)));
    vec.clear();
    for (auto field : text::split(line.substr(tab + 1), ',')) {
      const auto v = text::parse_double(text::trim(field));
      if (!v) throw ParseError("bad component '" + std::string(field) + "'", line_no);
      vec.push_back(static_cast<float>(*v));
    }
    try {
      store.add(id, vec);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return store;
}

}  // namespace detail

/// Loads the binary format when the stream starts with "EMB1", otherwise the
/// text format.
inline EmbeddingStore load_embeddings(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  const auto got = in.gcount();
  in.clear();
  in.seekg(0);
  if (got == 4 && std::memcmp(magic, kEmbeddingMagic, 4) == 0) return detail::load_binary_embeddings(in);
  return detail::load_text_embeddings(in);
}

inline void write_embeddings_binary(std::ostream& out, const EmbeddingStore& store) {
  out.write(kEmbeddingMagic, 4);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.dimension()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& id = store.id(i);
    if (id.size() > 0xFFFF) throw ValidationError("id too long for binary embedding format: " + id);
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (float x : store.row(i)) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(x));
  }
}

inline void write_embeddings_text(std::ostream& out, const EmbeddingStore& store) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    out << store.id(i) << '\t';
    const auto v = store.row(i);
    for (std::size_t d = 0; d < v.size(); ++d) out << (d ? "," : "") << text::format_exact(double(v[d]));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Cosine scoring

inline double squared_norm(VectorView a) {
  double acc = 0.0;
  for (float x : a) acc += double(x) * double(x);
  return acc;
}

inline double dot(VectorView a, VectorView b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += double(a[i]) * double(b[i]);
  return acc;
}

inline double cosine(VectorView a, VectorView b) {
  if (a.size() != b.size())
    throw ValidationError("cosine: dimension mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  const double na = squared_norm(a), nb = squared_norm(b);
  if (na == 0.0 || nb == 0.0) throw ValidationError("cosine: zero-norm vector");
  return dot(a, b) / (std::sqrt(na) * std::sqrt(nb));
}

inline double max_option_similarity(VectorView sentence, std::span<const VectorView, kOptionsPerSymptom> options) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& o : options) best = std::max(best, cosine(sentence, o));
  return best;
}

/// Id under which the embedding of option `intensity` of `symptom` is stored.
inline std::string option_vector_id(SymptomId symptom, int intensity) {
  return "option:" + std::to_string(symptom) + ":" + std::to_string(intensity);
}

/// The 21 x 4 questionnaire option vectors, laid out for batch scoring.
class OptionVectors {
 public:
  static constexpr std::size_t kCount = std::size_t(kNumSymptoms) * kOptionsPerSymptom;

  /// Collects every `option:<symptom>:<intensity>` vector from `store`.
  /// Throws before any scoring if a symptom is incomplete, naming all of them.
  static OptionVectors from_store(const EmbeddingStore& store) {
    std::string missing;
    for (int s = 1; s <= kNumSymptoms; ++s)
      for (int j = 0; j < kOptionsPerSymptom; ++j)
        if (!store.find(option_vector_id(s, j))) {
          missing += (missing.empty() ? "" : ", ") + std::to_string(s);
          break;
        }
    if (!missing.empty()) throw ValidationError("missing option vectors for symptoms: " + missing);

    OptionVectors ov;
    ov.dimension_ = store.dimension();
    ov.vectors_.resize(kCount * ov.dimension_);
    ov.transposed_.resize(kCount * ov.dimension_);
    for (std::size_t k = 0; k < kCount; ++k) {
      const auto v = store.at(option_vector_id(int(k / kOptionsPerSymptom) + 1, int(k % kOptionsPerSymptom)));
      const double n2 = squared_norm(v);
      if (n2 == 0.0) throw ValidationError("zero-norm option vector " + std::to_string(k));
      ov.norms_[k] = std::sqrt(n2);
      std::copy(v.begin(), v.end(), ov.vectors_.begin() + std::ptrdiff_t(k * ov.dimension_));
      for (std::size_t d = 0; d < ov.dimension_; ++d) ov.transposed_[d * kCount + k] = double(v[d]);
    }
    return ov;
  }

  std::size_t dimension() const noexcept { return dimension_; }

  VectorView option(SymptomId s, int intensity) const {
    const auto k = std::size_t(s - 1) * kOptionsPerSymptom + std::size_t(intensity);
    return {vectors_.data() + k * dimension_, dimension_};
  }

  std::array<VectorView, kOptionsPerSymptom> options(SymptomId s) const {
    return {option(s, 0), option(s, 1), option(s, 2), option(s, 3)};
  }

  /// Writes the 21 maxcos scores of `sentence` to `out[0..20]`.
  void score(VectorView sentence, std::span<double, kNumSymptoms> out) const {
    if (sentence.size() != dimension_) throw ValidationError("sentence/option dimension mismatch");
    // One independent accumulator per option, each summed in index order, so
    // every dot product equals dot(sentence, option) exactly.
    std::array<double, kCount> acc{};
    double n2 = 0.0;
    const double* col = transposed_.data();
    for (std::size_t d = 0; d < dimension_; ++d, col += kCount) {
      const double x = sentence[d];
      n2 += x * x;
      for (std::size_t k = 0; k < kCount; ++k) acc[k] += x * col[k];
    }
    if (n2 == 0.0) throw ValidationError("cosine: zero-norm vector");
    const double ns = std::sqrt(n2);
    for (int s = 0; s < kNumSymptoms; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < kOptionsPerSymptom; ++j) {
        const auto k = std::size_t(s) * kOptionsPerSymptom + std::size_t(j);
        best = std::max(best, acc[k] / (ns * norms_[k]));
      }
      out[std::size_t(s)] = best;
    }
  }

 private:
  std::size_t dimension_ = 0;
  std::vector<float> vectors_;
  std::vector<double> transposed_;  // [d][k]
  std::array<double, kCount> norms_{};
};

/// Dense maxcos scores, row i = store row i, column s-1 = symptom s.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::vector<double> values;

  double at(std::size_t row, SymptomId s) const { return values[row * kNumSymptoms + std::size_t(s - 1)]; }
};

/// Scores every sentence of `sentences` against every symptom. Rows are split
/// into contiguous blocks, one per worker; results do not depend on `threads`.
/// Rows whose id is an option id are scored like any other row.
inline ScoreMatrix score_matrix(const EmbeddingStore& sentences, const OptionVectors& options,
                                unsigned threads = 1) {
  if (!sentences.empty() && sentences.dimension() != options.dimension())
    throw ValidationError("sentence dimension " + std::to_string(sentences.dimension()) +
                          " != option dimension " + std::to_string(options.dimension()));
  ScoreMatrix m;
  m.rows = sentences.size();
  m.values.resize(m.rows * kNumSymptoms);
  threads = std::max(1u, std::min<unsigned>(threads, unsigned(std::max<std::size_t>(1, m.rows))));

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      options.score(sentences.row(i), std::span<double, kNumSymptoms>(m.values.data() + i * kNumSymptoms, kNumSymptoms));
  };
  if (threads == 1) {
    work(0, m.rows);
    return m;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t block = (m.rows + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const auto b = std::min(m.rows, t * block), e = std::min(m.rows, b + block);
    pool.emplace_back([&, t, b, e] {
      try {
        work(b, e);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
  return m;
}

/// maxcos ScoreTable for every (symptom, sentence). Option rows in the store
/// (ids starting with "option:") are skipped.
inline ScoreTable score_corpus(const EmbeddingStore& sentences, const OptionVectors& options, unsigned threads = 1,
                               std::string tag = "maxcos") {
  const auto m = score_matrix(sentences, options, threads);
  ScoreTable table;
  table.tag = std::move(tag);
  for (int s = 1; s <= kNumSymptoms; ++s) {
    auto& col = table.scores[s];
    for (std::size_t i = 0; i < m.rows; ++i) {
      const auto& id = sentences.id(i);
      if (id.starts_with("option:")) continue;
      col.emplace_hint(col.end(), id, m.at(i, s));
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Threshold calibration

struct ThresholdStat {
  double threshold = 0.0;
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;

  friend bool operator==(const ThresholdStat&, const ThresholdStat&) = default;
};

/// Calibrated positive cut-off per symptom: mean + 2 * population std.
struct SymptomThresholds {
  std::map<SymptomId, ThresholdStat> per_symptom;

  double at(SymptomId s) const {
    const auto it = per_symptom.find(s);
    if (it == per_symptom.end()) throw ValidationError("no threshold for symptom " + std::to_string(s));
    return it->second.threshold;
  }

  friend bool operator==(const SymptomThresholds&, const SymptomThresholds&) = default;
};

inline constexpr double kThresholdStdMultiplier = 2.0;

inline ThresholdStat calibrate_threshold(std::span<const double> scores) {
  if (scores.size() < 2) throw ValidationError("threshold calibration needs at least 2 scores");
  double sum = 0.0;
  for (double x : scores) sum += x;
  const double n = double(scores.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : scores) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  return {mean + kThresholdStdMultiplier * sd, mean, sd, scores.size()};
}

inline SymptomThresholds calibrate_thresholds(const std::map<SymptomId, std::vector<double>>& train_scores) {
  SymptomThresholds t;
  for (const auto& [s, scores] : train_scores) {
    if (scores.size() < 2)
      throw ValidationError("symptom " + std::to_string(s) + " has " + std::to_string(scores.size()) +
                            " calibration scores, need at least 2");
    t.per_symptom[s] = calibrate_threshold(scores);
  }
  return t;
}

/// `symptom_id \t threshold \t mean \t std \t n`
inline void write_thresholds(std::ostream& out, const SymptomThresholds& t) {
  out << "# symptom_id\tthreshold\tmean\tstd\tn\n";
  for (const auto& [s, st] : t.per_symptom)
    out << s << '\t' << text::format_exact(st.threshold) << '\t' << text::format_exact(st.mean) << '\t'
        << text::format_exact(st.std) << '\t' << st.n << '\n';
}

inline SymptomThresholds read_thresholds(std::istream& in) {
  SymptomThresholds t;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::chomp(raw);
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 5) throw ParseError("expected 5 tab-separated fields", line_no);
    const auto s = text::parse_int<int>(f[0]);
    const auto thr = text::parse_double(f[1]), mean = text::parse_double(f[2]), sd = text::parse_double(f[3]);
    const auto n = text::parse_int<std::size_t>(f[4]);
    if (!s || !is_valid_symptom(*s) || !thr || !mean || !sd || !n) throw ParseError("malformed threshold row", line_no);
    t.per_symptom[*s] = {*thr, *mean, *sd, *n};
  }
  return t;
}

}  // namespace symptomrank
