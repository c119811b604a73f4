#pragma once

/// \file corpus.hpp
/// \brief TREC sentence corpora: streaming parser, writer, duplicate keys and
/// duplicate removal with label reconciliation.

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <streambuf>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "symptomrank/error.hpp"
#include "symptomrank/text.hpp"
#include "symptomrank/types.hpp"

namespace symptomrank {

/// One corpus sentence with its optional neighbouring sentences.
struct SentenceRecord {
  std::string doc_id;
  std::string text;
  std::optional<std::string> pre;
  std::optional<std::string> post;

  friend bool operator==(const SentenceRecord&, const SentenceRecord&) = default;
};

/// Malformed TREC input. `offset` is the byte position where the problem was
/// detected and `ordinal` the 1-based index of the enclosing <DOC>.
class TrecParseError : public ParseError {
 public:
  TrecParseError(const std::string& what, std::size_t offset, std::size_t ordinal)
      : ParseError("doc #" + std::to_string(ordinal) + " at byte " + std::to_string(offset) + ": " +
                   what),
        offset_(offset),
        ordinal_(ordinal) {}

  std::size_t offset() const noexcept { return offset_; }
  std::size_t ordinal() const noexcept { return ordinal_; }

 private:
  std::size_t offset_;
  std::size_t ordinal_;
};

/// Pull parser over a stream of <DOC> blocks. Memory use is bounded by the
/// largest single document.
class TrecReader {
 public:
  explicit TrecReader(std::istream& in) : buf_(in.rdbuf()) {}

  /// Next record, or nullopt at clean end of input.
  std::optional<SentenceRecord> next() {
    skip_ws();
    if (peek() == EOF) return std::nullopt;
    ++ordinal_;
    const auto doc_start = offset_;
    if (get() != '<' || read_tag_name() != "DOC") fail("expected <DOC>", doc_start);

    SentenceRecord rec;
    bool have_docno = false, have_text = false;
    while (true) {
      skip_ws();
      const auto tag_start = offset_;
      const int c = get();
      if (c == EOF) fail("unclosed <DOC>", tag_start);
      if (c != '<') fail("unexpected character data between elements", tag_start);
      const auto name = read_tag_name();
      if (name == "/DOC") break;
      if (name.empty() || name[0] == '/') fail("unexpected tag <" + name + ">", tag_start);
      auto content = std::string(text::trim(read_content(name, tag_start)));
      if (name == "DOCNO") {
        if (have_docno) fail("repeated <DOCNO>", tag_start);
        if (content.empty()) fail("empty <DOCNO>", tag_start);
        rec.doc_id = std::move(content);
        have_docno = true;
      } else if (name == "TEXT") {
        if (have_text) fail("repeated <TEXT>", tag_start);
        rec.text = std::move(content);
        have_text = true;
      } else if (name == "PRE") {
        rec.pre = std::move(content);
      } else if (name == "POST") {
        rec.post = std::move(content);
      }
      // Other elements are tolerated and ignored.
    }
    if (!have_docno) fail("missing <DOCNO>", doc_start);
    if (!have_text) fail("missing <TEXT>", doc_start);
    if (rec.text.empty()) fail("empty <TEXT>", doc_start);
    return rec;
  }

  std::size_t documents_read() const noexcept { return ordinal_; }
  std::size_t bytes_read() const noexcept { return offset_; }

 private:
  int peek() { return buf_ ? buf_->sgetc() : EOF; }

  int get() {
    const int c = buf_ ? buf_->sbumpc() : EOF;
    if (c != EOF) ++offset_;
    return c;
  }

  void skip_ws() {
    while (true) {
      const int c = peek();
      if (c == EOF || !text::is_ascii_space(static_cast<char>(c))) return;
      get();
    }
  }

  // Reads a tag name after '<' up to and including '>'.
  std::string read_tag_name() {
    std::string name;
    while (true) {
      const int c = get();
      if (c == EOF || c == '<' || name.size() > 32) fail("unterminated tag", offset_);
      if (c == '>') return name;
      name.push_back(static_cast<char>(c));
    }
  }

  std::string read_content(const std::string& name, std::size_t tag_start) {
    const std::string close = "</" + name + ">";
    static constexpr std::string_view kDocClose = "</DOC>";
    std::string content;
    while (true) {
      const int c = get();
      if (c == EOF) fail("unclosed <" + name + ">", tag_start);
      content.push_back(static_cast<char>(c));
      if (content.size() >= close.size() &&
          std::string_view(content).substr(content.size() - close.size()) == close) {
        content.resize(content.size() - close.size());
        return content;
      }
      if (content.size() >= kDocClose.size() &&
          std::string_view(content).substr(content.size() - kDocClose.size()) == kDocClose)
        fail("unclosed <" + name + ">", tag_start);
    }
  }

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw TrecParseError(what, at, ordinal_);
  }

  std::streambuf* buf_;
  std::size_t offset_ = 0;
  std::size_t ordinal_ = 0;
};

/// Parses a whole corpus and checks doc_id uniqueness.
inline std::vector<SentenceRecord> parse_trec_corpus(std::istream& in) {
  TrecReader reader(in);
  std::vector<SentenceRecord> out;
  std::unordered_map<std::string, std::size_t> seen;
  while (auto rec = reader.next()) {
    const auto ordinal = reader.documents_read();
    auto [it, inserted] = seen.emplace(rec->doc_id, ordinal);
    if (!inserted)
      throw ValidationError("duplicate doc_id '" + rec->doc_id + "' in docs #" +
                            std::to_string(it->second) + " and #" + std::to_string(ordinal));
    out.push_back(std::move(*rec));
  }
  return out;
}

inline void write_trec_record(std::ostream& out, const SentenceRecord& rec) {
  out << "<DOC>\n<DOCNO>" << rec.doc_id << "</DOCNO>\n";
  if (rec.pre) out << "<PRE>" << *rec.pre << "</PRE>\n";
  out << "<TEXT>" << rec.text << "</TEXT>\n";
  if (rec.post) out << "<POST>" << *rec.post << "</POST>\n";
  out << "</DOC>\n";
}

inline void write_trec_corpus(std::ostream& out, const std::vector<SentenceRecord>& records) {
  for (const auto& r : records) write_trec_record(out, r);
}

/// Duplicate-detection key: lowercase, whitespace-normalised, without
/// trailing sentence punctuation.
struct NormalizedKey {
  std::string key;

  friend bool operator==(const NormalizedKey&, const NormalizedKey&) = default;
  friend auto operator<=>(const NormalizedKey&, const NormalizedKey&) = default;
};

inline NormalizedKey normalize_text(std::string_view input) {
  std::string out;
  out.reserve(input.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < input.size();) {
    const auto d = text::decode_utf8(input, i);
    if (d.valid && text::is_unicode_space(d.cp)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      if (d.valid)
        text::append_utf8(out, text::to_lower(d.cp));
      else
        out.push_back(input[i]);
    }
    i += d.length;
  }
  static constexpr std::string_view kEllipsis = "\xE2\x80\xA6";
  while (!out.empty()) {
    const char last = out.back();
    if (last == '.' || last == '!' || last == '?' || last == ' ') {
      out.pop_back();
    } else if (std::string_view(out).ends_with(kEllipsis)) {
      out.resize(out.size() - kEllipsis.size());
    } else {
      break;
    }
  }
  return {std::move(out)};
}

struct DedupResult {
  std::vector<SentenceRecord> records;
  std::vector<LabeledInstance> labels;
  /// dropped doc_id -> kept doc_id
  std::map<std::string, std::string> merged_into;
};

namespace detail {
// Strict majority; an even split resolves to false.
inline bool vote(int positives, int total) { return 2 * positives > total; }
}  // namespace detail

/// Collapses records with equal NormalizedKey onto their first occurrence and
/// re-votes the labels of each (kept record, symptom) group per label kind.
inline DedupResult dedup_with_reconciliation(const std::vector<SentenceRecord>& records,
                                             const std::vector<LabeledInstance>& labels) {
  DedupResult result;
  std::unordered_map<std::string, std::size_t> key_to_kept;
  std::unordered_map<std::string, std::string> doc_to_kept;
  for (const auto& rec : records) {
    auto key = normalize_text(rec.text).key;
    auto [it, inserted] = key_to_kept.emplace(std::move(key), result.records.size());
    if (inserted) {
      result.records.push_back(rec);
      doc_to_kept.emplace(rec.doc_id, rec.doc_id);
    } else {
      const auto& kept = result.records[it->second].doc_id;
      doc_to_kept.emplace(rec.doc_id, kept);
      result.merged_into.emplace(rec.doc_id, kept);
    }
  }

  struct Votes {
    int n = 0, majority = 0, unanimity = 0;
    bool synthetic = false;
  };
  std::vector<std::pair<std::string, SymptomId>> order;
  std::map<std::pair<std::string, SymptomId>, Votes> groups;
  for (const auto& lab : labels) {
    const auto it = doc_to_kept.find(lab.doc_id);
    if (it == doc_to_kept.end())
      throw ValidationError("label references unknown doc_id '" + lab.doc_id + "'");
    auto key = std::make_pair(it->second, lab.symptom_id);
    auto [g, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    g->second.n += 1;
    g->second.majority += lab.majority ? 1 : 0;
    g->second.unanimity += lab.unanimity ? 1 : 0;
    g->second.synthetic = g->second.synthetic || lab.synthetic;
  }
  result.labels.reserve(order.size());
  for (const auto& key : order) {
    const auto& v = groups.at(key);
    result.labels.push_back({key.first, key.second, detail::vote(v.majority, v.n),
                             detail::vote(v.unanimity, v.n), v.synthetic});
  }
  return result;
}

}  // namespace symptomrank
