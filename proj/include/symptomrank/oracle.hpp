#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "symptomrank/corpus.hpp"
#include "symptomrank/dataset.hpp"
#include "symptomrank/error.hpp"
#include "symptomrank/questionnaire.hpp"
#include "symptomrank/similarity.hpp"
#include "symptomrank/text.hpp"
#include "symptomrank/types.hpp"

namespace symptomrank {

// ---------------------------------------------------------------------------
// Exemplars

struct Exemplar {
  std::string doc_id;
  std::string text;
  std::vector<float> vector;
};

/// Labeled example sentences per symptom. Only the extreme targets are kept:
/// positives have target 1 (unanimous), negatives target 0.
struct ExemplarPool {
  struct Sides {
    std::vector<Exemplar> positives, negatives;
  };
  std::map<SymptomId, Sides> per_symptom;
};

/// Builds a pool from labeled instances. Instances with target 2/3, or whose
/// text or embedding is unknown, are skipped.
inline ExemplarPool build_exemplar_pool(const std::vector<LabeledInstance>& labels,
                                        const std::map<std::string, std::string>& texts,
                                        const EmbeddingStore& embeddings) {
  ExemplarPool pool;
  for (const auto& l : labels) {
    const auto target = map_labels(l).label_class;
    if (target == LabelClass::majority_only) continue;
    const auto t = texts.find(l.doc_id);
    const auto row = embeddings.find(l.doc_id);
    if (t == texts.end() || !row) continue;
    const auto v = embeddings.row(*row);
    auto& sides = pool.per_symptom[l.symptom_id];
    (target == LabelClass::unanimous ? sides.positives : sides.negatives)
        .push_back({l.doc_id, t->second, std::vector<float>(v.begin(), v.end())});
  }
  return pool;
}

struct SelectedExemplar {
  std::string doc_id;
  std::string text;
  int grade = 0;
  double similarity = 0.0;

  friend bool operator==(const SelectedExemplar&, const SelectedExemplar&) = default;
};

/// The k most similar positives and k most similar negatives (ties: smaller
/// doc_id first), presented as negative/positive pairs in descending
/// similarity. `exclude_doc_id` keeps the candidate itself out of its prompt.
inline std::vector<SelectedExemplar> select_exemplars(VectorView candidate, const ExemplarPool& pool,
                                                      SymptomId symptom, int k,
                                                      const std::string& exclude_doc_id = {}) {
  if (k < 0) throw ValidationError("k must be non-negative");
  if (k == 0) return {};
  const auto it = pool.per_symptom.find(symptom);
  static const ExemplarPool::Sides kNone;
  const auto& sides = it == pool.per_symptom.end() ? kNone : it->second;

  auto top = [&](const std::vector<Exemplar>& side, int grade, const char* name) {
    std::vector<SelectedExemplar> scored;
    scored.reserve(side.size());
    for (const auto& e : side)
      if (e.doc_id != exclude_doc_id) scored.push_back({e.doc_id, e.text, grade, cosine(candidate, e.vector)});
    if (scored.size() < std::size_t(k))
      throw ValidationError("exemplar pool for symptom " + std::to_string(symptom) + " has " +
                            std::to_string(scored.size()) + " " + name + ", need " + std::to_string(k));
    std::partial_sort(scored.begin(), scored.begin() + k, scored.end(), [](const auto& a, const auto& b) {
      if (a.similarity != b.similarity) return a.similarity > b.similarity;
      return a.doc_id < b.doc_id;
    });
    scored.resize(std::size_t(k));
    return scored;
  };
  const auto neg = top(sides.negatives, 0, "negatives");
  const auto pos = top(sides.positives, 1, "positives");
  std::vector<SelectedExemplar> out;
  out.reserve(2 * std::size_t(k));
  for (int i = 0; i < k; ++i) {
    out.push_back(neg[std::size_t(i)]);
    out.push_back(pos[std::size_t(i)]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prompts

struct PromptSpec {
  int k = 0;
  bool include_context = false;
  SymptomId symptom_id = 1;
};

namespace prompt_text {
inline constexpr std::string_view kItemIntro = "Consider the following item in Beck's Depression Inventory (BDI-II):\n";
inline constexpr std::string_view kTask =
    "The task consists of annotating sentences in the collection that are topically relevant to the item "
    "(relevant to the question and/or to the answers). Note: A relevant sentence should provide some "
    "information about the state of the individual related to the topic of the BDI item. But it is not "
    "necessary that the exact same words are used. Your job is to assess sentences on how topically relevant "
    "they are for the BDI item.\n";
inline constexpr std::string_view kGrades =
    "The relevance grades are:\n"
    "1. Relevant: A relevant sentence should be topically related to the BDI item (regardless of the wording) "
    "and, additionally, it should refer to the state of the writer about the BDI item.\n"
    "0. Non-Relevant: A non-relevant sentence does not address any topic related to the question and/or the "
    "answers of the BDI item (or it is related to the topic but does not represent the writer's state about "
    "the BDI item).\n";
inline constexpr std::string_view kInstructions =
    "Together with each sentence, you will receive a set of examples to help with the classification. Answer "
    "with just the grade. Use the format [GRADE].\n";
}  // namespace prompt_text

/// "{id}. {name}" followed by the numbered options, one per line.
inline std::string format_item(const Symptom& symptom) {
  std::string out = std::to_string(symptom.id) + ". " + symptom.name + "\n";
  for (int i = 0; i < kOptionsPerSymptom; ++i) out += std::to_string(i) + ". " + symptom.options[i] + "\n";
  return out;
}

/// Relevance-grading prompt for one sentence. The example block is left out
/// entirely when k = 0; neighbouring sentences appear only with
/// `spec.include_context`.
inline std::string build_relevance_prompt(const Symptom& symptom, std::span<const SelectedExemplar> exemplars,
                                          const SentenceRecord& sentence, const PromptSpec& spec) {
  if (spec.k < 0 || exemplars.size() != 2 * std::size_t(spec.k))
    throw ValidationError("prompt expects " + std::to_string(2 * spec.k) + " exemplars, got " +
                          std::to_string(exemplars.size()));
  if (symptom.id != spec.symptom_id) throw ValidationError("prompt spec symptom does not match symptom");
  std::string p;
  p += prompt_text::kItemIntro;
  p += format_item(symptom);
  p += "\n";
  p += prompt_text::kTask;
  p += "\n";
  p += prompt_text::kGrades;
  p += "\n";
  p += prompt_text::kInstructions;
  p += "\n";
  if (!exemplars.empty()) {
    for (const auto& e : exemplars) p += "Example: " + e.text + ". Classification: " + std::to_string(e.grade) + "\n";
    p += "\n";
  }
  if (spec.include_context && sentence.pre) p += "Previous sentence: " + *sentence.pre + "\n";
  if (spec.include_context && sentence.post) p += "Following sentence: " + *sentence.post + "\n";
  p += "Sentence: " + sentence.text + ". Classification:";
  return p;
}

inline std::string format_grade(int grade) { return "[" + std::to_string(grade) + "]"; }

/// Grade from a raw answer: a bracketed "[0]"/"[1]" anywhere, else the whole
/// trimmed answer being a lone 0 or 1. Conflicting bracketed grades, or no
/// grade at all, yield nullopt.
inline std::optional<int> try_parse_grade(std::string_view raw) {
  const bool has0 = raw.find("[0]") != std::string_view::npos;
  const bool has1 = raw.find("[1]") != std::string_view::npos;
  if (has0 && has1) return std::nullopt;
  if (has0) return 0;
  if (has1) return 1;
  auto t = text::trim(raw);
  if (!t.empty() && t.back() == '.') t = text::trim(t.substr(0, t.size() - 1));
  if (t == "0") return 0;
  if (t == "1") return 1;
  return std::nullopt;
}

inline int parse_grade(std::string_view raw) {
  if (const auto g = try_parse_grade(raw)) return *g;
  throw OracleFormatError("no unambiguous grade in oracle response", std::string(raw));
}

// ---------------------------------------------------------------------------
// Backends

/// A chat-completion style text oracle. Implementations throw TransientError
/// for retryable failures and ConfigurationError for permanent ones.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Maps an HTTP status to the error the retry logic expects.
[[noreturn]] inline void throw_for_http_status(int status, const std::string& who) {
  const auto msg = who + ": HTTP " + std::to_string(status);
  if (status == 408 || status == 429 || status >= 500) throw TransientError(msg);
  throw ConfigurationError(msg);
}

inline std::string prompt_hash(std::string_view prompt) { return text::hex64(text::fnv1a64(prompt)); }

/// Replays canned responses. Script lines (tab-separated, '#' comments):
///
///   hash:<16 hex>  <response>   answer to the prompt with that hash; repeated
///                               entries are used in order, the last one sticks
///   contains:<s>   <response>   prompts whose graded sentence (the text after
///                               the last "Sentence: ") contains <s>
///   when:<id>:<s>  <response>   same, restricted to prompts about item <id>;
///                               contains/when rules are tried in script order
///   seq:<n>        <response>   answer to the n-th request (1-based)
///   default        <response>   fallback
///
/// Responses are backslash-escaped. "!http <status>" simulates an HTTP error
/// and "!timeout" a transport timeout.
class MockBackend : public Backend {
 public:
  MockBackend() = default;

  explicit MockBackend(std::istream& script) { load_script(script); }

  void load_script(std::istream& in) {
    auto& m = *this;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = text::chomp(raw);
      if (text::trim(line).empty() || line.front() == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string_view::npos) throw ParseError("mock script: expected key<TAB>response", line_no);
      const auto key = text::trim(line.substr(0, tab));
      auto response = text::unescape_field(line.substr(tab + 1));
      if (key.starts_with("hash:")) {
        m.by_hash_[std::string(key.substr(5))].push_back(std::move(response));
      } else if (key.starts_with("contains:")) {
        m.rules_.push_back({std::nullopt, std::string(key.substr(9)), std::move(response)});
      } else if (key.starts_with("when:")) {
        const auto rest = key.substr(5);
        const auto colon = rest.find(':');
        const auto item = text::parse_int<int>(rest.substr(0, colon));
        if (colon == std::string_view::npos || !item) throw ParseError("mock script: expected when:<item>:<text>", line_no);
        m.rules_.push_back({*item, std::string(rest.substr(colon + 1)), std::move(response)});
      } else if (key.starts_with("seq:")) {
        const auto n = text::parse_int<std::size_t>(key.substr(4));
        if (!n || *n == 0) throw ParseError("mock script: bad sequence number", line_no);
        m.by_seq_[*n] = std::move(response);
      } else if (key == "default") {
        m.default_ = std::move(response);
      } else {
        throw ParseError("mock script: unknown key '" + std::string(key) + "'", line_no);
      }
    }
  }

  void add_hash(const std::string& hash, std::string response) { by_hash_[hash].push_back(std::move(response)); }
  void add_contains(std::string needle, std::string response, std::optional<int> item = std::nullopt) {
    rules_.push_back({item, std::move(needle), std::move(response)});
  }
  void add_seq(std::size_t n, std::string response) { by_seq_[n] = std::move(response); }
  void set_default(std::string response) { default_ = std::move(response); }

  std::string complete(const std::string& prompt) override {
    std::string response;
    {
      std::lock_guard lock(mu_);
      const auto n = ++requests_;
      const auto h = prompt_hash(prompt);
      prompts_.push_back(prompt);
      if (auto it = by_hash_.find(h); it != by_hash_.end()) {
        auto& used = hash_uses_[h];
        response = it->second[std::min(used, it->second.size() - 1)];
        ++used;
      } else if (const auto* r = match_substring(prompt)) {
        response = *r;
      } else if (auto s = by_seq_.find(n); s != by_seq_.end()) {
        response = s->second;
      } else if (default_) {
        response = *default_;
      } else {
        throw ConfigurationError("mock script has no response for request #" + std::to_string(n) + " (hash " + h +
                                 ")");
      }
    }
    if (response == "!timeout") throw TransientError("mock: simulated timeout");
    if (response.starts_with("!http ")) {
      const auto status = text::parse_int<int>(text::trim(std::string_view(response).substr(6))).value_or(500);
      throw_for_http_status(status, "mock");
    }
    return response;
  }

  std::size_t requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }

  std::vector<std::string> prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
  }

 private:
  struct Rule {
    std::optional<int> item;
    std::string needle, response;
  };

  // Item id from the "<id>. <name>" line that follows the first line.
  static std::optional<int> prompt_item(std::string_view prompt) {
    const auto nl = prompt.find('\n');
    if (nl == std::string_view::npos) return std::nullopt;
    const auto rest = prompt.substr(nl + 1);
    return text::parse_int<int>(rest.substr(0, rest.find('.')));
  }

  const std::string* match_substring(std::string_view prompt) const {
    if (rules_.empty()) return nullptr;
    const auto at = prompt.rfind("Sentence: ");
    const auto graded = at == std::string_view::npos ? prompt : prompt.substr(at + 10);
    const auto item = prompt_item(prompt);
    for (const auto& r : rules_)
      if ((!r.item || r.item == item) && graded.find(r.needle) != std::string_view::npos) return &r.response;
    return nullptr;
  }

  mutable std::mutex mu_;
  std::size_t requests_ = 0;
  std::vector<Rule> rules_;
  std::map<std::string, std::vector<std::string>> by_hash_;
  std::map<std::string, std::size_t> hash_uses_;
  std::map<std::size_t, std::string> by_seq_;
  std::optional<std::string> default_;
  std::vector<std::string> prompts_;
};

/// Spaces requests at least 1/rate seconds apart across threads. rate <= 0
/// disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second = 0.0) : rate_(requests_per_second) {}

  void acquire() {
    if (rate_ <= 0.0) return;
    const auto interval = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / rate_));
    Clock::time_point slot;
    {
      std::lock_guard lock(mu_);
      slot = std::max(Clock::now(), next_);
      next_ = slot + interval;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  using Clock = std::chrono::steady_clock;
  double rate_;
  std::mutex mu_;
  Clock::time_point next_{};
};

struct RetryPolicy {
  int max_retries = 3;  // transient failures retried this many times
  std::chrono::milliseconds initial_delay{500};
  double backoff = 2.0;
  std::chrono::milliseconds max_delay{30000};
  bool reask_on_bad_format = true;  // one extra request on an unparseable answer
};

struct OracleResponse {
  std::string raw;
  std::optional<int> grade;
  int retries = 0;
};

/// Sends `prompt`, retrying transient failures with exponential backoff and
/// re-asking once when the answer carries no grade. ConfigurationError
/// propagates immediately.
inline OracleResponse request_relevance(Backend& backend, const std::string& prompt, const RetryPolicy& policy = {},
                                        RateLimiter* limiter = nullptr) {
  OracleResponse resp;
  int transient_failures = 0;
  bool reasked = false;
  auto delay = policy.initial_delay;
  while (true) {
    if (limiter) limiter->acquire();
    try {
      resp.raw = backend.complete(prompt);
    } catch (const TransientError& e) {
      if (transient_failures >= policy.max_retries)
        throw TransportError("oracle request failed after " + std::to_string(transient_failures) +
                             " retries: " + e.what());
      ++transient_failures;
      ++resp.retries;
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
      delay = std::min(policy.max_delay,
                       std::chrono::milliseconds(static_cast<long long>(double(delay.count()) * policy.backoff)));
      continue;
    }
    resp.grade = try_parse_grade(resp.raw);
    if (resp.grade) return resp;
    if (policy.reask_on_bad_format && !reasked) {
      reasked = true;
      ++resp.retries;
      continue;
    }
    throw OracleFormatError("unparseable oracle grade after re-ask", resp.raw);
  }
}

// ---------------------------------------------------------------------------
// Synthetic positives

inline constexpr int kSyntheticPerGenerator = 100;

inline std::string build_synthesis_prompt(const Symptom& symptom, int n = kSyntheticPerGenerator) {
  if (n < 1) throw ValidationError("synthesis needs n >= 1");
  std::string p;
  p += prompt_text::kItemIntro;
  p += format_item(symptom);
  p += "\n";
  p += "Write " + std::to_string(n) +
       " different sentences, each written in the first person, that are topically relevant to this item: each "
       "sentence should provide some information about the state of the writer related to the topic of the BDI "
       "item, regardless of the exact wording. Vary the intensity, vocabulary and style.\n";
  p += "\n";
  p += "Answer with one sentence per line, numbered from 1 to " + std::to_string(n) + ", and nothing else.";
  return p;
}

/// Sentences from a numbered/bulleted list answer: markers stripped, blanks
/// dropped, case-insensitive duplicates removed, at most `n` kept. Fewer than
/// n/2 usable sentences is an error.
inline std::vector<std::string> parse_synthetic_sentences(std::string_view raw, int n) {
  if (n < 1) throw ValidationError("synthesis needs n >= 1");
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (auto line : text::split(raw, '\n')) {
    auto t = text::trim(text::chomp(line));
    std::size_t i = 0;
    while (i < t.size() && t[i] >= '0' && t[i] <= '9') ++i;
    if (i > 0 && i < t.size() && (t[i] == '.' || t[i] == ')' || t[i] == ':'))
      t = text::trim(t.substr(i + 1));
    else if (t.starts_with("- ") || t.starts_with("* "))
      t = text::trim(t.substr(2));
    else if (t.starts_with("\xE2\x80\xA2"))  // bullet
      t = text::trim(t.substr(3));
    if (t.empty()) continue;
    std::string key;
    for (std::size_t j = 0; j < t.size();) {
      const auto d = text::decode_utf8(t, j);
      if (d.valid)
        text::append_utf8(key, text::to_lower(d.cp));
      else
        key.push_back(t[j]);
      j += d.length;
    }
    if (!seen.insert(key).second) continue;
    out.emplace_back(t);
    if (out.size() == std::size_t(n)) break;
  }
  if (2 * out.size() < std::size_t(n))
    throw OracleFormatError("only " + std::to_string(out.size()) + " usable sentences, expected " + std::to_string(n),
                            std::string(raw));
  return out;
}

struct Generator {
  std::string tag;
  Backend* backend = nullptr;
};

/// Asks every generator for `n` sentences per symptom (one re-request on a
/// short answer) and returns them with ids "synth-<tag>-<symptom>-<i>".
inline std::vector<SyntheticSentence> synthesize_positives(std::span<const Generator> generators,
                                                           const Questionnaire& q, int n = kSyntheticPerGenerator,
                                                           const RetryPolicy& policy = {}) {
  std::vector<SyntheticSentence> out;
  for (const auto& symptom : q.symptoms())
    for (const auto& g : generators) {
      const auto prompt = build_synthesis_prompt(symptom, n);
      std::vector<std::string> sentences;
      for (int attempt = 0;; ++attempt) {
        RetryPolicy p = policy;
        p.reask_on_bad_format = false;
        std::string raw;
        int failures = 0;
        auto delay = p.initial_delay;
        while (true) {
          try {
            raw = g.backend->complete(prompt);
            break;
          } catch (const TransientError& e) {
            if (failures++ >= p.max_retries) throw TransportError(std::string("synthesis failed: ") + e.what());
            if (delay.count() > 0) std::this_thread::sleep_for(delay);
            delay = std::chrono::milliseconds(static_cast<long long>(double(delay.count()) * p.backoff));
          }
        }
        try {
          sentences = parse_synthetic_sentences(raw, n);
          break;
        } catch (const OracleFormatError&) {
          if (attempt >= 1) throw;
        }
      }
      for (std::size_t i = 0; i < sentences.size(); ++i)
        out.push_back({std::string(kSyntheticPrefix) + g.tag + "-" + std::to_string(symptom.id) + "-" +
                           std::to_string(i + 1),
                       symptom.id, sentences[i], g.tag});
    }
  return out;
}

// ---------------------------------------------------------------------------
// Annotation log: one JSON object per line.

struct AnnotationRecord {
  std::string doc_id;
  SymptomId symptom_id = 1;
  int k = 0;
  std::string prompt_hash;
  std::string raw;
  int grade = 0;
  int retries = 0;
};

inline std::string to_json_line(const AnnotationRecord& r) {
  nlohmann::json j = {{"doc_id", r.doc_id},   {"symptom_id", r.symptom_id}, {"k", r.k},
                      {"prompt_hash", r.prompt_hash}, {"raw", r.raw}, {"grade", r.grade},
                      {"retries", r.retries}};
  return j.dump();
}

/// Reads a log; a truncated final line (interrupted write) is ignored.
inline std::vector<AnnotationRecord> read_annotation_log(std::istream& in) {
  std::vector<AnnotationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      if (in.peek() == EOF) break;
      throw ParseError("annotation log: invalid JSON", line_no);
    }
    try {
      out.push_back({j.at("doc_id").get<std::string>(), j.at("symptom_id").get<int>(), j.at("k").get<int>(),
                     j.at("prompt_hash").get<std::string>(), j.at("raw").get<std::string>(), j.at("grade").get<int>(),
                     j.at("retries").get<int>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("annotation log: ") + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace symptomrank
