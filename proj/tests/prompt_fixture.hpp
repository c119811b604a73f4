#pragma once

// Fixed inputs behind the golden prompt files in golden/.

#include <cmath>
#include <string>
#include <vector>

#include "symptomrank/oracle.hpp"
#include "symptomrank/questionnaire.hpp"
#include "test_util.hpp"

namespace prompt_fixture {

using namespace symptomrank;

inline std::vector<float> at_cosine(double c) { return {float(c), float(std::sqrt(1.0 - c * c))}; }

inline const std::vector<float>& candidate_vector() {
  static const std::vector<float> v = {1.0f, 0.0f};
  return v;
}

inline SentenceRecord candidate() { return {"cand", "I have been feeling really sad lately", std::nullopt, std::nullopt}; }

/// Sadness pool. Negatives sit at cosines 0.85, 0.75, ... and positives at
/// 0.9, 0.8, ... from the candidate, so every k selects a known prefix. The
/// candidate itself is in the positives and must be excluded.
inline ExemplarPool sadness_pool() {
  ExemplarPool pool;
  auto& s = pool.per_symptom[1];
  const std::vector<std::pair<const char*, double>> pos = {
      {"I cry every night", 0.9},           {"I feel sad most days", 0.8},
      {"Everything feels heavy and grey", 0.7}, {"I can't stop feeling down", 0.6},
      {"Some days I just feel empty", 0.5}, {"I miss feeling okay", 0.1}};
  const std::vector<std::pair<const char*, double>> neg = {
      {"My sister is sad about her exam", 0.85}, {"The movie had a sad ending", 0.75},
      {"We talked about sadness in class", 0.65}, {"I was happy at the party", 0.55},
      {"The weather was grey today", 0.45},       {"I bought new shoes", 0.2}};
  int i = 0;
  for (const auto& [t, c] : pos) s.positives.push_back({"p" + std::to_string(i++), t, at_cosine(c)});
  s.positives.push_back({"cand", candidate().text, candidate_vector()});
  i = 0;
  for (const auto& [t, c] : neg) s.negatives.push_back({"n" + std::to_string(i++), t, at_cosine(c)});
  return pool;
}

inline Questionnaire questionnaire() {
  auto in = io::open_input(testing_util::data_dir() / "bdi2.txt");
  return load_questionnaire(in);
}

inline std::string golden_name(int k) { return "prompt_sadness_k" + std::to_string(k) + ".txt"; }

inline std::string build(const Questionnaire& q, int k, bool context = false) {
  const auto pool = sadness_pool();
  const auto ex = select_exemplars(candidate_vector(), pool, 1, k, "cand");
  auto rec = candidate();
  if (context) {
    rec.pre = "It rained all weekend.";
    rec.post = "Nobody called.";
  }
  return build_relevance_prompt(q.at(1), ex, rec, {k, context, 1});
}

}  // namespace prompt_fixture
