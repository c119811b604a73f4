#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "symptomrank/error.hpp"
#include "symptomrank/io.hpp"
#include "symptomrank/text.hpp"

namespace symptomrank {

namespace fs = std::filesystem;

enum class OracleBackendKind { mock, http };
enum class AnnotateTarget { unanimity, val };

struct PipelineConfig {
  fs::path config_path;

  struct Paths {
    fs::path corpus, questionnaire, labels, embeddings, option_embeddings, synthetic;
    fs::path scores_mix23, scores_aug_1step, scores_aug_2step, val_f1;
    fs::path qrels_majority, qrels_unanimity;
    fs::path output_dir, mock_script;
  } paths;

  std::uint64_t split_seed = 42;
  double train_fraction = 0.8;

  struct Oracle {
    int k = 5;
    OracleBackendKind backend = OracleBackendKind::mock;
    std::string model = "gpt-4o-mini";
    std::string endpoint;  // SYMPTOMRANK_ENDPOINT overrides
    std::string api_key;   // only ever from SYMPTOMRANK_API_KEY
    bool include_context = false;
    int max_retries = 3;
    int initial_delay_ms = 500;
    double requests_per_second = 0.0;
    int max_in_flight = 4;
    int timeout_s = 60;
    AnnotateTarget target = AnnotateTarget::unanimity;
  } oracle;

  struct Synthesis {
    std::vector<std::string> generators{"gen-a", "gen-b", "gen-c"};
    int per_generator = 100;
  } synthesis;

  unsigned score_threads = 0;  // 0: hardware concurrency
  std::size_t run_cap = 1000;

  unsigned effective_threads() const {
    if (score_threads) return score_threads;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigurationError(key + ": expected a boolean, got '" + v + "'");
}

template <typename Int>
Int parse_config_int(const std::string& key, const std::string& v) {
  const auto n = text::parse_int<Int>(v);
  if (!n) throw ConfigurationError(key + ": expected an integer, got '" + v + "'");
  return *n;
}

inline double parse_config_double(const std::string& key, const std::string& v) {
  const auto d = text::parse_double(v);
  if (!d) throw ConfigurationError(key + ": expected a number, got '" + v + "'");
  return *d;
}

}  // namespace detail

/// INI-style config. Relative paths are taken relative to the config file.
inline PipelineConfig parse_config(std::istream& in, const fs::path& config_path) {
  PipelineConfig c;
  c.config_path = config_path;
  const auto base = config_path.has_parent_path() ? config_path.parent_path() : fs::path(".");

  std::map<std::string, std::string> kv;
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigurationError(config_path.string() + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string value;
    for (const auto& part : item.inputs) value += (value.empty() ? "" : " ") + part;
    kv[item.fullname()] = value;
  }

  auto take = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    auto v = it->second;
    kv.erase(it);
    return v;
  };
  auto path = [&](const std::string& key, fs::path& dst) {
    if (const auto v = take("paths." + key); v && !v->empty()) {
      const fs::path p(*v);
      dst = p.is_absolute() ? p : (base / p).lexically_normal();
    }
  };

  path("corpus", c.paths.corpus);
  path("questionnaire", c.paths.questionnaire);
  path("labels", c.paths.labels);
  path("embeddings", c.paths.embeddings);
  path("option_embeddings", c.paths.option_embeddings);
  path("synthetic", c.paths.synthetic);
  path("scores_mix23", c.paths.scores_mix23);
  path("scores_aug_1step", c.paths.scores_aug_1step);
  path("scores_aug_2step", c.paths.scores_aug_2step);
  path("val_f1", c.paths.val_f1);
  path("qrels_majority", c.paths.qrels_majority);
  path("qrels_unanimity", c.paths.qrels_unanimity);
  path("output_dir", c.paths.output_dir);
  path("mock_script", c.paths.mock_script);
  if (c.paths.output_dir.empty()) c.paths.output_dir = (base / "out").lexically_normal();
  if (c.paths.option_embeddings.empty()) c.paths.option_embeddings = c.paths.embeddings;

  if (auto v = take("split.seed")) c.split_seed = detail::parse_config_int<std::uint64_t>("split.seed", *v);
  if (auto v = take("split.train_fraction")) c.train_fraction = detail::parse_config_double("split.train_fraction", *v);

  auto& o = c.oracle;
  if (auto v = take("oracle.k")) o.k = detail::parse_config_int<int>("oracle.k", *v);
  if (auto v = take("oracle.backend")) {
    if (*v == "mock") o.backend = OracleBackendKind::mock;
    else if (*v == "http") o.backend = OracleBackendKind::http;
    else throw ConfigurationError("oracle.backend: expected mock or http, got '" + *v + "'");
  }
  if (auto v = take("oracle.model")) o.model = *v;
  if (auto v = take("oracle.endpoint")) o.endpoint = *v;
  if (take("oracle.api_key"))
    throw ConfigurationError("oracle.api_key: API keys are read from SYMPTOMRANK_API_KEY, not the config file");
  if (auto v = take("oracle.include_context")) o.include_context = detail::parse_bool("oracle.include_context", *v);
  if (auto v = take("oracle.max_retries")) o.max_retries = detail::parse_config_int<int>("oracle.max_retries", *v);
  if (auto v = take("oracle.initial_delay_ms"))
    o.initial_delay_ms = detail::parse_config_int<int>("oracle.initial_delay_ms", *v);
  if (auto v = take("oracle.requests_per_second"))
    o.requests_per_second = detail::parse_config_double("oracle.requests_per_second", *v);
  if (auto v = take("oracle.max_in_flight"))
    o.max_in_flight = detail::parse_config_int<int>("oracle.max_in_flight", *v);
  if (auto v = take("oracle.timeout_s")) o.timeout_s = detail::parse_config_int<int>("oracle.timeout_s", *v);
  if (auto v = take("oracle.target")) {
    if (*v == "unanimity") o.target = AnnotateTarget::unanimity;
    else if (*v == "val") o.target = AnnotateTarget::val;
    else throw ConfigurationError("oracle.target: expected unanimity or val, got '" + *v + "'");
  }

  if (auto v = take("synthesis.generators")) {
    c.synthesis.generators.clear();
    for (auto g : text::split(*v, ','))
      if (!text::trim(g).empty()) c.synthesis.generators.emplace_back(text::trim(g));
  }
  if (auto v = take("synthesis.per_generator"))
    c.synthesis.per_generator = detail::parse_config_int<int>("synthesis.per_generator", *v);

  if (auto v = take("score.threads")) c.score_threads = detail::parse_config_int<unsigned>("score.threads", *v);
  if (auto v = take("runs.cap")) c.run_cap = detail::parse_config_int<std::size_t>("runs.cap", *v);

  if (!kv.empty()) {
    std::string unknown;
    for (const auto& [k, _] : kv) unknown += (unknown.empty() ? "" : ", ") + k;
    throw ConfigurationError(config_path.string() + ": unknown keys: " + unknown);
  }

  if (o.k < 0) throw ConfigurationError("oracle.k must be >= 0");
  if (o.max_retries < 0) throw ConfigurationError("oracle.max_retries must be >= 0");
  if (o.max_in_flight < 1) throw ConfigurationError("oracle.max_in_flight must be >= 1");
  if (c.run_cap < 1) throw ConfigurationError("runs.cap must be >= 1");

  if (const char* ep = std::getenv("SYMPTOMRANK_ENDPOINT"); ep && *ep) o.endpoint = ep;
  if (const char* key = std::getenv("SYMPTOMRANK_API_KEY"); key && *key) o.api_key = key;
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigurationError("config file not found: " + path.string());
  auto in = io::open_input(path);
  return parse_config(in, path);
}

/// Throws naming every listed input that is unset or missing.
inline void require_inputs(const std::vector<std::pair<std::string, fs::path>>& inputs) {
  std::string problems;
  for (const auto& [key, p] : inputs) {
    if (p.empty()) problems += "\n  paths." + key + " is not set";
    else if (!fs::exists(p)) problems += "\n  paths." + key + ": " + p.string() + " does not exist";
  }
  if (!problems.empty()) throw ConfigurationError("missing inputs:" + problems);
}

}  // namespace symptomrank
