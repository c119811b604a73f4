#pragma once

// OpenAI-compatible chat-completion backend. Needs httplib (vendored); HTTPS
// endpoints additionally need CPPHTTPLIB_OPENSSL_SUPPORT.

#include <chrono>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "symptomrank/error.hpp"
#include "symptomrank/oracle.hpp"

namespace symptomrank {

struct HttpBackendConfig {
  std::string endpoint;  // scheme://host[:port][/path]
  std::string api_key;
  std::string model = "gpt-4o-mini";
  std::chrono::seconds timeout{60};
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    const auto& ep = config_.endpoint;
    const auto scheme_end = ep.find("://");
    if (scheme_end == std::string::npos) throw ConfigurationError("endpoint must look like scheme://host[/path]: " + ep);
    const auto path_start = ep.find('/', scheme_end + 3);
    base_ = ep.substr(0, path_start);
    path_ = path_start == std::string::npos ? std::string() : ep.substr(path_start);
    if (path_.empty() || path_ == "/") path_ = "/v1/chat/completions";
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (ep.starts_with("https://")) throw ConfigurationError("built without TLS support, cannot use " + ep);
#endif
  }

  const std::string& path() const { return path_; }

  std::string complete(const std::string& prompt) override {
    httplib::Client client(base_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const nlohmann::json body = {
        {"model", config_.model},
        {"temperature", 0},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
    };
    const auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw TransientError("HTTP request to " + base_ + path_ + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw_for_http_status(res->status, base_ + path_);

    try {
      const auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw OracleFormatError(std::string("malformed chat-completion response: ") + e.what(), res->body);
    }
  }

 private:
  HttpBackendConfig config_;
  std::string base_;
  std::string path_;
};

}  // namespace symptomrank
