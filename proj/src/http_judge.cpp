#include <cstdlib>
#include <string>

#if defined(GAZECROP_HAS_OPENSSL) && !defined(CPPHTTPLIB_OPENSSL_SUPPORT)
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gazecrop/evaluation.hpp"

namespace gazecrop {

namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

}  // namespace

HttpJudgeConfig HttpJudgeConfig::from_env() {
  HttpJudgeConfig c;
  c.endpoint = env_or_empty("GAZECROP_JUDGE_ENDPOINT");
  c.model = env_or_empty("GAZECROP_JUDGE_MODEL");
  c.api_key = env_or_empty("GAZECROP_JUDGE_API_KEY");
  return c;
}

HttpJudgeClient::HttpJudgeClient(HttpJudgeConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kUsage, "judge endpoint must be an http(s) URL: " + config_.endpoint);
  }
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  base_url_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
#ifndef GAZECROP_HAS_OPENSSL
  if (config_.endpoint.rfind("https://", 0) == 0) {
    throw Error(ErrorCode::kUsage, "built without TLS support; https judge endpoints unavailable");
  }
#endif
  if (config_.model.empty()) throw Error(ErrorCode::kUsage, "judge model is not set");
}

std::string HttpJudgeClient::submit(const std::string& prompt_text) {
  // One client per call keeps submit() safe for concurrent callers.
  httplib::Client client(base_url_);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);

  nlohmann::json body;
  body["model"] = config_.model;
  body["temperature"] = 0;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt_text}}});

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kJudgeUnavailable,
                "request to " + config_.endpoint + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kJudgeUnavailable,
                "judge returned HTTP " + std::to_string(res->status));
  }
  try {
    const auto reply = nlohmann::json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw MalformedJudgeResponse(std::string("unexpected completion payload: ") + e.what(),
                                 res->body);
  }
}

}  // namespace gazecrop
