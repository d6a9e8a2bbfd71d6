// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/clients.hpp"

#include <httplib.h>

#include <cstdio>
#include <fstream>

#include "pam/errors.hpp"
#include "pam/hash.hpp"

namespace pam::clients {

nlohmann::json Request::to_json() const {
  nlohmann::json j{{"prompt", prompt}};
  if (image_b64) j["image_b64"] = *image_b64;
  return j;
}

std::string digest(std::string_view s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
  return buf;
}

HttpClient::HttpClient(HttpOptions options) : options_(std::move(options)) {
  const std::string& url = options_.endpoint;
  const std::string scheme = "http://";
  if (url.rfind(scheme, 0) != 0 || url.size() == scheme.size()) {
    throw ConfigError("client endpoint must be an http:// URL, got '" + url + "'");
  }
  const std::size_t slash = url.find('/', scheme.size());
  origin_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
  if (options_.timeout_seconds <= 0.0) throw ConfigError("client timeout must be positive");
  if (options_.retries < 0) throw ConfigError("client retries must be >= 0");
}

std::string HttpClient::complete(const Request& request) {
  httplib::Client cli(origin_);
  const auto secs = static_cast<time_t>(options_.timeout_seconds);
  const auto usecs = static_cast<time_t>((options_.timeout_seconds - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  const std::string body = request.to_json().dump();
  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    auto res = cli.Post(path_, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ClientError(options_.endpoint + " answered HTTP " + std::to_string(res->status));
    }
    const auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j.at("text").is_string()) {
      throw ProtocolError("reply lacks a string 'text' field", res->body);
    }
    return j.at("text").get<std::string>();
  }
  throw ClientError(options_.endpoint + " failed after " + std::to_string(options_.retries + 1) +
                    " attempts: " + last_error);
}

ReplayClient::ReplayClient(const std::filesystem::path& fixture) {
  std::ifstream in(fixture);
  if (!in) throw InputError("cannot open replay fixture " + fixture.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("prompt_fnv1a") || !j.contains("text") ||
        !j.at("prompt_fnv1a").is_string() || !j.at("text").is_string()) {
      throw InputError(fixture.string() + ":" + std::to_string(n) + ": malformed replay entry");
    }
    replies_[j.at("prompt_fnv1a").get<std::string>()] = j.at("text").get<std::string>();
  }
}

std::string ReplayClient::complete(const Request& request) {
  const auto it = replies_.find(digest(request.prompt));
  if (it == replies_.end()) throw ClientError("no recorded reply for prompt " + digest(request.prompt));
  return it->second;
}

}  // namespace pam::clients
