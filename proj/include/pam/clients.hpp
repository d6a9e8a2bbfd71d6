// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace pam::clients {

/// Wire contract shared by annotator, translator, segmenter and judge
/// endpoints: POST JSON {"prompt": ..., "image_b64": ...?} answered by
/// {"text": ...}.
struct Request {
  std::string prompt;
  std::optional<std::string> image_b64;

  nlohmann::json to_json() const;
};

/// Text-completion service. Failures raise ClientError (transport, retriable)
/// or ProtocolError (malformed reply).
class TextClient {
 public:
  virtual ~TextClient() = default;
  virtual std::string complete(const Request& request) = 0;
};

struct HttpOptions {
  std::string endpoint;  // http://host[:port][/path]
  double timeout_seconds = 30.0;
  int retries = 2;       // extra attempts after the first
};

class HttpClient : public TextClient {
 public:
  /// Throws ConfigError for an endpoint that is not a plain http URL.
  explicit HttpClient(HttpOptions options);
  std::string complete(const Request& request) override;

 private:
  HttpOptions options_;
  std::string origin_;  // scheme://host:port
  std::string path_;
};

/// Replays recorded replies keyed by the FNV-1a hex digest of the prompt.
/// Fixture lines: {"prompt_fnv1a": "<16 hex>", "text": ...}.
class ReplayClient : public TextClient {
 public:
  explicit ReplayClient(const std::filesystem::path& fixture);
  std::string complete(const Request& request) override;
  std::size_t size() const { return replies_.size(); }

 private:
  std::unordered_map<std::string, std::string> replies_;
};

/// 16-digit lowercase hex FNV-1a of `s`.
std::string digest(std::string_view s);

}  // namespace pam::clients
