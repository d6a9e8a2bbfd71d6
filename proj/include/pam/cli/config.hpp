// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "pam/clients.hpp"
#include "pam/curriculum/curriculum.hpp"
#include "pam/model_config.hpp"
#include "pam/perceiver/perceiver.hpp"

namespace pam::cli {

/// Environment variable that replaces every configured client endpoint.
inline constexpr const char* kEndpointEnv = "PAM_CLIENT_ENDPOINT";

struct ClientsConfig {
  bool mock = false;
  clients::HttpOptions annotator;
  clients::HttpOptions translator;
  clients::HttpOptions segmenter;
  clients::HttpOptions judge;
};

struct TrainConfig {
  std::string dataset = "synthetic";  // or an annotation JSONL path
  std::size_t samples = 8;            // per stage, synthetic datasets only
  std::size_t video_frames = 3;       // frames drawn per video record
  std::string checkpoint_dir = "checkpoints";
};

struct GenerateConfig {
  std::size_t max_len = 32;
  double fps = 1.0;  // synthetic and directory videos
};

struct PipelineConfig {
  double segment_window = 2.0;
  std::size_t keyframes = 6;
  std::size_t frame_side = 64;  // synthetic media
  std::string media_root;
};

/// Everything a command needs. Unknown keys are rejected at load.
struct RunConfig {
  ModelConfig model;
  perceiver::Tap tap = perceiver::Tap::post_ffm;
  std::map<std::string, curriculum::StageConfig> stages;  // "1", "1.5", "2", "all-in-one"
  TrainConfig train;
  GenerateConfig generate;
  PipelineConfig pipeline;
  ClientsConfig clients;

  /// Defaults: full-size model, desk-scale stage table, live clients unset.
  static RunConfig defaults();
  /// Throws ConfigError for any violated precondition.
  void validate() const;
};

nlohmann::ordered_json to_json(const RunConfig& c);
/// Missing keys keep their defaults. Throws ConfigError on unknown keys or bad types.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Applies PAM_CLIENT_ENDPOINT when set.
void apply_environment(RunConfig& c);

}  // namespace pam::cli
