// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>

#include "pam/errors.hpp"

namespace pam::cli {

RunConfig RunConfig::defaults() {
  RunConfig c;
  for (auto s : {curriculum::Stage::s1, curriculum::Stage::s1_5, curriculum::Stage::s2}) {
    c.stages[curriculum::to_string(s)] = curriculum::desk_stage(s);
  }
  return c;
}

void RunConfig::validate() const {
  model.validate();
  for (const auto& [label, s] : stages) {
    if (label == "all-in-one") {
      if (s.stage != curriculum::Stage::s2) throw ConfigError("all-in-one runs with the stage-2 setup");
    } else if (curriculum::parse_stage(label) != s.stage) {
      throw ConfigError("stage table entry '" + label + "' names stage " + curriculum::to_string(s.stage));
    }
    s.validate();
  }
  if (train.samples == 0) throw ConfigError("train.samples must be >= 1");
  if (train.video_frames == 0) throw ConfigError("train.video_frames must be >= 1");
  if (generate.max_len == 0) throw ConfigError("generate.max_len must be >= 1");
  if (!(generate.fps > 0.0)) throw ConfigError("generate.fps must be positive");
  if (!(pipeline.segment_window > 0.0)) throw ConfigError("pipeline.segment_window must be positive");
  if (pipeline.keyframes < 2) throw ConfigError("pipeline.keyframes must be >= 2");
  if (pipeline.frame_side == 0) throw ConfigError("pipeline.frame_side must be >= 1");
}

namespace {

nlohmann::ordered_json client_json(const clients::HttpOptions& o) {
  return {{"endpoint", o.endpoint}, {"timeout_seconds", o.timeout_seconds}, {"retries", o.retries}};
}

void check_keys(const nlohmann::json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError("unknown config key '" + where + "." + k + "'");
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, const std::string& where, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
  }
}

void read_size(const nlohmann::json& j, const char* key, const std::string& where, std::size_t& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number_unsigned()) {
    throw ConfigError("config key '" + where + "." + key + "' must be a non-negative integer");
  }
  out = j.at(key).get<std::size_t>();
}

clients::HttpOptions client_from_json(const nlohmann::json& j, const std::string& where) {
  check_keys(j, where, {"endpoint", "timeout_seconds", "retries"});
  clients::HttpOptions o;
  read(j, "endpoint", where, o.endpoint);
  read(j, "timeout_seconds", where, o.timeout_seconds);
  read(j, "retries", where, o.retries);
  if (o.retries < 0 || !(o.timeout_seconds > 0.0)) throw ConfigError(where + ": bad timeout or retries");
  return o;
}

}  // namespace

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["model"] = {{"grid", c.model.grid},
                {"dim", c.model.dim},
                {"mask_tokens", c.model.mask_tokens},
                {"semantic_tokens", c.model.semantic_tokens},
                {"embed", c.model.embed},
                {"decoder_layers", c.model.decoder_layers},
                {"context_limit", c.model.context_limit},
                {"tap", perceiver::to_string(c.tap)}};
  j["seed"] = c.model.seed;
  auto stages = nlohmann::ordered_json::object();
  for (const auto& [label, s] : c.stages) stages[label] = curriculum::to_json(s);
  j["stages"] = stages;
  j["train"] = {{"dataset", c.train.dataset},
                {"samples", c.train.samples},
                {"video_frames", c.train.video_frames},
                {"checkpoint_dir", c.train.checkpoint_dir}};
  j["generate"] = {{"max_len", c.generate.max_len}, {"fps", c.generate.fps}};
  j["pipeline"] = {{"segment_window", c.pipeline.segment_window},
                   {"keyframes", c.pipeline.keyframes},
                   {"frame_side", c.pipeline.frame_side},
                   {"media_root", c.pipeline.media_root}};
  j["clients"] = {{"mock", c.clients.mock},
                  {"annotator", client_json(c.clients.annotator)},
                  {"translator", client_json(c.clients.translator)},
                  {"segmenter", client_json(c.clients.segmenter)},
                  {"judge", client_json(c.clients.judge)}};
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c = RunConfig::defaults();
  check_keys(j, "config", {"model", "seed", "stages", "train", "generate", "pipeline", "clients"});
  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m, "model", {"grid", "dim", "mask_tokens", "semantic_tokens", "embed",
                            "decoder_layers", "context_limit", "tap"});
    read_size(m, "grid", "model", c.model.grid);
    read_size(m, "dim", "model", c.model.dim);
    read_size(m, "mask_tokens", "model", c.model.mask_tokens);
    read_size(m, "semantic_tokens", "model", c.model.semantic_tokens);
    read_size(m, "embed", "model", c.model.embed);
    read_size(m, "decoder_layers", "model", c.model.decoder_layers);
    read_size(m, "context_limit", "model", c.model.context_limit);
    std::string tap = perceiver::to_string(c.tap);
    read(m, "tap", "model", tap);
    try {
      c.tap = perceiver::parse_tap(tap);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
    c.model.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("stages")) {
    const auto& st = j.at("stages");
    if (!st.is_object()) throw ConfigError("stages must be an object");
    for (const auto& [label, v] : st.items()) {
      if (label != "all-in-one") {
        try {
          curriculum::parse_stage(label);
        } catch (const Error&) {
          throw ConfigError("unknown stage '" + label + "' in stages");
        }
      }
      c.stages[label] = curriculum::stage_from_json(v);
    }
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, "train", {"dataset", "samples", "video_frames", "checkpoint_dir"});
    read(t, "dataset", "train", c.train.dataset);
    read_size(t, "samples", "train", c.train.samples);
    read_size(t, "video_frames", "train", c.train.video_frames);
    read(t, "checkpoint_dir", "train", c.train.checkpoint_dir);
  }
  if (j.contains("generate")) {
    const auto& g = j.at("generate");
    check_keys(g, "generate", {"max_len", "fps"});
    read_size(g, "max_len", "generate", c.generate.max_len);
    read(g, "fps", "generate", c.generate.fps);
  }
  if (j.contains("pipeline")) {
    const auto& p = j.at("pipeline");
    check_keys(p, "pipeline", {"segment_window", "keyframes", "frame_side", "media_root"});
    read(p, "segment_window", "pipeline", c.pipeline.segment_window);
    read_size(p, "keyframes", "pipeline", c.pipeline.keyframes);
    read_size(p, "frame_side", "pipeline", c.pipeline.frame_side);
    read(p, "media_root", "pipeline", c.pipeline.media_root);
  }
  if (j.contains("clients")) {
    const auto& cl = j.at("clients");
    check_keys(cl, "clients", {"mock", "annotator", "translator", "segmenter", "judge"});
    read(cl, "mock", "clients", c.clients.mock);
    if (cl.contains("annotator")) c.clients.annotator = client_from_json(cl.at("annotator"), "clients.annotator");
    if (cl.contains("translator")) c.clients.translator = client_from_json(cl.at("translator"), "clients.translator");
    if (cl.contains("segmenter")) c.clients.segmenter = client_from_json(cl.at("segmenter"), "clients.segmenter");
    if (cl.contains("judge")) c.clients.judge = client_from_json(cl.at("judge"), "clients.judge");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + ": invalid JSON");
  try {
    return config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_environment(RunConfig& c) {
  const char* env = std::getenv(kEndpointEnv);
  if (env == nullptr || *env == '\0') return;
  for (auto* o : {&c.clients.annotator, &c.clients.translator, &c.clients.segmenter, &c.clients.judge}) {
    o->endpoint = env;
  }
}

}  // namespace pam::cli
