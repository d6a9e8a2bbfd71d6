// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/datapipe/record.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pam/errors.hpp"

namespace pam::datapipe {

std::string record_key(const AnnotationRecord& r) {
  return r.media_id + "|" + backbone::to_json(r.prompt).dump() + "|" + to_string(r.task) + "|" +
         to_string(r.language);
}

nlohmann::ordered_json to_json(const AnnotationRecord& r) {
  nlohmann::ordered_json j;
  j["media_id"] = r.media_id;
  j["modality"] = to_string(r.modality);
  if (r.modality == Modality::video) {
    j["frames"] = r.frames;
    j["fps"] = r.fps;
  }
  j["prompt"] = backbone::to_json(r.prompt);
  j["task"] = to_string(r.task);
  j["language"] = to_string(r.language);
  j["responses"] = nlohmann::ordered_json(r.responses);
  if (!r.events.empty()) {
    auto ev = nlohmann::ordered_json::array();
    for (const auto& e : r.events) ev.push_back(pam::to_json(e));
    j["events"] = ev;
  }
  if (!r.flags.empty()) j["flags"] = r.flags;
  return j;
}

AnnotationRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("record must be a JSON object");
  static const char* kKeys[] = {"media_id", "modality", "frames",    "fps",   "prompt",
                                "task",     "language", "responses", "events", "flags"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), k) == std::end(kKeys)) {
      throw InputError("unknown field '" + k + "'");
    }
  }
  auto str = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) {
      throw InputError(std::string("field '") + key + "' must be a string");
    }
    return j.at(key).get<std::string>();
  };
  AnnotationRecord r;
  r.media_id = str("media_id");
  if (r.media_id.empty()) throw InputError("media_id is empty");
  r.modality = parse_modality(str("modality"));
  r.task = parse_task(str("task"));
  r.language = parse_language(str("language"));
  if (!j.contains("prompt")) throw InputError("field 'prompt' is required");
  r.prompt = backbone::prompt_from_json(j.at("prompt"));
  if (r.modality == Modality::video) {
    if (!j.contains("frames") || !j.at("frames").is_number_unsigned() ||
        j.at("frames").get<std::size_t>() == 0) {
      throw InputError("video records need a positive integer 'frames'");
    }
    if (!j.contains("fps") || !j.at("fps").is_number() || !(j.at("fps").get<double>() > 0.0)) {
      throw InputError("video records need a positive 'fps'");
    }
    r.frames = j.at("frames").get<std::size_t>();
    r.fps = j.at("fps").get<double>();
  }
  if (j.contains("responses")) {
    const auto& resp = j.at("responses");
    if (!resp.is_object()) throw InputError("'responses' must be an object");
    for (const auto& [k, v] : resp.items()) {
      if (!v.is_string()) throw InputError("response '" + k + "' must be a string");
      r.responses[k] = v.get<std::string>();
    }
  }
  if (j.contains("events")) {
    if (!j.at("events").is_array()) throw InputError("'events' must be an array");
    for (const auto& e : j.at("events")) r.events.push_back(event_from_json(e));
  }
  if (j.contains("flags")) {
    if (!j.at("flags").is_array()) throw InputError("'flags' must be an array");
    for (const auto& f : j.at("flags")) {
      if (!f.is_string()) throw InputError("flags must be strings");
      r.flags.push_back(f.get<std::string>());
    }
  }
  return r;
}

std::vector<AnnotationRecord> parse_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  bool header = false;
  std::vector<AnnotationRecord> out;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    const std::string where = "line " + std::to_string(n) + ": ";
    if (j.is_discarded()) throw InputError(where + "invalid JSON");
    if (!header) {
      if (!j.is_object() || j.value("schema", "") != kSchemaName ||
          j.value("version", 0) != kSchemaVersion) {
        throw InputError(where + "expected header {\"schema\":\"pam.annotation\",\"version\":1}");
      }
      header = true;
      continue;
    }
    try {
      out.push_back(record_from_json(j));
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
  }
  if (!header) throw InputError("line 1: missing schema header");
  return out;
}

std::vector<AnnotationRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_jsonl(ss.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string to_jsonl(std::vector<AnnotationRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return record_key(a) < record_key(b);
  });
  nlohmann::ordered_json header{{"schema", kSchemaName}, {"version", kSchemaVersion}};
  std::string out = header.dump() + "\n";
  for (const auto& r : records) {
    out += to_json(r).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

}  // namespace pam::datapipe
