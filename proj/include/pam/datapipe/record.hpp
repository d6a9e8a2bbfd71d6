// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pam/backbone/prompt.hpp"
#include "pam/events.hpp"
#include "pam/task.hpp"

namespace pam::datapipe {

inline constexpr const char* kSchemaName = "pam.annotation";
inline constexpr int kSchemaVersion = 1;

/// One region-semantics sample.
///   responses: granularity → text; "original" holds the source annotation,
///              elaboration adds the task's own key ("category", "caption", ...)
///   frames/fps: video only
struct AnnotationRecord {
  std::string media_id;
  Modality modality = Modality::image;
  std::size_t frames = 0;
  double fps = 0.0;
  backbone::PromptSpec prompt;
  Task task = Task::caption;
  Language language = Language::en;
  std::map<std::string, std::string> responses;
  std::vector<Event> events;
  std::vector<std::string> flags;  // reasons, present only on flagged output

  double duration() const { return fps > 0.0 ? static_cast<double>(frames) / fps : 0.0; }
  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

/// Dedup / ordering key: media, prompt, task, language.
std::string record_key(const AnnotationRecord& r);

nlohmann::ordered_json to_json(const AnnotationRecord& r);
/// Throws InputError describing the first schema violation.
AnnotationRecord record_from_json(const nlohmann::json& j);

/// Header line {"schema":"pam.annotation","version":1} then one record per
/// line. Errors name the 1-based line number.
std::vector<AnnotationRecord> parse_jsonl(const std::string& text);
std::vector<AnnotationRecord> read_jsonl(const std::filesystem::path& path);
/// Records sorted by record_key (stable), header first, invalid UTF-8 replaced.
std::string to_jsonl(std::vector<AnnotationRecord> records);

}  // namespace pam::datapipe
