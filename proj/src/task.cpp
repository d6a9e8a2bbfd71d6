// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/task.hpp"

#include "pam/errors.hpp"

namespace pam {

std::string to_string(Task t) {
  switch (t) {
    case Task::category: return "category";
    case Task::explanation: return "explanation";
    case Task::caption: return "caption";
    case Task::stream: return "stream";
  }
  return "category";
}

std::string to_string(Modality m) { return m == Modality::image ? "image" : "video"; }
std::string to_string(Language l) { return l == Language::en ? "en" : "zh"; }

Task parse_task(std::string_view s) {
  if (s == "category") return Task::category;
  if (s == "explanation") return Task::explanation;
  if (s == "caption") return Task::caption;
  if (s == "stream") return Task::stream;
  throw InputError("unknown task '" + std::string(s) + "'");
}

Modality parse_modality(std::string_view s) {
  if (s == "image") return Modality::image;
  if (s == "video") return Modality::video;
  throw InputError("unknown modality '" + std::string(s) + "'");
}

Language parse_language(std::string_view s) {
  if (s == "en") return Language::en;
  if (s == "zh") return Language::zh;
  throw InputError("unknown language '" + std::string(s) + "'");
}

}  // namespace pam
