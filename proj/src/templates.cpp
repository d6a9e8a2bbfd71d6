// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/templates.hpp"

#include "pam/errors.hpp"

namespace pam::templates {

std::string_view task_instruction(Task task) {
  switch (task) {
    case Task::category: return kTaskCategory;
    case Task::explanation: return kTaskExplanation;
    case Task::caption: return kTaskCaption;
    case Task::stream: return kTaskStream;
  }
  return kTaskCaption;
}

std::string fill(std::string_view tmpl,
                 const std::vector<std::pair<std::string_view, std::string>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '{') {
      out += tmpl[i++];
      continue;
    }
    const std::size_t close = tmpl.find('}', i);
    if (close == std::string_view::npos) throw ConfigError("unterminated placeholder in template");
    const std::string_view key = tmpl.substr(i + 1, close - i - 1);
    bool found = false;
    for (const auto& [k, v] : values) {
      if (k == key) {
        out += v;
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("template placeholder {" + std::string(key) + "} has no value");
    i = close + 1;
  }
  return out;
}

}  // namespace pam::templates
