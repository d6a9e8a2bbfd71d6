// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/events.hpp"

#include <algorithm>
#include <cmath>

#include "pam/errors.hpp"

namespace pam {

nlohmann::ordered_json to_json(const Event& e) {
  nlohmann::ordered_json j{{"t0", e.t0}, {"t1", e.t1}, {"text", e.text}};
  if (!e.subject_id.empty()) j["subject_id"] = e.subject_id;
  return j;
}

Event event_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("t0") || !j.contains("t1") || !j.at("t0").is_number() ||
      !j.at("t1").is_number()) {
    throw InputError("event needs numeric t0 and t1");
  }
  Event e;
  e.t0 = j.at("t0").get<double>();
  e.t1 = j.at("t1").get<double>();
  if (j.contains("text")) {
    if (!j.at("text").is_string()) throw InputError("event text must be a string");
    e.text = j.at("text").get<std::string>();
  }
  if (j.contains("subject_id")) {
    const auto& s = j.at("subject_id");
    if (s.is_string()) e.subject_id = s.get<std::string>();
    else if (s.is_number_integer()) e.subject_id = std::to_string(s.get<long long>());
    else throw InputError("event subject_id must be a string or integer");
  }
  return e;
}

bool events_well_formed(const std::vector<Event>& events) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!std::isfinite(e.t0) || !std::isfinite(e.t1) || !(e.t0 < e.t1)) return false;
    if (i > 0 && e.t0 < events[i - 1].t1) return false;
  }
  return true;
}

void sort_events(std::vector<Event>& events) {
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.t0 != b.t0 ? a.t0 < b.t0 : a.t1 < b.t1;
  });
}

}  // namespace pam
