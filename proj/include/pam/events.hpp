// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pam {

/// A timed description of one subject, seconds.
struct Event {
  double t0 = 0.0;
  double t1 = 0.0;
  std::string text;
  std::string subject_id;

  friend bool operator==(const Event&, const Event&) = default;
};

/// {"t0":..,"t1":..,"text":..,"subject_id":..}; subject_id omitted when empty.
nlohmann::ordered_json to_json(const Event& e);
/// Throws InputError when fields are missing or mistyped.
Event event_from_json(const nlohmann::json& j);

/// Sorted by (t0, t1) with each t0 < t1 and no overlap.
bool events_well_formed(const std::vector<Event>& events);

void sort_events(std::vector<Event>& events);

}  // namespace pam
