// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pam::backbone {

enum class PromptKind { point, box, mask };

std::string to_string(PromptKind kind);
PromptKind parse_prompt_kind(const std::string& s);

/// A visual prompt in normalized image coordinates.
///   point: coords = {x, y}
///   box:   coords = {x1, y1, x2, y2} with x1 ≤ x2, y1 ≤ y2
///   mask:  mask = binary grid of side `mask_grid`, row-major
struct PromptSpec {
  PromptKind kind = PromptKind::point;
  std::vector<double> coords;
  std::vector<std::uint8_t> mask;
  std::size_t mask_grid = 0;
  std::size_t frame_index = 0;

  static PromptSpec point(double x, double y, std::size_t frame = 0);
  static PromptSpec box(double x1, double y1, double x2, double y2, std::size_t frame = 0);
  static PromptSpec grid_mask(std::vector<std::uint8_t> cells, std::size_t side,
                              std::size_t frame = 0);

  /// Throws InputError on out-of-range or malformed coordinates. When
  /// `grid` is non-zero a mask prompt must match it.
  void validate(std::size_t grid = 0) const;

  friend bool operator==(const PromptSpec&, const PromptSpec&) = default;
};

/// {"kind":"point","coords":[x,y],"frame":0} / {"kind":"mask","grid":G,"mask":[0,1,...]}
nlohmann::json to_json(const PromptSpec& p);
/// Throws InputError on malformed JSON structure.
PromptSpec prompt_from_json(const nlohmann::json& j);

}  // namespace pam::backbone
