// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/backbone/prompt.hpp"

#include <algorithm>
#include <cmath>

#include "pam/errors.hpp"

namespace pam::backbone {

std::string to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::point: return "point";
    case PromptKind::box: return "box";
    case PromptKind::mask: return "mask";
  }
  return "point";
}

PromptKind parse_prompt_kind(const std::string& s) {
  if (s == "point") return PromptKind::point;
  if (s == "box") return PromptKind::box;
  if (s == "mask") return PromptKind::mask;
  throw InputError("unknown prompt kind '" + s + "'");
}

PromptSpec PromptSpec::point(double x, double y, std::size_t frame) {
  return PromptSpec{PromptKind::point, {x, y}, {}, 0, frame};
}

PromptSpec PromptSpec::box(double x1, double y1, double x2, double y2, std::size_t frame) {
  return PromptSpec{PromptKind::box, {x1, y1, x2, y2}, {}, 0, frame};
}

PromptSpec PromptSpec::grid_mask(std::vector<std::uint8_t> cells, std::size_t side,
                                 std::size_t frame) {
  return PromptSpec{PromptKind::mask, {}, std::move(cells), side, frame};
}

void PromptSpec::validate(std::size_t grid) const {
  auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  switch (kind) {
    case PromptKind::point:
      if (coords.size() != 2) throw InputError("point prompt needs 2 coordinates");
      break;
    case PromptKind::box:
      if (coords.size() != 4) throw InputError("box prompt needs 4 coordinates");
      if (coords[0] > coords[2] || coords[1] > coords[3]) {
        throw InputError("box corners must be ordered (x1<=x2, y1<=y2)");
      }
      break;
    case PromptKind::mask:
      if (mask_grid == 0 || mask.size() != mask_grid * mask_grid) {
        throw InputError("mask prompt must be a square binary grid");
      }
      if (grid != 0 && mask_grid != grid) {
        throw InputError("mask grid " + std::to_string(mask_grid) + " does not match model grid " +
                         std::to_string(grid));
      }
      if (std::any_of(mask.begin(), mask.end(), [](std::uint8_t v) { return v > 1; })) {
        throw InputError("mask cells must be 0 or 1");
      }
      return;
  }
  if (!std::all_of(coords.begin(), coords.end(), in_unit)) {
    throw InputError("prompt coordinates must lie in [0, 1]");
  }
}

nlohmann::json to_json(const PromptSpec& p) {
  nlohmann::json j{{"kind", to_string(p.kind)}, {"frame", p.frame_index}};
  if (p.kind == PromptKind::mask) {
    j["grid"] = p.mask_grid;
    j["mask"] = p.mask;
  } else {
    j["coords"] = p.coords;
  }
  return j;
}

PromptSpec prompt_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw InputError("prompt must be a JSON object");
    PromptSpec p;
    p.kind = parse_prompt_kind(j.at("kind").get<std::string>());
    p.frame_index = j.value("frame", std::size_t{0});
    if (p.kind == PromptKind::mask) {
      p.mask_grid = j.at("grid").get<std::size_t>();
      p.mask = j.at("mask").get<std::vector<std::uint8_t>>();
    } else {
      p.coords = j.at("coords").get<std::vector<double>>();
    }
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed prompt: ") + e.what());
  }
}

}  // namespace pam::backbone
