// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/datapipe/storyboard.hpp"

#include <algorithm>
#include <cmath>

#include "pam/errors.hpp"
#include "pam/hash.hpp"

namespace pam::datapipe {

std::vector<std::size_t> sample_keyframes(std::size_t frame_count, std::size_t k) {
  if (k < 2) throw InputError("keyframe count must be at least 2");
  if (frame_count < k) {
    throw InputError("video has " + std::to_string(frame_count) + " frames, need at least " +
                     std::to_string(k));
  }
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = i * (frame_count - 1) / (k - 1);
  return out;
}

const std::vector<MarkColor>& mark_palette() {
  static const std::vector<MarkColor> kPalette{
      {"red", {255, 0, 0}}, {"green", {0, 255, 0}}, {"blue", {0, 0, 255}},
      {"yellow", {255, 255, 0}}, {"magenta", {255, 0, 255}}, {"cyan", {0, 255, 255}}};
  return kPalette;
}

namespace {

// Normalized coordinate to pixel index, clamped to the image.
std::size_t to_px(double v, std::size_t extent) {
  const double p = std::floor(v * static_cast<double>(extent));
  return static_cast<std::size_t>(std::clamp(p, 0.0, static_cast<double>(extent - 1)));
}

void outline(Image& img, std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1, Rgb c) {
  for (std::size_t y = y0; y <= y1; ++y) {
    for (std::size_t x = x0; x <= x1; ++x) {
      const bool edge = x < x0 + 2 || x + 2 > x1 || y < y0 + 2 || y + 2 > y1;
      if (edge) img.set(x, y, c);
    }
  }
}

std::uint8_t blend(std::uint8_t a, std::uint8_t b) {
  return static_cast<std::uint8_t>(std::lround(0.5 * a + 0.5 * b));
}

}  // namespace

Image som_overlay(const Image& frame, const backbone::PromptSpec& prompt, Rgb color) {
  prompt.validate();
  if (frame.width == 0 || frame.height == 0) throw InputError("empty frame");
  Image out = frame;
  const std::size_t w = frame.width, h = frame.height;
  switch (prompt.kind) {
    case backbone::PromptKind::box: {
      const auto& c = prompt.coords;
      if (!(c[2] > c[0]) || !(c[3] > c[1])) throw InputError("box prompt has zero area");
      outline(out, to_px(c[0], w), to_px(c[1], h), to_px(c[2], w), to_px(c[3], h), color);
      break;
    }
    case backbone::PromptKind::point: {
      const std::size_t cx = to_px(prompt.coords[0], w), cy = to_px(prompt.coords[1], h);
      const std::size_t r = std::max<std::size_t>(2, std::min(w, h) / 16);
      outline(out, cx > r ? cx - r : 0, cy > r ? cy - r : 0, std::min(w - 1, cx + r),
              std::min(h - 1, cy + r), color);
      break;
    }
    case backbone::PromptKind::mask: {
      const std::size_t g = prompt.mask_grid;
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          if (!prompt.mask[(y * g / h) * g + x * g / w]) continue;
          const Rgb p = frame.at(x, y);
          out.set(x, y, {blend(p[0], color[0]), blend(p[1], color[1]), blend(p[2], color[2])});
        }
      }
      break;
    }
  }
  return out;
}

Image label_frame(const Image& frame, std::size_t number) {
  Image out = frame;
  for (std::size_t i = 0; i < number; ++i) {
    const std::size_t x0 = 1 + 3 * i;
    if (x0 + 2 > out.width || out.height < 3) break;
    for (std::size_t dy = 0; dy < 2; ++dy)
      for (std::size_t dx = 0; dx < 2; ++dx) out.set(x0 + dx, 1 + dy, {255, 255, 255});
  }
  return out;
}

Image compose_storyboard(const std::vector<Image>& keyframes, const backbone::PromptSpec& prompt,
                         const StoryboardSpec& spec) {
  if (keyframes.size() != spec.rows * spec.cols) {
    throw InputError("storyboard needs " + std::to_string(spec.rows * spec.cols) +
                     " keyframes, got " + std::to_string(keyframes.size()));
  }
  const std::size_t w = keyframes.front().width, h = keyframes.front().height;
  for (const auto& f : keyframes) {
    if (f.width != w || f.height != h) throw InputError("keyframes differ in size");
  }
  Image board(w * spec.cols, h * spec.rows);
  for (std::size_t k = 0; k < keyframes.size(); ++k) {
    const Image cell = label_frame(som_overlay(keyframes[k], prompt, spec.color), k + 1);
    const std::size_t ox = (k % spec.cols) * w, oy = (k / spec.cols) * h;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) board.set(ox + x, oy + y, cell.at(x, y));
  }
  return board;
}

MediaSource::MediaSource(std::filesystem::path root, std::size_t synthetic_side)
    : root_(std::move(root)), side_(synthetic_side) {}

namespace {

bool synthetic_seed(const std::string& id, std::uint64_t& seed) {
  static constexpr std::string_view kPrefix = "synthetic:";
  if (id.rfind(kPrefix, 0) != 0) return false;
  try {
    std::size_t used = 0;
    seed = std::stoull(id.substr(kPrefix.size()), &used);
    if (used != id.size() - kPrefix.size()) throw InputError("bad synthetic id " + id);
  } catch (const std::logic_error&) {
    throw InputError("bad synthetic id " + id);
  }
  return true;
}

}  // namespace

Image MediaSource::image(const std::string& media_id) const {
  std::uint64_t seed = 0;
  if (synthetic_seed(media_id, seed)) return synthetic_image(seed, side_, side_);
  return read_png(root_ / media_id);
}

Image MediaSource::video_frame(const std::string& media_id, std::size_t index,
                               std::size_t frame_count) const {
  if (index >= frame_count) throw InputError("frame index out of range for " + media_id);
  std::uint64_t seed = 0;
  if (synthetic_seed(media_id, seed)) {
    return synthetic_image(hash_words({seed, index, fnv1a("frame")}), side_, side_);
  }
  const auto dir = root_ / media_id;
  if (!std::filesystem::is_directory(dir)) throw InputError("missing frame directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.size() != frame_count) {
    throw InputError(dir.string() + " holds " + std::to_string(files.size()) + " frames, record says " +
                     std::to_string(frame_count));
  }
  return read_png(files[index]);
}

}  // namespace pam::datapipe
