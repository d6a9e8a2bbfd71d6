// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pam/backbone/prompt.hpp"
#include "pam/image.hpp"

namespace pam::datapipe {

inline constexpr std::size_t kKeyframes = 6;

/// Uniform indices floor(k(T-1)/(K-1)), k = 0..K-1. Throws InputError when
/// K < 2 or T < K.
std::vector<std::size_t> sample_keyframes(std::size_t frame_count, std::size_t k = kKeyframes);

struct MarkColor {
  std::string name;
  Rgb rgb;
};

/// Palette used for set-of-mark outlines; the storyboard line names the color.
const std::vector<MarkColor>& mark_palette();

/// Draws the region prompt onto `frame`.
///   box:   2 px outline, pixels outside the outline untouched
///   mask:  50% blend inside the mask cells
///   point: outline of a small box centred on the point
/// Throws InputError for a zero-area box.
Image som_overlay(const Image& frame, const backbone::PromptSpec& prompt, Rgb color);

/// Frame-number label drawn as `number` white 2x2 dots along the top edge.
Image label_frame(const Image& frame, std::size_t number);

/// Keyframes laid out rows x cols, each cell = label_frame(som_overlay(frame), k + 1).
/// Requires exactly rows*cols equally sized frames (InputError otherwise).
struct StoryboardSpec {
  std::size_t rows = 2;
  std::size_t cols = 3;
  Rgb color{255, 0, 0};
};

Image compose_storyboard(const std::vector<Image>& keyframes, const backbone::PromptSpec& prompt,
                         const StoryboardSpec& spec = {});

/// Loads frames for a media id.
///   "synthetic:<seed>"  generated frames of side `synthetic_side`
///   otherwise           a PNG file (image) or a directory of PNGs sorted by name (video)
class MediaSource {
 public:
  MediaSource() : MediaSource(std::filesystem::path{}) {}
  explicit MediaSource(std::filesystem::path root, std::size_t synthetic_side = 64);
  Image image(const std::string& media_id) const;
  Image video_frame(const std::string& media_id, std::size_t index, std::size_t frame_count) const;

 private:
  std::filesystem::path root_;
  std::size_t side_;
};

}  // namespace pam::datapipe
