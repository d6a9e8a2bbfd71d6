// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pam {

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(std::size_t w, std::size_t h, Rgb fill = {0, 0, 0});

  Rgb at(std::size_t x, std::size_t y) const;
  void set(std::size_t x, std::size_t y, Rgb c);
  friend bool operator==(const Image&, const Image&) = default;
};

/// Deterministic test pattern: smooth gradients plus a seeded blob.
Image synthetic_image(std::uint64_t seed, std::size_t width, std::size_t height);

/// PNG codec (libpng). Decoding failures raise InputError.
std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> bytes);
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace pam
