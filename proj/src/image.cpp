// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/image.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "pam/errors.hpp"
#include "pam/hash.hpp"

namespace pam {

Image::Image(std::size_t w, std::size_t h, Rgb fill) : width(w), height(h), pixels(w * h * 3) {
  for (std::size_t i = 0; i < w * h; ++i) {
    pixels[3 * i] = fill[0];
    pixels[3 * i + 1] = fill[1];
    pixels[3 * i + 2] = fill[2];
  }
}

Rgb Image::at(std::size_t x, std::size_t y) const {
  const std::size_t o = 3 * (y * width + x);
  return {pixels[o], pixels[o + 1], pixels[o + 2]};
}

void Image::set(std::size_t x, std::size_t y, Rgb c) {
  const std::size_t o = 3 * (y * width + x);
  pixels[o] = c[0];
  pixels[o + 1] = c[1];
  pixels[o + 2] = c[2];
}

Image synthetic_image(std::uint64_t seed, std::size_t width, std::size_t height) {
  Image img(width, height);
  const double cx = unit_hash(seed, 1) * static_cast<double>(width);
  const double cy = unit_hash(seed, 2) * static_cast<double>(height);
  const double radius = (0.15 + 0.2 * unit_hash(seed, 3)) * static_cast<double>(std::min(width, height));
  const Rgb blob = {static_cast<std::uint8_t>(hash_words({seed, 4}) & 0xff),
                    static_cast<std::uint8_t>(hash_words({seed, 5}) & 0xff),
                    static_cast<std::uint8_t>(hash_words({seed, 6}) & 0xff)};
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      if (std::sqrt(dx * dx + dy * dy) < radius) {
        img.set(x, y, blob);
      } else {
        img.set(x, y, {static_cast<std::uint8_t>((x * 255) / std::max<std::size_t>(1, width - 1)),
                       static_cast<std::uint8_t>((y * 255) / std::max<std::size_t>(1, height - 1)),
                       static_cast<std::uint8_t>(seed * 37 % 256)});
      }
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw InputError(std::string("png encode failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw InputError(std::string("png encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw InputError(std::string("undecodable image: ") + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  Image img(png.width, png.height);
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw InputError(std::string("undecodable image: ") + png.message);
  }
  return img;
}

Image read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

void write_png(const std::filesystem::path& path, const Image& image) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write image " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

}  // namespace pam
