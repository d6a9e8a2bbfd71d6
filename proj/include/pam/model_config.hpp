// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

namespace pam {

/// Model dimensions. Defaults are the full-scale values; tests and the
/// desk-scale curriculum override them with tiny dims.
struct ModelConfig {
  std::size_t grid = 64;            // G: image embedding side
  std::size_t dim = 256;            // D: backbone / perceiver width
  std::size_t mask_tokens = 4;      // M
  std::size_t semantic_tokens = 16; // N_s
  std::size_t embed = 64;           // E: decoder width
  std::size_t decoder_layers = 2;
  std::size_t context_limit = 8192;
  std::uint64_t seed = 0;

  /// Throws ConfigError when a precondition of any module is violated.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace pam
