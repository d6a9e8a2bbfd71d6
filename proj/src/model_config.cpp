// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/model_config.hpp"

#include <string>

#include "pam/errors.hpp"

namespace pam {

void ModelConfig::validate() const {
  if (grid < 4 || (grid & (grid - 1)) != 0) {
    throw ConfigError("grid must be a power of two >= 4, got " + std::to_string(grid));
  }
  if (dim < 2 || dim % 2 != 0) throw ConfigError("dim must be even and >= 2");
  if (mask_tokens == 0) throw ConfigError("mask_tokens must be >= 1");
  if (semantic_tokens == 0) throw ConfigError("semantic_tokens must be >= 1");
  if (embed < 2 || embed % 2 != 0) throw ConfigError("embed must be even and >= 2");
  if (decoder_layers == 0) throw ConfigError("decoder_layers must be >= 1");
  if (context_limit == 0) throw ConfigError("context_limit must be >= 1");
}

}  // namespace pam
