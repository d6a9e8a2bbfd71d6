// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pam/backbone/backbone.hpp"
#include "pam/model_config.hpp"
#include "pam/numcore/layers.hpp"

namespace pam::perceiver {

/// Which backbone embedding the perceiver reads.
enum class Tap { post_ffm, pre_ffm };

std::string to_string(Tap tap);
Tap parse_tap(const std::string& s);

/// Learnable query tokens, one shared set replicated per frame.
struct SemanticTokenBank {
  num::Parameter values;  // [N_s×D]
  std::size_t count() const { return values.value.dim(0); }
  bool trainable() const { return values.trainable; }
};

/// Values ~ normal(0, 0.02), seeded. N_s = 0 raises ConfigError.
SemanticTokenBank init_bank(std::size_t count, std::size_t dim, std::uint64_t seed);

/// Per-frame perceiver outputs recorded on a tape (differentiable).
struct FrameTokens {
  num::Var visual;    // [G²×D]
  num::Var semantic;  // [N_s×D]
};

struct PerceiverOutput {
  std::vector<num::Tensor> visual_tokens;    // per frame, [G²×D]
  std::vector<num::Tensor> semantic_tokens;  // per frame, [N_s×D]

  std::size_t frame_count() const { return visual_tokens.size(); }
  std::size_t total_visual_tokens() const;
  std::size_t total_semantic_tokens() const;
};

/// Two-layer transformer mirroring the fusion module: the enhanced mask
/// tokens and the semantic bank form the token sequence; the (post- or
/// pre-fusion) image grid is the second stream.
class SemanticPerceiver {
 public:
  explicit SemanticPerceiver(const ModelConfig& config);

  FrameTokens forward(num::Tape& tape, const backbone::FusedState& state,
                      Tap tap = Tap::post_ffm);

  PerceiverOutput perceive(const backbone::FusedState& state, Tap tap = Tap::post_ffm);
  PerceiverOutput perceive(const std::vector<backbone::FusedState>& frames,
                           Tap tap = Tap::post_ffm);

  SemanticTokenBank& bank() { return bank_; }
  const SemanticTokenBank& bank() const { return bank_; }

  /// Every perceiver-owned tensor (layers + bank).
  num::ParamList parameters();
  num::ConstParamList parameters() const;
  /// Subset flagged trainable; includes the bank iff it is trainable.
  num::ParamList trainable_parameters();

  const ModelConfig& config() const { return config_; }

 private:
  ModelConfig config_;
  SemanticTokenBank bank_;
  std::vector<backbone::TwoWayLayer> layers_;
};

}  // namespace pam::perceiver
