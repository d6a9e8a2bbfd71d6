// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>

#include "pam/model_config.hpp"
#include "pam/numcore/layers.hpp"

namespace pam::projector {

/// How a frame is compressed before projection.
///   prompted   - the frame carrying the visual prompt (single images too), 2×2
///   regular    - any other video frame, 4×4
///   clip_final - last frame of a streaming clip, kept at 2×2
enum class FrameRole { prompted, regular, clip_final };

std::string to_string(FrameRole role);
std::size_t shuffle_factor(FrameRole role);
/// (G / r)² for the role's factor r.
std::size_t tokens_for_role(FrameRole role, std::size_t grid);

/// Visual-token count for an N-frame input at grid G.
///   non-streaming: prompted frame + (N−1) regular frames
///   streaming clip: first (carry-over or prompted) + (N−2) regular + clip-final;
///                   a single-frame clip is clip-final only
/// N = 0 raises InputError.
std::size_t visual_budget(std::size_t frames, bool streaming, std::size_t grid = 64);

/// Space-to-depth on a [G²×D] grid (row index y·G + x). Output token
/// py·(G/r) + px holds the r×r patch at (py·r, px·r); channel (dy·r + dx)·D + c
/// holds channel c of cell (py·r + dy, px·r + dx). Result [(G/r)² × D·r²].
num::Tensor pixel_shuffle(const num::Tensor& grid, std::size_t side, std::size_t r);
num::Var pixel_shuffle(num::Var grid, std::size_t side, std::size_t r);
/// Exact inverse of pixel_shuffle.
num::Tensor pixel_unshuffle(const num::Tensor& tokens, std::size_t side, std::size_t r);

struct ProjectedTokens {
  num::Tensor tokens;  // [T×E]
  FrameRole role = FrameRole::prompted;
  std::size_t frame_index = 0;
};

/// Pixel shuffle followed by two distinct MLPs into the decoder width E.
/// The visual MLP has one input layer per shuffle factor (width D·r²) and a
/// shared output layer; the semantic MLP shares nothing with it.
class Projector {
 public:
  explicit Projector(const ModelConfig& config);

  num::Var project_visual(num::Tape& tape, num::Var grid, FrameRole role);
  num::Var project_semantic(num::Tape& tape, num::Var tokens);

  ProjectedTokens project_visual(const num::Tensor& grid, FrameRole role,
                                 std::size_t frame_index = 0);
  num::Tensor project_semantic(const num::Tensor& tokens);

  num::ParamList parameters();
  num::ConstParamList parameters() const;
  num::ParamList visual_parameters();
  num::ParamList semantic_parameters();

  const ModelConfig& config() const { return config_; }

 private:
  ModelConfig config_;
  num::Linear visual_in_r2_;
  num::Linear visual_in_r4_;
  num::Linear visual_out_;
  num::Mlp semantic_;
};

}  // namespace pam::projector
