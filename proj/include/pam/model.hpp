// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pam/backbone/backbone.hpp"
#include "pam/decoder/decoder.hpp"
#include "pam/perceiver/perceiver.hpp"
#include "pam/projector/projector.hpp"

namespace pam {

enum class Component { backbone, perceiver, projector, decoder };
std::string to_string(Component c);

/// Roles for a non-streaming sequence of `frames` frames: the prompted frame
/// at 2×2, every other frame at 4×4.
std::vector<projector::FrameRole> video_roles(std::size_t frames, std::size_t prompted_index);

/// Foreground summary of mask logits [G×G] (cells with logit > 0).
struct MaskSummary {
  std::size_t area = 0;
  // Inclusive cell bounds; meaningless when area == 0.
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};
MaskSummary summarize_mask(const num::Tensor& logits, std::size_t grid);

/// Decoder prefix for one forward pass.
struct Prefix {
  num::Tensor visual;    // [Tv×E], frames in order, carry first when present
  num::Tensor semantic;  // [Ts×E]
  std::optional<projector::ProjectedTokens> last_frame;  // projected last own frame
};

struct PrefixVars {
  num::Var visual;
  num::Var semantic;
};

struct Description {
  std::string text;
  std::string instruction;
  std::size_t visual_tokens = 0;
  std::size_t semantic_tokens = 0;
  std::size_t sequence_length = 0;
};

/// Frozen backbone → perceiver → projector → decoder.
class Model {
 public:
  explicit Model(const ModelConfig& config, perceiver::Tap tap = perceiver::Tap::post_ffm);

  const ModelConfig& config() const { return config_; }
  perceiver::Tap tap() const { return tap_; }

  backbone::Backbone& backbone() { return backbone_; }
  const backbone::Backbone& backbone() const { return backbone_; }
  perceiver::SemanticPerceiver& perceiver() { return perceiver_; }
  projector::Projector& projector() { return projector_; }
  decoder::Decoder& decoder() { return decoder_; }

  /// Frame i of a synthetic video is the synthetic image seeded by (seed, i).
  std::vector<backbone::ImageGridEmbedding> synthetic_video(std::uint64_t seed,
                                                            std::size_t frames) const;

  /// Backbone fusion of every frame with the prompt; frame i > 0 attends to
  /// frame i−1 as memory, and `memory` seeds frame 0 when given.
  std::vector<backbone::FusedState> encode(
      const std::vector<backbone::ImageGridEmbedding>& frames, const backbone::PromptSpec& prompt,
      const backbone::ImageGridEmbedding* memory = nullptr) const;

  /// Roles must match `states` one to one. `carry` is prepended to the visual
  /// sequence as-is.
  Prefix prefix(const std::vector<backbone::FusedState>& states,
                const std::vector<projector::FrameRole>& roles,
                const num::Tensor* carry = nullptr);
  PrefixVars prefix(num::Tape& tape, const std::vector<backbone::FusedState>& states,
                    const std::vector<projector::FrameRole>& roles,
                    const num::Tensor* carry = nullptr);

  /// Teacher-forced response loss through perceiver, projector and decoder.
  num::Var loss(num::Tape& tape, const std::vector<backbone::FusedState>& states,
                const std::vector<projector::FrameRole>& roles, const std::string& instruction,
                const std::string& response,
                const std::optional<std::string>& prev_description = std::nullopt);

  num::ParamList parameters(Component c);
  num::ConstParamList parameters(Component c) const;
  std::uint64_t checksum(Component c) const;
  /// Marks exactly the listed components trainable; the backbone can never
  /// be made trainable (ConfigError).
  void set_trainable(const std::vector<Component>& components);

  /// Perceiver, projector and decoder weights in one file; the header JSON
  /// carries the model dims plus `extra`.
  void save(const std::filesystem::path& path, const nlohmann::json& extra = {}) const;
  /// Returns the stored header.
  nlohmann::json load(const std::filesystem::path& path);

  Description describe(const Prefix& prefix, const std::string& instruction,
                       const std::optional<std::string>& prev_description, std::size_t max_len);

 private:
  ModelConfig config_;
  perceiver::Tap tap_;
  backbone::Backbone backbone_;
  perceiver::SemanticPerceiver perceiver_;
  projector::Projector projector_;
  decoder::Decoder decoder_;
};

}  // namespace pam
