// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "pam/backbone/prompt.hpp"
#include "pam/image.hpp"
#include "pam/model_config.hpp"
#include "pam/numcore/layers.hpp"

namespace pam::backbone {

/// Image features on a G×G grid, stored as [G²×D] with row index y·G + x.
struct ImageGridEmbedding {
  std::size_t grid = 0;
  std::size_t dim = 0;
  num::Tensor values;
  std::size_t frame_index = 0;

  friend bool operator==(const ImageGridEmbedding&, const ImageGridEmbedding&) = default;
};

struct MaskTokenSet {
  num::Parameter values;  // [M×D], frozen
  std::size_t count() const { return values.value.dim(0); }
};

/// Output of one fuse() call: the tap point consumed by the perceiver.
struct FusedState {
  num::Tensor enhanced_mask_tokens;     // [M×D]
  ImageGridEmbedding updated_image_embedding;
  ImageGridEmbedding pre_ffm_embedding;  // fuse() input, kept for the tap ablation

  /// Digest of every value, used to assert consumers never mutate it.
  std::uint64_t checksum() const;
};

/// One S2-FFM-style two-way layer: token self-attention, token→image
/// cross-attention, token MLP, image→token cross-attention.
struct TwoWayLayer {
  num::Attention self_attn;
  num::LayerNorm norm1;
  num::Attention token_to_image;
  num::LayerNorm norm2;
  num::Mlp mlp;
  num::LayerNorm norm3;
  num::Attention image_to_token;
  num::LayerNorm norm4;

  TwoWayLayer() = default;
  TwoWayLayer(const std::string& name, std::size_t dim, num::Rng& rng, bool trainable);
  /// Updates `tokens` and `image` in place. Positional terms are added to
  /// queries and keys, never to values.
  void apply(num::Tape& tape, num::Var& tokens, num::Var token_pe, num::Var& image,
             num::Var image_pe);
  void collect(num::ParamList& out);
};

/// Frozen, seeded stand-in for the segmentation backbone: image encoder,
/// prompt encoder, two-way feature fusion and a hypernetwork mask decoder.
class Backbone {
 public:
  explicit Backbone(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  /// Values are a fixed pseudo-random function of (seed, position, channel).
  ImageGridEmbedding encode_synthetic(std::uint64_t seed, std::size_t frame_index = 0) const;
  /// Area-resamples the image to G×G and embeds each cell.
  ImageGridEmbedding encode_image(const Image& image, std::size_t frame_index = 0) const;
  /// PNG bytes; undecodable input raises InputError.
  ImageGridEmbedding encode_image_bytes(std::span<const std::uint8_t> png,
                                        std::size_t frame_index = 0) const;

  /// point → 1 token, box → 2 corner tokens, mask → 1 pooled token. [P×D]
  num::Tensor encode_prompt(const PromptSpec& prompt) const;

  /// Two-way fusion. With `memory` (the previous frame's updated embedding)
  /// the grid first cross-attends to a pooled copy of it.
  FusedState fuse(const ImageGridEmbedding& image, const num::Tensor& prompt_tokens,
                  const ImageGridEmbedding* memory = nullptr) const;

  /// Per-cell logits [G×G]: first enhanced mask token through the hyper MLP,
  /// dotted with each updated image cell. Pure function of `state`.
  num::Tensor decode_mask(const FusedState& state) const;

  /// Fourier positional features for a normalized point, [1×D].
  num::Tensor positional_encoding(double x, double y) const;
  /// Dense positional features for every grid cell, [G²×D].
  const num::Tensor& dense_positional_encoding() const { return dense_pe_; }

  const MaskTokenSet& mask_tokens() const { return mask_tokens_; }
  num::ParamList parameters();
  num::ConstParamList parameters() const;
  std::uint64_t checksum() const;

  /// Weight-loading hook; header JSON carries grid, dim and mask_tokens.
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  num::Tensor embed_cells(const std::vector<double>& rgb) const;

  ModelConfig config_;
  num::Parameter fourier_basis_;   // [2 × D/2]
  num::Parameter point_embed_;     // [1×D]
  num::Parameter corner_embed_;    // [2×D] top-left, bottom-right
  num::Parameter mask_embed_;      // [1×D]
  num::Parameter empty_mask_embed_;// [1×D]
  num::Parameter pixel_embed_;     // [3×D]
  num::Parameter pixel_bias_;      // [D]
  MaskTokenSet mask_tokens_;
  num::Attention memory_attn_;
  num::LayerNorm memory_norm_;
  std::vector<TwoWayLayer> layers_;
  num::Mlp hyper_mlp_;
  num::Tensor dense_pe_;
};

/// Flattened grid tokens in row-major cell order.
num::Tensor grid_tokens(const ImageGridEmbedding& e);

}  // namespace pam::backbone
