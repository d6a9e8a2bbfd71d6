// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pam/model_config.hpp"
#include "pam/numcore/layers.hpp"

namespace pam::decoder {

// Byte-level vocabulary: ids 0..255 are raw bytes.
inline constexpr int kBos = 256;
inline constexpr int kEos = 257;
inline constexpr int kPad = 258;
inline constexpr int kSep = 259;
inline constexpr int kVocabSize = 260;
/// Marks a position filled by a projected embedding rather than a token.
inline constexpr int kEmbedded = -1;

std::vector<int> encode_text(std::string_view text);
/// Bytes back to a string; special ids are skipped.
std::string decode_tokens(const std::vector<int>& ids);
bool is_special(int id);

/// Instruction segment text: optional "Previous: ..." line, then the
/// instruction template.
std::string instruction_text(std::string_view instruction,
                             const std::optional<std::string>& prev_description);

/// Positions:
///   BOS, visual rows, SEP, semantic rows, SEP, instruction bytes, SEP,
///   [response bytes, EOS]
/// targets[i] is the id at i+1 (kPad at the end). loss_mask[i] is set exactly
/// when targets[i] is a response byte or the closing EOS.
struct SequenceLayout {
  num::Tensor visual;    // [Tv×E]
  num::Tensor semantic;  // [Ts×E]
  std::string instruction;
  std::optional<std::string> response;

  std::vector<int> tokens;
  std::vector<int> targets;
  std::vector<bool> loss_mask;
  std::size_t visual_begin = 0;
  std::size_t semantic_begin = 0;
  std::size_t instruction_begin = 0;
  std::size_t response_begin = 0;  // first position after the last SEP

  std::size_t length() const { return tokens.size(); }
  std::size_t masked_count() const;
};

/// Throws InputError on an empty instruction and ShapeError when visual and
/// semantic widths differ.
SequenceLayout build_layout(num::Tensor visual, num::Tensor semantic, std::string_view instruction,
                            std::optional<std::string> response = std::nullopt,
                            std::optional<std::string> prev_description = std::nullopt);

struct Generation {
  std::string text;
  std::vector<int> tokens;  // includes the final EOS when one was emitted
  bool hit_eos = false;
};

/// Pre-LN causal transformer over [prefix embeddings ++ token embeddings]
/// with fixed sinusoidal positions and a byte-vocab head.
class Decoder {
 public:
  explicit Decoder(const ModelConfig& config);

  /// Logits [L×|V|]. The Var overloads let gradients reach the projector.
  num::Var forward(num::Tape& tape, const SequenceLayout& layout);
  num::Var forward(num::Tape& tape, const SequenceLayout& layout, num::Var visual,
                   num::Var semantic);
  /// Text-only sequence.
  num::Var forward_tokens(num::Tape& tape, const std::vector<int>& ids);

  num::Var loss(num::Tape& tape, const SequenceLayout& layout, num::Var visual, num::Var semantic);
  num::Var loss(num::Tape& tape, const SequenceLayout& layout);
  double loss(const SequenceLayout& layout);

  /// Greedy decoding after the layout's final SEP. Ties go to the lowest id.
  /// Stops at EOS or after max_len tokens (max_len ≥ 1).
  Generation generate(const SequenceLayout& prompt, std::size_t max_len);

  num::ParamList parameters();
  num::ConstParamList parameters() const;
  const ModelConfig& config() const { return config_; }

  void save(const std::filesystem::path& path) const;
  /// Dimensions in the file header must match this decoder's config.
  void load(const std::filesystem::path& path);

 private:
  struct Block {
    num::LayerNorm ln1;
    num::Linear q, k, v, o;
    num::LayerNorm ln2;
    num::Mlp mlp;
  };
  struct KvCache {
    std::vector<num::Tensor> keys, values;  // per block, [T×E]
  };

  num::Var run(num::Tape& tape, num::Var x, KvCache* cache);
  num::Var embed(num::Tape& tape, const SequenceLayout& layout, num::Var visual, num::Var semantic);
  num::Tensor step(int id, std::size_t position, KvCache& cache);
  void check_length(std::size_t length) const;

  ModelConfig config_;
  num::Parameter token_table_;  // [|V|×E]
  std::vector<Block> blocks_;
  num::LayerNorm final_ln_;
  num::Linear head_;
};

/// Fixed sinusoidal position table rows [offset, offset+count).
num::Tensor sinusoidal_positions(std::size_t offset, std::size_t count, std::size_t dim);

}  // namespace pam::decoder
