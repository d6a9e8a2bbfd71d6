// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/perceiver/perceiver.hpp"

#include "pam/errors.hpp"
#include "pam/hash.hpp"

namespace pam::perceiver {

using num::Tape;
using num::Var;

namespace {
constexpr std::size_t kLayers = 2;
}

std::string to_string(Tap tap) { return tap == Tap::post_ffm ? "post_ffm" : "pre_ffm"; }

Tap parse_tap(const std::string& s) {
  if (s == "post_ffm") return Tap::post_ffm;
  if (s == "pre_ffm") return Tap::pre_ffm;
  throw ConfigError("unknown perceiver tap '" + s + "'");
}

SemanticTokenBank init_bank(std::size_t count, std::size_t dim, std::uint64_t seed) {
  if (count == 0) throw ConfigError("semantic token bank needs at least one token");
  num::Rng rng(seed);
  return SemanticTokenBank{
      num::Parameter("perceiver.semantic_bank", num::randn({count, dim}, 0.02, rng), true)};
}

std::size_t PerceiverOutput::total_visual_tokens() const {
  std::size_t n = 0;
  for (const auto& t : visual_tokens) n += t.rows();
  return n;
}

std::size_t PerceiverOutput::total_semantic_tokens() const {
  std::size_t n = 0;
  for (const auto& t : semantic_tokens) n += t.rows();
  return n;
}

SemanticPerceiver::SemanticPerceiver(const ModelConfig& config) : config_(config) {
  config_.validate();
  bank_ = init_bank(config_.semantic_tokens, config_.dim,
                    hash_words({config_.seed, fnv1a("perceiver.bank")}));
  num::Rng rng(hash_words({config_.seed, fnv1a("perceiver")}));
  for (std::size_t i = 0; i < kLayers; ++i) {
    layers_.emplace_back("perceiver.layer" + std::to_string(i), config_.dim, rng, true);
  }
}

FrameTokens SemanticPerceiver::forward(Tape& tape, const backbone::FusedState& state, Tap tap) {
  const auto& grid = tap == Tap::post_ffm ? state.updated_image_embedding : state.pre_ffm_embedding;
  const std::size_t d = config_.dim;
  if (grid.dim != d || grid.values.cols() != d || state.enhanced_mask_tokens.cols() != d) {
    throw ShapeError("perceiver: fused state dim " + std::to_string(grid.values.cols()) +
                     " does not match perceiver dim " + std::to_string(d));
  }
  const std::size_t m = state.enhanced_mask_tokens.rows();
  Var tokens = num::concat_rows({tape.constant(state.enhanced_mask_tokens), tape.param(bank_.values)});
  Var token_pe = tokens;
  Var image = tape.constant(grid.values);
  Var image_pe = tape.constant(num::Tensor(grid.values.shape()));
  for (auto& layer : layers_) layer.apply(tape, tokens, token_pe, image, image_pe);
  return FrameTokens{image, num::slice_rows(tokens, m, m + bank_.count())};
}

PerceiverOutput SemanticPerceiver::perceive(const backbone::FusedState& state, Tap tap) {
  return perceive(std::vector<backbone::FusedState>{state}, tap);
}

PerceiverOutput SemanticPerceiver::perceive(const std::vector<backbone::FusedState>& frames,
                                            Tap tap) {
  PerceiverOutput out;
  for (const auto& fs : frames) {
    Tape tape;
    FrameTokens ft = forward(tape, fs, tap);
    out.visual_tokens.push_back(ft.visual.value());
    out.semantic_tokens.push_back(ft.semantic.value());
  }
  return out;
}

num::ParamList SemanticPerceiver::parameters() {
  num::ParamList out{&bank_.values};
  for (auto& l : layers_) l.collect(out);
  return out;
}

num::ConstParamList SemanticPerceiver::parameters() const {
  return num::as_const(const_cast<SemanticPerceiver&>(*this).parameters());
}

num::ParamList SemanticPerceiver::trainable_parameters() {
  num::ParamList out;
  for (num::Parameter* p : parameters())
    if (p->trainable) out.push_back(p);
  return out;
}

}  // namespace pam::perceiver
