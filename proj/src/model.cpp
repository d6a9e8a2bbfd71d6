// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/model.hpp"

#include <algorithm>

#include "pam/errors.hpp"
#include "pam/hash.hpp"
#include "pam/numcore/serialize.hpp"

namespace pam {

using num::Tape;
using num::Tensor;
using num::Var;
using projector::FrameRole;

std::string to_string(Component c) {
  switch (c) {
    case Component::backbone: return "backbone";
    case Component::perceiver: return "perceiver";
    case Component::projector: return "projector";
    case Component::decoder: return "decoder";
  }
  return "backbone";
}

std::vector<FrameRole> video_roles(std::size_t frames, std::size_t prompted_index) {
  if (frames == 0) throw InputError("video has no frames");
  if (prompted_index >= frames) {
    throw InputError("prompt frame " + std::to_string(prompted_index) + " outside " +
                     std::to_string(frames) + "-frame video");
  }
  std::vector<FrameRole> roles(frames, FrameRole::regular);
  roles[prompted_index] = FrameRole::prompted;
  return roles;
}

MaskSummary summarize_mask(const Tensor& logits, std::size_t grid) {
  MaskSummary s;
  s.x0 = grid;
  s.y0 = grid;
  for (std::size_t y = 0; y < grid; ++y)
    for (std::size_t x = 0; x < grid; ++x) {
      if (logits[y * grid + x] <= 0.0) continue;
      ++s.area;
      s.x0 = std::min(s.x0, x);
      s.y0 = std::min(s.y0, y);
      s.x1 = std::max(s.x1, x);
      s.y1 = std::max(s.y1, y);
    }
  if (s.area == 0) s.x0 = s.y0 = 0;
  return s;
}

Model::Model(const ModelConfig& config, perceiver::Tap tap)
    : config_(config),
      tap_(tap),
      backbone_(config),
      perceiver_(config),
      projector_(config),
      decoder_(config) {}

std::vector<backbone::ImageGridEmbedding> Model::synthetic_video(std::uint64_t seed,
                                                                 std::size_t frames) const {
  std::vector<backbone::ImageGridEmbedding> out;
  out.reserve(frames);
  for (std::size_t i = 0; i < frames; ++i)
    out.push_back(backbone_.encode_synthetic(hash_words({seed, i, fnv1a("frame")}), i));
  return out;
}

std::vector<backbone::FusedState> Model::encode(
    const std::vector<backbone::ImageGridEmbedding>& frames, const backbone::PromptSpec& prompt,
    const backbone::ImageGridEmbedding* memory) const {
  const Tensor prompt_tokens = backbone_.encode_prompt(prompt);
  std::vector<backbone::FusedState> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const backbone::ImageGridEmbedding* mem = i == 0 ? memory : &frames[i - 1];
    out.push_back(backbone_.fuse(frames[i], prompt_tokens, mem));
  }
  return out;
}

PrefixVars Model::prefix(Tape& tape, const std::vector<backbone::FusedState>& states,
                         const std::vector<FrameRole>& roles, const Tensor* carry) {
  if (states.empty()) throw InputError("prefix needs at least one frame");
  if (roles.size() != states.size()) throw InputError("one role per frame required");
  std::vector<Var> visual, semantic;
  if (carry) visual.push_back(tape.constant(*carry));
  for (std::size_t i = 0; i < states.size(); ++i) {
    const perceiver::FrameTokens ft = perceiver_.forward(tape, states[i], tap_);
    visual.push_back(projector_.project_visual(tape, ft.visual, roles[i]));
    semantic.push_back(projector_.project_semantic(tape, ft.semantic));
  }
  return PrefixVars{num::concat_rows(visual), num::concat_rows(semantic)};
}

Prefix Model::prefix(const std::vector<backbone::FusedState>& states,
                     const std::vector<FrameRole>& roles, const Tensor* carry) {
  if (states.empty()) throw InputError("prefix needs at least one frame");
  if (roles.size() != states.size()) throw InputError("one role per frame required");
  std::vector<Tensor> visual, semantic;
  if (carry) visual.push_back(*carry);
  Prefix out;
  for (std::size_t i = 0; i < states.size(); ++i) {
    // One tape per frame keeps peak memory at a single frame's activations.
    Tape tape;
    const perceiver::FrameTokens ft = perceiver_.forward(tape, states[i], tap_);
    visual.push_back(projector_.project_visual(tape, ft.visual, roles[i]).value());
    semantic.push_back(projector_.project_semantic(tape, ft.semantic).value());
    if (i + 1 == states.size()) {
      out.last_frame = projector::ProjectedTokens{visual.back(), roles[i],
                                                  states[i].updated_image_embedding.frame_index};
    }
  }
  Tape tape;
  std::vector<Var> vv, sv;
  for (auto& t : visual) vv.push_back(tape.constant(std::move(t)));
  for (auto& t : semantic) sv.push_back(tape.constant(std::move(t)));
  out.visual = num::concat_rows(vv).value();
  out.semantic = num::concat_rows(sv).value();
  return out;
}

Var Model::loss(Tape& tape, const std::vector<backbone::FusedState>& states,
                const std::vector<FrameRole>& roles, const std::string& instruction,
                const std::string& response, const std::optional<std::string>& prev_description) {
  const PrefixVars p = prefix(tape, states, roles);
  const auto layout =
      decoder::build_layout(p.visual.value(), p.semantic.value(), instruction, response,
                            prev_description);
  return decoder_.loss(tape, layout, p.visual, p.semantic);
}

num::ParamList Model::parameters(Component c) {
  switch (c) {
    case Component::backbone: return backbone_.parameters();
    case Component::perceiver: return perceiver_.parameters();
    case Component::projector: return projector_.parameters();
    case Component::decoder: return decoder_.parameters();
  }
  return {};
}

num::ConstParamList Model::parameters(Component c) const {
  return num::as_const(const_cast<Model&>(*this).parameters(c));
}

std::uint64_t Model::checksum(Component c) const { return num::checksum(parameters(c)); }

void Model::set_trainable(const std::vector<Component>& components) {
  for (Component c : components)
    if (c == Component::backbone) throw ConfigError("the backbone is frozen in every stage");
  for (Component c : {Component::perceiver, Component::projector, Component::decoder}) {
    const bool on = std::find(components.begin(), components.end(), c) != components.end();
    for (num::Parameter* p : parameters(c)) p->trainable = on;
  }
}

namespace {

const Component kSaved[] = {Component::perceiver, Component::projector, Component::decoder};

nlohmann::json dims_header(const ModelConfig& c) {
  return {{"kind", "pam"},
          {"grid", c.grid},
          {"dim", c.dim},
          {"mask_tokens", c.mask_tokens},
          {"semantic_tokens", c.semantic_tokens},
          {"embed", c.embed},
          {"decoder_layers", c.decoder_layers}};
}

}  // namespace

void Model::save(const std::filesystem::path& path, const nlohmann::json& extra) const {
  nlohmann::json header = dims_header(config_);
  if (extra.is_object()) header["extra"] = extra;
  num::ConstParamList params;
  for (Component c : kSaved)
    for (const num::Parameter* p : parameters(c)) params.push_back(p);
  num::save_parameters(path, header.dump(), params);
}

nlohmann::json Model::load(const std::filesystem::path& path) {
  auto header = nlohmann::json::parse(num::read_parameter_header(path), nullptr, false);
  nlohmann::json expected = dims_header(config_);
  for (const auto& [k, v] : expected.items()) {
    if (header.is_discarded() || !header.contains(k) || header[k] != v) {
      throw ConfigError("checkpoint " + path.string() + " does not match model dims (" + k + ")");
    }
  }
  num::ParamList params;
  for (Component c : kSaved)
    for (num::Parameter* p : parameters(c)) params.push_back(p);
  num::load_parameters(path, params);
  return header;
}

Description Model::describe(const Prefix& prefix, const std::string& instruction,
                            const std::optional<std::string>& prev_description,
                            std::size_t max_len) {
  const auto layout = decoder::build_layout(prefix.visual, prefix.semantic, instruction,
                                            std::nullopt, prev_description);
  Description d;
  d.text = decoder_.generate(layout, max_len).text;
  d.instruction = layout.instruction;
  d.visual_tokens = prefix.visual.rows();
  d.semantic_tokens = prefix.semantic.rows();
  d.sequence_length = layout.length();
  return d;
}

}  // namespace pam
