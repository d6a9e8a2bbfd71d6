// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/projector/projector.hpp"

#include "pam/errors.hpp"
#include "pam/hash.hpp"

namespace pam::projector {

using num::Tape;
using num::Tensor;
using num::Var;

std::string to_string(FrameRole role) {
  switch (role) {
    case FrameRole::prompted: return "prompted";
    case FrameRole::regular: return "regular";
    case FrameRole::clip_final: return "clip_final";
  }
  return "prompted";
}

std::size_t shuffle_factor(FrameRole role) { return role == FrameRole::regular ? 4 : 2; }

std::size_t tokens_for_role(FrameRole role, std::size_t grid) {
  const std::size_t r = shuffle_factor(role);
  if (grid % r != 0) throw ShapeError("grid " + std::to_string(grid) + " not divisible by " + std::to_string(r));
  return (grid / r) * (grid / r);
}

std::size_t visual_budget(std::size_t frames, bool streaming, std::size_t grid) {
  if (frames == 0) throw InputError("visual budget needs at least one frame");
  const std::size_t dense = tokens_for_role(FrameRole::prompted, grid);
  const std::size_t sparse = tokens_for_role(FrameRole::regular, grid);
  if (!streaming) return dense + (frames - 1) * sparse;
  if (frames == 1) return tokens_for_role(FrameRole::clip_final, grid);
  return dense + (frames - 2) * sparse + tokens_for_role(FrameRole::clip_final, grid);
}

namespace {

std::vector<std::size_t> shuffle_index(std::size_t side, std::size_t dim, std::size_t r) {
  if (r == 0 || side % r != 0) {
    throw ShapeError("pixel_shuffle: factor " + std::to_string(r) + " does not divide grid " +
                     std::to_string(side));
  }
  const std::size_t out_side = side / r, width = dim * r * r;
  std::vector<std::size_t> index(side * side * dim);
  for (std::size_t py = 0; py < out_side; ++py)
    for (std::size_t px = 0; px < out_side; ++px)
      for (std::size_t dy = 0; dy < r; ++dy)
        for (std::size_t dx = 0; dx < r; ++dx)
          for (std::size_t c = 0; c < dim; ++c) {
            const std::size_t token = py * out_side + px;
            const std::size_t channel = (dy * r + dx) * dim + c;
            const std::size_t cell = (py * r + dy) * side + (px * r + dx);
            index[token * width + channel] = cell * dim + c;
          }
  return index;
}

void check_grid(const Tensor& grid, std::size_t side) {
  if (grid.rank() != 2 || grid.rows() != side * side) {
    throw ShapeError("pixel_shuffle: expected [" + std::to_string(side * side) + "xD] grid, got " +
                     num::to_string(grid.shape()));
  }
}

}  // namespace

Tensor pixel_shuffle(const Tensor& grid, std::size_t side, std::size_t r) {
  check_grid(grid, side);
  const std::size_t dim = grid.cols();
  const auto index = shuffle_index(side, dim, r);
  std::vector<double> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) out[i] = grid[index[i]];
  return Tensor({(side / r) * (side / r), dim * r * r}, std::move(out));
}

Var pixel_shuffle(Var grid, std::size_t side, std::size_t r) {
  check_grid(grid.value(), side);
  const std::size_t dim = grid.value().cols();
  return num::gather(grid, shuffle_index(side, dim, r), {(side / r) * (side / r), dim * r * r});
}

Tensor pixel_unshuffle(const Tensor& tokens, std::size_t side, std::size_t r) {
  if (r == 0 || side % r != 0 || tokens.rank() != 2 || tokens.rows() != (side / r) * (side / r) ||
      tokens.cols() % (r * r) != 0) {
    throw ShapeError("pixel_unshuffle: tokens " + num::to_string(tokens.shape()) +
                     " incompatible with grid " + std::to_string(side) + ", factor " +
                     std::to_string(r));
  }
  const std::size_t dim = tokens.cols() / (r * r);
  const auto index = shuffle_index(side, dim, r);
  Tensor out({side * side, dim});
  for (std::size_t i = 0; i < index.size(); ++i) out[index[i]] = tokens[i];
  return out;
}

Projector::Projector(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config_.dim, e = config_.embed;
  num::Rng rng(hash_words({config_.seed, fnv1a("projector")}));
  visual_in_r2_ = num::Linear("projector.visual.in_r2", d * 4, e, rng, true);
  visual_in_r4_ = num::Linear("projector.visual.in_r4", d * 16, e, rng, true);
  visual_out_ = num::Linear("projector.visual.out", e, e, rng, true);
  semantic_ = num::Mlp("projector.semantic", d, e, e, rng, true);
}

Var Projector::project_visual(Tape& tape, Var grid, FrameRole role) {
  const std::size_t r = shuffle_factor(role);
  const std::size_t side = config_.grid;
  if (grid.value().cols() != config_.dim) {
    throw ShapeError("project_visual: grid dim " + std::to_string(grid.value().cols()) +
                     " != " + std::to_string(config_.dim));
  }
  Var shuffled = pixel_shuffle(grid, side, r);
  num::Linear& in = r == 2 ? visual_in_r2_ : visual_in_r4_;
  return visual_out_(tape, num::gelu(in(tape, shuffled)));
}

Var Projector::project_semantic(Tape& tape, Var tokens) {
  if (tokens.value().rank() != 2 || tokens.value().cols() != config_.dim) {
    throw ShapeError("project_semantic: expected width " + std::to_string(config_.dim) + ", got " +
                     num::to_string(tokens.shape()));
  }
  return semantic_(tape, tokens);
}

ProjectedTokens Projector::project_visual(const Tensor& grid, FrameRole role,
                                          std::size_t frame_index) {
  Tape tape;
  return ProjectedTokens{project_visual(tape, tape.constant(grid), role).value(), role,
                         frame_index};
}

Tensor Projector::project_semantic(const Tensor& tokens) {
  Tape tape;
  return project_semantic(tape, tape.constant(tokens)).value();
}

num::ParamList Projector::visual_parameters() {
  num::ParamList out;
  visual_in_r2_.collect(out);
  visual_in_r4_.collect(out);
  visual_out_.collect(out);
  return out;
}

num::ParamList Projector::semantic_parameters() {
  num::ParamList out;
  semantic_.collect(out);
  return out;
}

num::ParamList Projector::parameters() {
  num::ParamList out = visual_parameters();
  for (auto* p : semantic_parameters()) out.push_back(p);
  return out;
}

num::ConstParamList Projector::parameters() const {
  return num::as_const(const_cast<Projector&>(*this).parameters());
}

}  // namespace pam::projector
