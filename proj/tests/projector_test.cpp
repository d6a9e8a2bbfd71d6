// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "pam/errors.hpp"
#include "pam/numcore/grad_check.hpp"
#include "pam/projector/projector.hpp"

using namespace pam;
using namespace pam::projector;

namespace {

num::Tensor iota_grid(std::size_t side, std::size_t dim) {
  num::Tensor t({side * side, dim});
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<double>(i);
  return t;
}

ModelConfig tiny(std::size_t grid, std::size_t dim, std::size_t embed) {
  ModelConfig c;
  c.grid = grid;
  c.dim = dim;
  c.embed = embed;
  return c;
}

}  // namespace

TEST(PixelShuffle, FullScaleShapes) {
  const num::Tensor g = iota_grid(64, 256);
  EXPECT_EQ(pixel_shuffle(g, 64, 2).shape(), (num::Shape{1024, 1024}));
  EXPECT_EQ(pixel_shuffle(g, 64, 4).shape(), (num::Shape{256, 4096}));
}

TEST(PixelShuffle, FactorOneIsIdentity) {
  const num::Tensor g = iota_grid(8, 3);
  EXPECT_EQ(pixel_shuffle(g, 8, 1), g);
}

TEST(PixelShuffle, PatchMajorChannelConcatenatedLayout) {
  // 4×4 grid, one channel, cell value = y·4 + x.
  const num::Tensor g = iota_grid(4, 1);
  const num::Tensor s = pixel_shuffle(g, 4, 2);
  ASSERT_EQ(s.shape(), (num::Shape{4, 4}));
  const double expected[4][4] = {{0, 1, 4, 5}, {2, 3, 6, 7}, {8, 9, 12, 13}, {10, 11, 14, 15}};
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(s.at(t, c), expected[t][c]);
  // Two channels: cell (0,1) occupies channels 2..3 of token 0.
  const num::Tensor g2 = iota_grid(2, 2);
  const num::Tensor s2 = pixel_shuffle(g2, 2, 2);
  EXPECT_EQ(s2.at(0, 2), g2.at(1, 0));
  EXPECT_EQ(s2.at(0, 3), g2.at(1, 1));
}

TEST(PixelShuffle, NonDividingFactorIsShapeError) {
  EXPECT_THROW(pixel_shuffle(iota_grid(8, 2), 8, 3), ShapeError);
  EXPECT_THROW(pixel_shuffle(iota_grid(8, 2), 4, 2), ShapeError);
}

TEST(PixelShuffle, BijectionAndConservationOnRandomGrids) {
  std::mt19937_64 g(17);
  std::normal_distribution<double> val;
  const std::size_t sides[] = {4, 8, 16};
  const std::size_t factors[] = {1, 2, 4};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t side = sides[trial % 3];
    const std::size_t r = factors[(trial / 3) % 3];
    const std::size_t dim = 1 + trial % 5;
    num::Tensor grid({side * side, dim});
    for (double& v : grid.data()) v = val(g);
    const num::Tensor s = pixel_shuffle(grid, side, r);
    EXPECT_EQ(s.rows() * s.cols(), side * side * dim);
    EXPECT_EQ(pixel_unshuffle(s, side, r), grid);
  }
}

TEST(Budget, PinnedValues) {
  EXPECT_EQ(visual_budget(1, false), 1024u);
  EXPECT_EQ(visual_budget(2, false), 1280u);
  EXPECT_EQ(visual_budget(16, false), 4864u);
  EXPECT_EQ(visual_budget(1, true), 1024u);
  EXPECT_EQ(visual_budget(3, true), 1024u + 256u + 1024u);
  EXPECT_THROW(visual_budget(0, false), InputError);
}

TEST(Budget, StrictlyIncreasing) {
  for (std::size_t n = 1; n < 64; ++n) {
    EXPECT_LT(visual_budget(n, false), visual_budget(n + 1, false));
    EXPECT_LT(visual_budget(n, true), visual_budget(n + 1, true));
  }
}

TEST(Budget, RoleTokenCounts) {
  EXPECT_EQ(tokens_for_role(FrameRole::prompted, 64), 1024u);
  EXPECT_EQ(tokens_for_role(FrameRole::regular, 64), 256u);
  EXPECT_EQ(tokens_for_role(FrameRole::clip_final, 64), 1024u);
}

TEST(ProjectVisual, FullScaleRoleShapes) {
  Projector p(ModelConfig{});
  const num::Tensor g = iota_grid(64, 256);
  num::Tensor scaled = g;
  for (double& v : scaled.data()) v = std::sin(v);
  EXPECT_EQ(p.project_visual(scaled, FrameRole::prompted).tokens.shape(), (num::Shape{1024, 64}));
  EXPECT_EQ(p.project_visual(scaled, FrameRole::regular).tokens.shape(), (num::Shape{256, 64}));
  EXPECT_EQ(p.project_visual(scaled, FrameRole::clip_final).tokens.shape(), (num::Shape{1024, 64}));
}

TEST(ProjectSemantic, ShapeDistinctnessAndZeroInput) {
  ModelConfig cfg = tiny(8, 256, 64);
  Projector p(cfg);
  EXPECT_EQ(p.project_semantic(num::Tensor({16, 256})).shape(), (num::Shape{16, 64}));
  EXPECT_THROW(p.project_semantic(num::Tensor({16, 128})), ShapeError);

  std::set<const num::Parameter*> visual;
  std::set<std::string> visual_names;
  for (auto* q : p.visual_parameters()) {
    visual.insert(q);
    visual_names.insert(q->name);
  }
  for (auto* q : p.semantic_parameters()) {
    EXPECT_EQ(visual.count(q), 0u);
    EXPECT_EQ(visual_names.count(q->name), 0u);
  }

  // Zero input reduces to fc2(gelu(b1)) + b2; evaluate that path directly.
  const num::Tensor out = p.project_semantic(num::Tensor({1, 256}));
  const auto sem = p.semantic_parameters();  // fc1.w, fc1.b, fc2.w, fc2.b
  const num::Tensor& b1 = sem[1]->value;
  const num::Tensor& w2 = sem[2]->value;
  const num::Tensor& b2 = sem[3]->value;
  for (std::size_t j = 0; j < 64; ++j) {
    double s = b2[j];
    for (std::size_t h = 0; h < 64; ++h) {
      const double x = b1[h];
      const double gx = 0.5 * x * (1.0 + std::tanh(0.7978845608028654 * (x + 0.044715 * x * x * x)));
      s += gx * w2.at(h, j);
    }
    EXPECT_NEAR(out[j], s, 1e-12);
  }
  EXPECT_EQ(p.project_semantic(num::Tensor({1, 256})), out);
}

TEST(GradCheck, BothProjectorMlpsPass) {
  ModelConfig cfg = tiny(4, 2, 6);
  Projector p(cfg);
  num::Rng rng(4);
  const num::Tensor grid = num::randn({16, 2}, 1.0, rng);
  const num::Tensor sem = num::randn({3, 2}, 1.0, rng);
  const num::Tensor w_dense = num::randn({4, 6}, 1.0, rng);
  const num::Tensor w_sparse = num::randn({1, 6}, 1.0, rng);
  const num::Tensor w_sem = num::randn({3, 6}, 1.0, rng);
  auto visual = [&](num::Tape& t) {
    num::Var g = t.constant(grid);
    return num::add(
        num::sum(num::mul(p.project_visual(t, g, FrameRole::prompted), t.constant(w_dense))),
        num::sum(num::mul(p.project_visual(t, g, FrameRole::regular), t.constant(w_sparse))));
  };
  const auto rv = num::grad_check(visual, p.visual_parameters(), {.eps = 1e-4, .tol = 1e-3});
  EXPECT_TRUE(rv.pass) << rv.max_rel_err << " at " << rv.worst;
  auto semantic = [&](num::Tape& t) {
    return num::sum(num::mul(p.project_semantic(t, t.constant(sem)), t.constant(w_sem)));
  };
  const auto rs = num::grad_check(semantic, p.semantic_parameters(), {.eps = 1e-4, .tol = 1e-3});
  EXPECT_TRUE(rs.pass) << rs.max_rel_err << " at " << rs.worst;
}

TEST(GradCheck, PixelShuffleIsDifferentiable) {
  num::Rng rng(6);
  num::Parameter grid("grid", num::randn({16, 2}, 1.0, rng));
  const num::Tensor w = num::randn({4, 8}, 1.0, rng);
  auto f = [&](num::Tape& t) {
    num::Var s = pixel_shuffle(t.param(grid), 4, 2);
    return num::sum(num::mul(num::mul(s, s), t.constant(w)));
  };
  const auto r = num::grad_check(f, {&grid});
  EXPECT_TRUE(r.pass) << r.max_rel_err;
}
