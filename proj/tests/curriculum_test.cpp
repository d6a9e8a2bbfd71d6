// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "pam/curriculum/curriculum.hpp"
#include "pam/errors.hpp"
#include "test_util.hpp"

using namespace pam;
using namespace pam::curriculum;

namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.grid = 4;
  c.dim = 16;
  c.mask_tokens = 2;
  c.semantic_tokens = 2;
  c.embed = 32;
  return c;
}

StageConfig quick(Stage s, std::size_t steps) {
  StageConfig c = desk_stage(s);
  c.max_steps = steps;
  c.batch_size = 2;
  return c;
}

bool has(const std::vector<Component>& v, Component c) {
  return std::find(v.begin(), v.end(), c) != v.end();
}

}  // namespace

TEST(Stages, TrainableSetsMatchTable) {
  using V = std::vector<Component>;
  EXPECT_EQ(trainable_components(Stage::s1), (V{Component::perceiver, Component::projector}));
  EXPECT_EQ(trainable_components(Stage::s1_5), (V{Component::perceiver, Component::projector}));
  EXPECT_EQ(trainable_components(Stage::s2),
            (V{Component::perceiver, Component::projector, Component::decoder}));
  for (Stage s : {Stage::s1, Stage::s1_5, Stage::s2})
    EXPECT_FALSE(has(trainable_components(s), Component::backbone));
  EXPECT_THROW(parse_stage("3"), ConfigError);
  EXPECT_EQ(parse_stage("1.5"), Stage::s1_5);
}

TEST(Stages, PublishedDefaults) {
  const double lr[] = {1e-4, 4e-5, 1e-5};
  const std::size_t batch[] = {1024, 1024, 256};
  int i = 0;
  for (Stage s : {Stage::s1, Stage::s1_5, Stage::s2}) {
    const StageConfig c = default_stage(s);
    EXPECT_EQ(c.base_lr, lr[i]);
    EXPECT_EQ(c.batch_size, batch[i]);
    EXPECT_EQ(c.warmup_ratio, 0.03);
    EXPECT_EQ(c.epochs, 1u);
    EXPECT_FALSE(c.max_steps);
    ++i;
  }
}

TEST(Stages, DatasetMix) {
  auto names = [](Stage s) {
    std::vector<std::string> out;
    for (const auto& k : dataset_mix(s)) out.push_back(to_string(k));
    return out;
  };
  using V = std::vector<std::string>;
  EXPECT_EQ(names(Stage::s1), (V{"image/category", "image/caption"}));
  EXPECT_EQ(names(Stage::s1_5), (V{"image/category", "image/caption", "video/caption"}));
  EXPECT_EQ(names(Stage::s2),
            (V{"image/category", "image/explanation", "video/caption", "video/stream"}));
}

TEST(Stages, JsonRoundTripAndUnknownKeys) {
  StageConfig c = desk_stage(Stage::s1_5);
  c.target_loss = 0.5;
  c.seed = 9;
  const StageConfig back = stage_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  auto j = to_json(c);
  j["momentum"] = 0.5;
  EXPECT_THROW(stage_from_json(j), ConfigError);
  auto k = to_json(c);
  k["batch_size"] = 0;
  EXPECT_THROW(stage_from_json(k), ConfigError);
  auto m = to_json(c);
  m["stage"] = "4";
  EXPECT_THROW(stage_from_json(m), ConfigError);
}

TEST(LrSchedule, Endpoints) {
  const double base = 1e-4;
  EXPECT_EQ(lr_schedule(0, 100, base, 0.03), 0.0);
  EXPECT_EQ(lr_schedule(3, 100, base, 0.03), base);  // ceil(0.03·100) = 3
  EXPECT_LT(lr_schedule(4, 100, base, 0.03), base);
  EXPECT_NEAR(lr_schedule(100, 100, base, 0.03), 0.0, 1e-20);
  EXPECT_DOUBLE_EQ(lr_schedule(1, 100, base, 0.03), base / 3);
  EXPECT_EQ(lr_schedule(30, 1000, base, 0.03), base);
  EXPECT_THROW(lr_schedule(0, 0, base, 0.03), ConfigError);
  EXPECT_THROW(lr_schedule(11, 10, base, 0.03), ConfigError);
}

TEST(LrSchedule, ShapeProperties) {
  for (std::size_t total : {1u, 2u, 7u, 33u, 100u, 1000u, 2000u}) {
    const auto w = static_cast<std::size_t>(std::ceil(0.03 * static_cast<double>(total) - 1e-9));
    for (std::size_t s = 0; s <= total; ++s) {
      const double lr = lr_schedule(s, total, 1.0, 0.03);
      ASSERT_GE(lr, 0.0);
      ASSERT_LE(lr, 1.0);
      if (s > 0 && s <= w) ASSERT_GT(lr, lr_schedule(s - 1, total, 1.0, 0.03));
      if (s > w) ASSERT_LT(lr, lr_schedule(s - 1, total, 1.0, 0.03));
    }
    EXPECT_EQ(lr_schedule(w, total, 1.0, 0.03), 1.0);
  }
  // Cosine phase after a 3-step warmup of 100.
  EXPECT_NEAR(lr_schedule(51, 100, 1.0, 0.03), 0.5 * (1 + std::cos(M_PI * 48.0 / 97.0)), 1e-15);
}

TEST(AdamW, HandComputedStepAndZeroGradient) {
  num::Parameter w("w", num::Tensor::matrix({{1.0, -2.0}}));
  num::Parameter frozen("f", num::Tensor::matrix({{3.0}}), false);
  AdamW opt({&w, &frozen});
  EXPECT_EQ(opt.state_count(), 1u);
  EXPECT_TRUE(opt.has_state(&w));
  EXPECT_FALSE(opt.has_state(&frozen));

  w.grad = num::Tensor::matrix({{0.5, 0.0}});
  opt.step(0.1);
  // m̂ = g, v̂ = g² after one step, so the move is lr·g/(|g| + eps).
  EXPECT_NEAR(w.value[0], 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_EQ(w.value[1], -2.0);
  EXPECT_EQ(frozen.value[0], 3.0);

  num::Parameter z("z", num::Tensor::matrix({{4.0, 5.0}}));
  AdamW zopt({&z});
  zopt.step(1.0);
  EXPECT_EQ(z.value, num::Tensor::matrix({{4.0, 5.0}}));
}

TEST(Training, GradientReachesPerceiverAndProjectorOnly) {
  Model model(tiny());
  model.set_trainable({Component::perceiver, Component::projector, Component::decoder});
  const auto data = synthetic_dataset(model, dataset_mix(Stage::s2), 4, 1);
  for (const auto& s : data) {
    for (auto* p : model.parameters(Component::perceiver)) p->zero_grad();
    num::Tape tape;
    tape.backward(model.loss(tape, s.states, s.roles, s.instruction, s.response,
                             s.prev_description));
    auto nonzero = [](const num::ParamList& ps) {
      double total = 0;
      for (auto* p : ps)
        for (double g : p->grad.data()) total += std::abs(g);
      return total;
    };
    EXPECT_GT(nonzero(model.parameters(Component::perceiver)), 0.0) << s.key;
    EXPECT_GT(nonzero(model.parameters(Component::projector)), 0.0) << s.key;
    EXPECT_GT(nonzero(model.parameters(Component::decoder)), 0.0) << s.key;
    EXPECT_EQ(nonzero(model.parameters(Component::backbone)), 0.0) << s.key;
  }
  EXPECT_THROW(model.set_trainable({Component::backbone}), ConfigError);
}

TEST(Training, SyntheticDatasetIsDeterministic) {
  Model model(tiny());
  const auto a = synthetic_dataset(model, dataset_mix(Stage::s1_5), 6, 3);
  const auto b = synthetic_dataset(model, dataset_mix(Stage::s1_5), 6, 3);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].response, b[i].response);
    EXPECT_EQ(a[i].states.size(), a[i].kind.modality == Modality::image ? 1u : 3u);
    EXPECT_EQ(a[i].states[0].checksum(), b[i].states[0].checksum());
  }
  EXPECT_EQ(to_string(a[2].kind), "video/caption");
}

TEST(Training, ZeroLearningRateChangesNothing) {
  Model model(tiny());
  const auto data = synthetic_dataset(model, dataset_mix(Stage::s2), 4, 2);
  StageConfig cfg = quick(Stage::s2, 2);
  cfg.base_lr = 0.0;
  const auto r = train_stage(model, data, cfg);
  EXPECT_EQ(r.checksum_before, r.checksum_after);
}

TEST(Training, StageMixMismatchIsConfigError) {
  Model model(tiny());
  const auto video = synthetic_dataset(model, {{Modality::video, Task::caption}}, 1, 0);
  EXPECT_THROW(train_stage(model, video, quick(Stage::s1, 1)), ConfigError);
  const auto caption = synthetic_dataset(model, {{Modality::image, Task::caption}}, 1, 0);
  EXPECT_THROW(train_stage(model, caption, quick(Stage::s2, 1)), ConfigError);
  EXPECT_THROW(train_stage(model, {}, quick(Stage::s1, 1)), ConfigError);
}

TEST(Training, StageOneFreezesDecoderAndBackbone) {
  Model model(tiny());
  const auto data = synthetic_dataset(model, dataset_mix(Stage::s1), 4, 5);
  const auto r = train_stage(model, data, quick(Stage::s1, 3));
  EXPECT_TRUE(r.backbone_unchanged);
  EXPECT_EQ(r.checksum_before.at("decoder"), r.checksum_after.at("decoder"));
  EXPECT_NE(r.checksum_before.at("perceiver"), r.checksum_after.at("perceiver"));
  EXPECT_NE(r.checksum_before.at("projector"), r.checksum_after.at("projector"));
  std::size_t expected_slots = 0;
  for (Component c : {Component::perceiver, Component::projector})
    expected_slots += model.parameters(c).size();
  EXPECT_EQ(r.optimizer_slots, expected_slots);
  EXPECT_EQ(r.losses.size(), 3u);

  const auto r2 = train_stage(model, synthetic_dataset(model, dataset_mix(Stage::s2), 4, 5),
                              quick(Stage::s2, 2));
  EXPECT_NE(r2.checksum_before.at("decoder"), r2.checksum_after.at("decoder"));
  EXPECT_TRUE(r2.backbone_unchanged);
}

TEST(Training, LossDecreasesOverTwoHundredSteps) {
  Model model(tiny());
  const auto data = synthetic_dataset(model, dataset_mix(Stage::s1), 8, 11);
  const double before = evaluate_loss(model, data);
  StageConfig cfg = desk_stage(Stage::s1);
  cfg.max_steps = 200;
  cfg.batch_size = 4;
  const auto r = train_stage(model, data, cfg);
  const double after = evaluate_loss(model, data);
  EXPECT_LT(after, before);
  const double head = std::accumulate(r.losses.begin(), r.losses.begin() + 10, 0.0);
  const double tail = std::accumulate(r.losses.end() - 10, r.losses.end(), 0.0);
  EXPECT_LT(tail, head);
}

TEST(Training, OverfitsOnePairAndEmitsIt) {
  Model model(tiny());
  const auto data = synthetic_dataset(model, {{Modality::image, Task::caption}}, 1, 4);
  StageConfig cfg = desk_stage(Stage::s2);
  cfg.batch_size = 1;
  cfg.max_steps = 400;
  cfg.target_loss = 0.02;
  const auto r = train_stage(model, data, cfg, dataset_mix(Stage::s1));
  EXPECT_LT(r.final_loss, 0.02);
  const auto& s = data[0];
  const auto d = model.describe(model.prefix(s.states, s.roles), s.instruction, std::nullopt, 64);
  EXPECT_EQ(d.text, s.response);
}

TEST(Curriculum, ParseOrder) {
  EXPECT_EQ(parse_order("1,1.5,2").stages, (std::vector<Stage>{Stage::s1, Stage::s1_5, Stage::s2}));
  EXPECT_EQ(parse_order("1,2").stages, (std::vector<Stage>{Stage::s1, Stage::s2}));
  EXPECT_TRUE(parse_order("all-in-one").all_in_one);
  EXPECT_THROW(parse_order("2,1"), ConfigError);
  EXPECT_THROW(parse_order("1,3"), ConfigError);
  EXPECT_THROW(parse_order(""), ConfigError);
}

TEST(Curriculum, ThreadsWeightsAndKeepsBackboneFrozen) {
  Model model(tiny());
  const std::uint64_t backbone = model.checksum(Component::backbone);
  StageDatasets data;
  StageConfigs cfgs;
  for (Stage s : {Stage::s1, Stage::s1_5, Stage::s2}) {
    data[to_string(s)] = synthetic_dataset(model, dataset_mix(s), 4, 20);
    cfgs[to_string(s)] = quick(s, 2);
  }
  test::TempDir dir("pam_curriculum_test");
  const auto reports = run_curriculum(model, parse_order("1,1.5,2"), data, cfgs, dir.path());
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports[0].label, "1");
  EXPECT_EQ(reports[1].label, "1.5");
  EXPECT_EQ(reports[2].label, "2");
  for (std::size_t i = 0; i + 1 < reports.size(); ++i)
    EXPECT_EQ(reports[i + 1].checksum_before, reports[i].checksum_after);
  for (const auto& r : reports) EXPECT_TRUE(r.backbone_unchanged);
  EXPECT_EQ(model.checksum(Component::backbone), backbone);

  // The stage-1.5 checkpoint restores the stage-2 starting point.
  Model restored(tiny());
  const auto header = restored.load(dir / "stage_1.5.pamw");
  EXPECT_EQ(header.at("extra").at("stage"), "1.5");
  for (Component c : {Component::perceiver, Component::projector, Component::decoder})
    EXPECT_EQ(restored.checksum(c), reports[2].checksum_before.at(to_string(c)));

  Model skip(tiny());
  const auto r12 = run_curriculum(skip, parse_order("1,2"), data, cfgs);
  ASSERT_EQ(r12.size(), 2u);
  EXPECT_EQ(r12[1].label, "2");
  EXPECT_EQ(r12[1].checksum_before, r12[0].checksum_after);

  Model aio(tiny());
  const auto all = run_curriculum(aio, parse_order("all-in-one"), data, cfgs);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].label, "all-in-one");
  EXPECT_TRUE(all[0].backbone_unchanged);

  StageDatasets missing = data;
  missing.erase("1.5");
  Model m2(tiny());
  EXPECT_THROW(run_curriculum(m2, parse_order("1,1.5,2"), missing, cfgs), ConfigError);
}

TEST(Curriculum, ReportJson) {
  Model model(tiny());
  const auto r = train_stage(model, synthetic_dataset(model, dataset_mix(Stage::s1), 2, 0),
                             quick(Stage::s1, 1));
  const auto j = to_json(r);
  EXPECT_EQ(j.at("stage"), "1");
  EXPECT_EQ(j.at("backbone_unchanged"), true);
  EXPECT_EQ(j.at("checksum_before").at("backbone"), j.at("checksum_after").at("backbone"));
  EXPECT_EQ(j.at("losses").size(), 1u);
}
