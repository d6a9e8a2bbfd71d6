// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "pam/model.hpp"
#include "pam/task.hpp"

namespace pam::curriculum {

enum class Stage { s1, s1_5, s2 };

std::string to_string(Stage s);  // "1", "1.5", "2"
/// Throws ConfigError for anything but "1", "1.5" or "2".
Stage parse_stage(const std::string& s);

/// Trainable components per stage; never the backbone.
std::vector<Component> trainable_components(Stage s);

/// One (modality, task) kind of training sample.
struct TaskKind {
  Modality modality = Modality::image;
  Task task = Task::category;
  friend bool operator==(const TaskKind&, const TaskKind&) = default;
};
std::string to_string(const TaskKind& k);  // e.g. "image/category"

/// Dataset kinds admitted by each stage:
///   1   image category, image caption
///   1.5 image category, image caption, video caption
///   2   image category, image explanation, video caption, video stream
std::vector<TaskKind> dataset_mix(Stage s);

/// Linear warmup from 0 to base_lr over ceil(warmup_ratio·total) steps, then
/// cosine decay to 0 at `total`. total = 0 raises ConfigError.
double lr_schedule(std::size_t step, std::size_t total, double base_lr, double warmup_ratio);

struct StageConfig {
  Stage stage = Stage::s1;
  double base_lr = 1e-4;
  std::size_t batch_size = 1024;
  double warmup_ratio = 0.03;
  std::size_t epochs = 1;
  /// When set, overrides epochs·ceil(N / batch).
  std::optional<std::size_t> max_steps;
  /// When set, training stops after the first step whose batch loss is below.
  std::optional<double> target_loss;
  std::uint64_t seed = 0;

  std::vector<Component> trainable() const { return trainable_components(stage); }
  std::vector<TaskKind> mix() const { return dataset_mix(stage); }
  void validate() const;
};

/// Published per-stage hyperparameters.
StageConfig default_stage(Stage s);
/// Desk-scale overrides: batch 8 and a larger learning rate for tiny models.
StageConfig desk_stage(Stage s);

nlohmann::json to_json(const StageConfig& c);
/// Unknown keys raise ConfigError.
StageConfig stage_from_json(const nlohmann::json& j);

/// AdamW (β₁ 0.9, β₂ 0.999, eps 1e-8, weight decay 0 by default). State is
/// allocated only for parameters that are trainable at construction.
class AdamW {
 public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
  };

  AdamW(const num::ParamList& params, Options options);
  explicit AdamW(const num::ParamList& params) : AdamW(params, Options{}) {}
  void step(double lr);
  std::size_t state_count() const { return slots_.size(); }
  bool has_state(const num::Parameter* p) const;

 private:
  struct Slot {
    num::Parameter* param;
    std::vector<double> m, v;
  };
  Options options_;
  std::vector<Slot> slots_;
  std::size_t t_ = 0;
};

/// One supervised example with cached backbone output. The backbone is
/// frozen, so fusing once at dataset build time is exact.
struct TrainingSample {
  std::string key;
  TaskKind kind;
  std::vector<backbone::FusedState> states;
  std::vector<projector::FrameRole> roles;
  std::string instruction;
  std::string response;
  std::optional<std::string> prev_description;
};

/// Deterministic synthetic samples cycling through `kinds`: images are one
/// frame, videos three. Responses come from small per-task phrase lists.
std::vector<TrainingSample> synthetic_dataset(const Model& model, const std::vector<TaskKind>& kinds,
                                              std::size_t count, std::uint64_t seed);

struct TrainReport {
  Stage stage = Stage::s1;
  std::string label;  // "1", "1.5", "2" or "all-in-one"
  std::vector<double> losses;  // mean batch loss per step
  double final_loss = 0.0;
  std::vector<double> learning_rates;
  std::unordered_map<std::string, std::uint64_t> checksum_before;  // per component
  std::unordered_map<std::string, std::uint64_t> checksum_after;
  std::size_t optimizer_slots = 0;
  bool backbone_unchanged = false;
};

nlohmann::json to_json(const TrainReport& r);

/// Trains the stage's component set on `data` with AdamW. Throws ConfigError
/// when a sample's kind is outside the stage's mix. `mix_override` replaces
/// the admitted kinds (used for the all-in-one ablation).
TrainReport train_stage(Model& model, const std::vector<TrainingSample>& data,
                        const StageConfig& cfg,
                        const std::optional<std::vector<TaskKind>>& mix_override = std::nullopt);

/// Mean loss over `data` without updates.
double evaluate_loss(Model& model, const std::vector<TrainingSample>& data);

/// Stage orders: "1,1.5,2" (default), "1,2", any increasing subset, or
/// "all-in-one" (one stage-2 run over the union of all datasets).
struct CurriculumPlan {
  std::vector<Stage> stages;
  bool all_in_one = false;
};
CurriculumPlan parse_order(const std::string& order);

using StageDatasets = std::unordered_map<std::string, std::vector<TrainingSample>>;  // by to_string(Stage)
using StageConfigs = std::unordered_map<std::string, StageConfig>;

/// Runs the plan, threading weights between stages. When `checkpoint_dir` is
/// given each stage's weights are written to stage_<label>.pamw.
std::vector<TrainReport> run_curriculum(Model& model, const CurriculumPlan& plan,
                                        const StageDatasets& datasets, const StageConfigs& configs,
                                        const std::optional<std::filesystem::path>& checkpoint_dir =
                                            std::nullopt);

}  // namespace pam::curriculum
