// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/curriculum/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "pam/errors.hpp"
#include "pam/hash.hpp"
#include "pam/templates.hpp"

namespace pam::curriculum {

using projector::FrameRole;

std::string to_string(Stage s) {
  switch (s) {
    case Stage::s1: return "1";
    case Stage::s1_5: return "1.5";
    case Stage::s2: return "2";
  }
  return "1";
}

Stage parse_stage(const std::string& s) {
  if (s == "1") return Stage::s1;
  if (s == "1.5") return Stage::s1_5;
  if (s == "2") return Stage::s2;
  throw ConfigError("unknown stage '" + s + "' (expected 1, 1.5 or 2)");
}

std::vector<Component> trainable_components(Stage s) {
  if (s == Stage::s2) return {Component::perceiver, Component::projector, Component::decoder};
  return {Component::perceiver, Component::projector};
}

std::string to_string(const TaskKind& k) { return to_string(k.modality) + "/" + to_string(k.task); }

std::vector<TaskKind> dataset_mix(Stage s) {
  const TaskKind img_cat{Modality::image, Task::category};
  const TaskKind img_cap{Modality::image, Task::caption};
  const TaskKind img_exp{Modality::image, Task::explanation};
  const TaskKind vid_cap{Modality::video, Task::caption};
  const TaskKind vid_stream{Modality::video, Task::stream};
  switch (s) {
    case Stage::s1: return {img_cat, img_cap};
    case Stage::s1_5: return {img_cat, img_cap, vid_cap};
    case Stage::s2: return {img_cat, img_exp, vid_cap, vid_stream};
  }
  return {};
}

double lr_schedule(std::size_t step, std::size_t total, double base_lr, double warmup_ratio) {
  if (total == 0) throw ConfigError("lr_schedule: total_steps must be positive");
  if (step > total) throw ConfigError("lr_schedule: step beyond total_steps");
  // The small slack keeps ratios like 0.03·100 from rounding up to 4.
  const auto warmup = static_cast<std::size_t>(
      std::ceil(warmup_ratio * static_cast<double>(total) - 1e-9));
  if (warmup > 0 && step <= warmup) {
    return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
  }
  if (warmup >= total) return base_lr;
  const double progress =
      static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void StageConfig::validate() const {
  if (!(base_lr >= 0.0) || !std::isfinite(base_lr)) throw ConfigError("base_lr must be >= 0");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(warmup_ratio >= 0.0 && warmup_ratio <= 1.0)) {
    throw ConfigError("warmup_ratio must lie in [0, 1]");
  }
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (max_steps && *max_steps == 0) throw ConfigError("max_steps must be >= 1");
  if (target_loss && !(*target_loss > 0.0)) throw ConfigError("target_loss must be positive");
}

StageConfig default_stage(Stage s) {
  StageConfig c;
  c.stage = s;
  c.warmup_ratio = 0.03;
  c.epochs = 1;
  switch (s) {
    case Stage::s1: c.base_lr = 1e-4; c.batch_size = 1024; break;
    case Stage::s1_5: c.base_lr = 4e-5; c.batch_size = 1024; break;
    case Stage::s2: c.base_lr = 1e-5; c.batch_size = 256; break;
  }
  return c;
}

StageConfig desk_stage(Stage s) {
  StageConfig c = default_stage(s);
  c.batch_size = 8;
  switch (s) {
    case Stage::s1: c.base_lr = 3e-3; c.max_steps = 40; break;
    case Stage::s1_5: c.base_lr = 2e-3; c.max_steps = 40; break;
    case Stage::s2: c.base_lr = 2e-3; c.max_steps = 80; break;
  }
  return c;
}

nlohmann::json to_json(const StageConfig& c) {
  nlohmann::ordered_json j{{"stage", to_string(c.stage)},
                           {"base_lr", c.base_lr},
                           {"batch_size", c.batch_size},
                           {"warmup_ratio", c.warmup_ratio},
                           {"epochs", c.epochs},
                           {"seed", c.seed}};
  j["max_steps"] = c.max_steps ? nlohmann::ordered_json(*c.max_steps) : nlohmann::ordered_json();
  j["target_loss"] =
      c.target_loss ? nlohmann::ordered_json(*c.target_loss) : nlohmann::ordered_json();
  return j;
}

StageConfig stage_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("stage config must be an object");
  static const char* kKeys[] = {"stage",  "base_lr", "batch_size", "warmup_ratio",
                                "epochs", "seed",    "max_steps",  "target_loss"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), k) == std::end(kKeys)) {
      throw ConfigError("unknown stage config key '" + k + "'");
    }
  }
  try {
    if (!j.contains("stage")) throw ConfigError("stage config needs 'stage'");
    StageConfig c = default_stage(parse_stage(j.at("stage").get<std::string>()));
    if (j.contains("base_lr")) c.base_lr = j.at("base_lr").get<double>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("warmup_ratio")) c.warmup_ratio = j.at("warmup_ratio").get<double>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("max_steps") && !j.at("max_steps").is_null()) {
      c.max_steps = j.at("max_steps").get<std::size_t>();
    }
    if (j.contains("target_loss") && !j.at("target_loss").is_null()) {
      c.target_loss = j.at("target_loss").get<double>();
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("stage config: ") + e.what());
  }
}

AdamW::AdamW(const num::ParamList& params, Options options) : options_(options) {
  for (num::Parameter* p : params) {
    if (!p->trainable) continue;
    slots_.push_back(Slot{p, std::vector<double>(p->value.numel(), 0.0),
                          std::vector<double>(p->value.numel(), 0.0)});
  }
}

bool AdamW::has_state(const num::Parameter* p) const {
  return std::any_of(slots_.begin(), slots_.end(), [p](const Slot& s) { return s.param == p; });
}

void AdamW::step(double lr) {
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (Slot& s : slots_) {
    auto w = s.param->value.data();
    const auto g = s.param->grad.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      s.m[i] = b1 * s.m[i] + (1.0 - b1) * g[i];
      s.v[i] = b2 * s.v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = s.m[i] / c1, vhat = s.v[i] / c2;
      w[i] -= lr * (mhat / (std::sqrt(vhat) + options_.eps) + options_.weight_decay * w[i]);
    }
  }
}

namespace {

const std::vector<std::string> kCategories = {
    "dog", "red car", "street lamp", "coffee mug", "bicycle", "oak tree", "window", "cat"};
const std::vector<std::string> kCaptions = {
    "a brown dog lying on a rug",       "a red car parked by the curb",
    "a tall lamp beside the road",      "a white mug full of coffee",
    "a blue bicycle against a wall",    "a large tree with green leaves",
    "a window with open shutters",      "a grey cat asleep on a sofa"};
const std::vector<std::string> kExplanations = {
    "a dog is a pet that guards the house", "a car carries people along the road",
    "the lamp lights the street at night",  "the mug holds a hot drink",
    "a bicycle is pedaled for transport",    "the tree gives shade to the yard",
    "the window lets light into the room",  "a cat is a pet that hunts mice"};
const std::vector<std::string> kVideoCaptions = {
    "the dog walks to the door and sits", "the car turns left and drives off",
    "a hand lifts the mug and drinks",     "the cyclist rides past the bench",
    "the branches sway in the wind",       "the cat jumps onto the table"};
const std::vector<std::string> kStream = {
    "the person enters from the left",   "the person stops and looks around",
    "the person picks up a small box",   "the person carries the box outside",
    "the ball rolls toward the wall",    "the ball bounces back slowly"};

const std::vector<std::string>& phrases(const TaskKind& k) {
  if (k.task == Task::category) return kCategories;
  if (k.task == Task::explanation) return kExplanations;
  if (k.task == Task::stream) return kStream;
  return k.modality == Modality::image ? kCaptions : kVideoCaptions;
}

}  // namespace

std::vector<TrainingSample> synthetic_dataset(const Model& model, const std::vector<TaskKind>& kinds,
                                              std::size_t count, std::uint64_t seed) {
  if (kinds.empty()) throw ConfigError("synthetic_dataset: no task kinds");
  std::vector<TrainingSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const TaskKind kind = kinds[i % kinds.size()];
    const std::uint64_t s = hash_words({seed, i, fnv1a("sample")});
    TrainingSample t;
    t.key = "syn-" + std::to_string(seed) + "-" + std::to_string(i);
    t.kind = kind;
    const std::size_t frames = kind.modality == Modality::image ? 1 : 3;
    const auto prompt = backbone::PromptSpec::point(0.1 + 0.8 * unit_hash(s, 1),
                                                    0.1 + 0.8 * unit_hash(s, 2));
    t.states = model.encode(model.synthetic_video(s, frames), prompt);
    if (kind.task == Task::stream) {
      t.roles = {FrameRole::prompted, FrameRole::regular, FrameRole::clip_final};
    } else {
      t.roles = video_roles(frames, 0);
    }
    t.instruction = std::string(templates::task_instruction(kind.task));
    const auto& list = phrases(kind);
    const std::size_t pick = hash_words({s, 3}) % list.size();
    t.response = list[pick];
    if (kind.task == Task::stream) t.prev_description = list[(pick + list.size() - 1) % list.size()];
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

std::unordered_map<std::string, std::uint64_t> all_checksums(const Model& model) {
  std::unordered_map<std::string, std::uint64_t> out;
  for (Component c : {Component::backbone, Component::perceiver, Component::projector,
                      Component::decoder}) {
    out[to_string(c)] = model.checksum(c);
  }
  return out;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

nlohmann::json to_json(const TrainReport& r) {
  nlohmann::ordered_json j;
  j["stage"] = r.label;
  j["steps"] = r.losses.size();
  j["final_loss"] = r.final_loss;
  j["losses"] = r.losses;
  j["learning_rates"] = r.learning_rates;
  nlohmann::ordered_json before, after;
  for (const char* c : {"backbone", "perceiver", "projector", "decoder"}) {
    before[c] = hex(r.checksum_before.at(c));
    after[c] = hex(r.checksum_after.at(c));
  }
  j["checksum_before"] = before;
  j["checksum_after"] = after;
  j["optimizer_slots"] = r.optimizer_slots;
  j["backbone_unchanged"] = r.backbone_unchanged;
  return j;
}

TrainReport train_stage(Model& model, const std::vector<TrainingSample>& data,
                        const StageConfig& cfg,
                        const std::optional<std::vector<TaskKind>>& mix_override) {
  cfg.validate();
  if (data.empty()) throw ConfigError("stage " + to_string(cfg.stage) + ": empty dataset");
  const std::vector<TaskKind> mix = mix_override ? *mix_override : cfg.mix();
  for (const auto& s : data) {
    if (std::find(mix.begin(), mix.end(), s.kind) == mix.end()) {
      throw ConfigError("sample " + s.key + " (" + to_string(s.kind) +
                        ") is not part of the stage " + to_string(cfg.stage) + " mix");
    }
  }

  TrainReport report;
  report.stage = cfg.stage;
  report.label = mix_override ? "all-in-one" : to_string(cfg.stage);
  report.checksum_before = all_checksums(model);

  model.set_trainable(cfg.trainable());
  num::ParamList trainable;
  for (Component c : cfg.trainable())
    for (num::Parameter* p : model.parameters(c))
      if (p->trainable) trainable.push_back(p);
  AdamW opt(trainable);
  report.optimizer_slots = opt.state_count();

  const std::size_t n = data.size(), batch = cfg.batch_size;
  const std::size_t total = cfg.max_steps ? *cfg.max_steps : cfg.epochs * ((n + batch - 1) / batch);
  std::vector<std::size_t> order(n);
  std::mt19937_64 rng(hash_words({cfg.seed, fnv1a("order")}));
  std::size_t cursor = n;

  for (std::size_t step = 0; step < total; ++step) {
    for (num::Parameter* p : trainable) p->zero_grad();
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == n) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const TrainingSample& s = data[order[cursor++]];
      num::Tape tape;
      num::Var loss = model.loss(tape, s.states, s.roles, s.instruction, s.response,
                                 s.prev_description);
      batch_loss += loss.value().item();
      tape.backward(num::scale(loss, 1.0 / static_cast<double>(batch)));
    }
    batch_loss /= static_cast<double>(batch);
    const double lr = lr_schedule(step + 1, total, cfg.base_lr, cfg.warmup_ratio);
    opt.step(lr);
    report.losses.push_back(batch_loss);
    report.learning_rates.push_back(lr);
    if (cfg.target_loss && batch_loss < *cfg.target_loss) break;
  }

  report.final_loss = report.losses.back();
  report.checksum_after = all_checksums(model);
  report.backbone_unchanged = report.checksum_before.at("backbone") ==
                              report.checksum_after.at("backbone");
  return report;
}

double evaluate_loss(Model& model, const std::vector<TrainingSample>& data) {
  if (data.empty()) throw ConfigError("evaluate_loss: empty dataset");
  double total = 0.0;
  for (const auto& s : data) {
    num::Tape tape;
    total += model.loss(tape, s.states, s.roles, s.instruction, s.response, s.prev_description)
                 .value()
                 .item();
  }
  return total / static_cast<double>(data.size());
}

CurriculumPlan parse_order(const std::string& order) {
  CurriculumPlan plan;
  if (order == "all-in-one") {
    plan.all_in_one = true;
    return plan;
  }
  std::stringstream ss(order);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const Stage s = parse_stage(item);
    if (!plan.stages.empty() && static_cast<int>(s) <= static_cast<int>(plan.stages.back())) {
      throw ConfigError("stage order must be increasing: '" + order + "'");
    }
    plan.stages.push_back(s);
  }
  if (plan.stages.empty()) throw ConfigError("empty stage order");
  return plan;
}

std::vector<TrainReport> run_curriculum(Model& model, const CurriculumPlan& plan,
                                        const StageDatasets& datasets, const StageConfigs& configs,
                                        const std::optional<std::filesystem::path>& checkpoint_dir) {
  auto config_for = [&](const std::string& label, Stage fallback) {
    const auto it = configs.find(label);
    return it != configs.end() ? it->second : desk_stage(fallback);
  };
  auto save = [&](const TrainReport& r) {
    if (!checkpoint_dir) return;
    std::filesystem::create_directories(*checkpoint_dir);
    model.save(*checkpoint_dir / ("stage_" + r.label + ".pamw"), {{"stage", r.label}});
  };

  std::vector<TrainReport> reports;
  if (plan.all_in_one) {
    std::vector<TrainingSample> merged;
    std::vector<TaskKind> mix;
    for (Stage s : {Stage::s1, Stage::s1_5, Stage::s2}) {
      for (const TaskKind& k : dataset_mix(s))
        if (std::find(mix.begin(), mix.end(), k) == mix.end()) mix.push_back(k);
      const auto it = datasets.find(to_string(s));
      if (it != datasets.end()) merged.insert(merged.end(), it->second.begin(), it->second.end());
    }
    StageConfig cfg = configs.count("all-in-one") ? configs.at("all-in-one")
                                                  : config_for("2", Stage::s2);
    cfg.stage = Stage::s2;
    reports.push_back(train_stage(model, merged, cfg, mix));
    save(reports.back());
    return reports;
  }
  for (Stage s : plan.stages) {
    const std::string label = to_string(s);
    const auto it = datasets.find(label);
    if (it == datasets.end()) throw ConfigError("no dataset for stage " + label);
    StageConfig cfg = config_for(label, s);
    if (cfg.stage != s) throw ConfigError("config for stage " + label + " names another stage");
    reports.push_back(train_stage(model, it->second, cfg));
    save(reports.back());
  }
  return reports;
}

}  // namespace pam::curriculum
