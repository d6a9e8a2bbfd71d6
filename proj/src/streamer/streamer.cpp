// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/streamer/streamer.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "pam/errors.hpp"
#include "pam/templates.hpp"

namespace pam::streamer {

using projector::FrameRole;

std::vector<double> frame_times(std::size_t frames, double fps) {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw InputError("fps must be positive");
  std::vector<double> out(frames);
  for (std::size_t i = 0; i < frames; ++i) out[i] = static_cast<double>(i + 1) / fps;
  return out;
}

ClipPlan plan_clips(const std::vector<double>& times, const std::vector<double>& stamps) {
  if (times.empty()) throw InputError("video has no frames");
  if (stamps.empty()) throw InputError("no decode timestamps");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0.0 || (i > 0 && times[i] <= times[i - 1])) {
      throw InputError("frame times must be finite, non-negative and strictly increasing");
    }
  }
  for (std::size_t k = 0; k < stamps.size(); ++k) {
    if (!std::isfinite(stamps[k]) || stamps[k] <= 0.0) {
      throw InputError("decode timestamp " + std::to_string(k) + " must be positive");
    }
    if (k > 0 && stamps[k] <= stamps[k - 1]) {
      throw InputError("decode timestamps must be strictly increasing (index " +
                       std::to_string(k) + ")");
    }
  }
  if (stamps.back() > times.back()) {
    throw InputError("decode timestamp " + std::to_string(stamps.back()) +
                     " is beyond the last frame at " + std::to_string(times.back()));
  }

  ClipPlan plan;
  plan.duration = times.back();
  std::size_t next = 0;
  double prev = 0.0;
  for (double t : stamps) {
    Clip c{next, next, prev, t, false};
    while (c.end < times.size() && times[c.end] <= t) ++c.end;
    if (c.end == c.begin) {
      throw InputError("no frame falls in (" + std::to_string(prev) + ", " + std::to_string(t) +
                       "]");
    }
    plan.clips.push_back(c);
    next = c.end;
    prev = t;
  }
  if (next < times.size()) plan.clips.push_back(Clip{next, times.size(), prev, times.back(), true});
  return plan;
}

std::vector<FrameRole> clip_roles(std::size_t own_frames, bool has_carry) {
  if (own_frames == 0) throw InputError("empty clip");
  std::vector<FrameRole> roles(own_frames, FrameRole::regular);
  if (!has_carry && own_frames > 1) roles.front() = FrameRole::prompted;
  roles.back() = FrameRole::clip_final;
  return roles;
}

Streamer::Streamer(Model& model, StreamOptions options) : model_(model), options_(options) {}

StepResult Streamer::step(const StreamState& state,
                          const std::vector<backbone::FusedState>& states) {
  if (states.empty()) throw InputError("empty clip");
  if (state.carry) {
    const std::size_t dense = projector::tokens_for_role(FrameRole::prompted, model_.config().grid);
    if (state.carry->role != FrameRole::clip_final || state.carry->tokens.rows() != dense) {
      throw InputError("carry tokens must be clip-final at prompted density");
    }
  }
  StepResult r;
  r.roles = clip_roles(states.size(), state.carry.has_value());
  const Prefix prefix =
      model_.prefix(states, r.roles, state.carry ? &state.carry->tokens : nullptr);
  const Description d = model_.describe(prefix, std::string(templates::task_instruction(Task::stream)),
                                        state.prev_description, options_.max_len);
  r.description = d.text;
  r.instruction = d.instruction;
  r.visual_tokens = d.visual_tokens;
  r.state.carry = prefix.last_frame;
  r.state.prev_description = d.text;
  return r;
}

std::vector<StreamRecord> Streamer::run(const std::vector<backbone::ImageGridEmbedding>& frames,
                                        const std::vector<double>& times,
                                        const backbone::PromptSpec& prompt,
                                        const std::vector<double>& stamps) {
  if (frames.size() != times.size()) throw InputError("one time per frame required");
  const ClipPlan plan = plan_clips(times, stamps);
  std::vector<StreamRecord> out;
  StreamState state;
  for (const Clip& c : plan.clips) {
    std::vector<backbone::ImageGridEmbedding> clip(frames.begin() + static_cast<long>(c.begin),
                                                   frames.begin() + static_cast<long>(c.end));
    const backbone::ImageGridEmbedding* memory = c.begin > 0 ? &frames[c.begin - 1] : nullptr;
    const auto states = model_.encode(clip, prompt, memory);
    StepResult r = step(state, states);
    out.push_back(StreamRecord{c.t_start, c.t_end, r.description});
    state = std::move(r.state);
  }
  return out;
}

std::string to_jsonl(const std::vector<StreamRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j{{"t_start", r.t_start}, {"t_end", r.t_end}, {"text", r.text}};
    out += j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

}  // namespace pam::streamer
