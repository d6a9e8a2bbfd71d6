// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pam/model.hpp"

namespace pam::streamer {

/// Frame i of a video sampled at `fps` ends at (i+1)/fps seconds; a frame
/// belongs to the clip whose interval contains its end time.
std::vector<double> frame_times(std::size_t frames, double fps);

struct Clip {
  std::size_t begin = 0;  // frame range [begin, end)
  std::size_t end = 0;
  double t_start = 0.0;   // interval (t_start, t_end]
  double t_end = 0.0;
  bool implicit = false;  // trailing frames after the last decode timestamp
};

struct ClipPlan {
  std::vector<Clip> clips;
  double duration = 0.0;
  std::size_t frame_count() const { return clips.empty() ? 0 : clips.back().end; }
};

/// Clip k holds the frames with time in (t_{k−1}, t_k], t_0 = 0. Frames after
/// the last timestamp form one implicit final clip ending at the last frame
/// time. Throws InputError for unsorted, duplicate, non-positive or
/// out-of-range timestamps, unsorted frame times, and intervals with no frame.
ClipPlan plan_clips(const std::vector<double>& frame_times,
                    const std::vector<double>& decode_timestamps);

struct StreamState {
  std::optional<projector::ProjectedTokens> carry;  // clip_final tokens of the last clip
  std::optional<std::string> prev_description;
};

/// Roles of a clip's own frames. With carry the carry slot is the clip's
/// first frame, so own frames are regular then clip_final; without carry the
/// first own frame is prompted. A lone frame without carry is clip_final.
std::vector<projector::FrameRole> clip_roles(std::size_t own_frames, bool has_carry);

struct StepResult {
  std::string description;
  std::string instruction;
  std::size_t visual_tokens = 0;
  std::vector<projector::FrameRole> roles;  // own frames only
  StreamState state;
};

struct StreamRecord {
  double t_start = 0.0;
  double t_end = 0.0;
  std::string text;
};

struct StreamOptions {
  std::size_t max_len = 32;
};

class Streamer {
 public:
  explicit Streamer(Model& model, StreamOptions options = {});

  /// `states` are the clip's fused frames in order.
  StepResult step(const StreamState& state, const std::vector<backbone::FusedState>& states);

  /// Fold of step() over plan_clips(). The backbone memory runs across clip
  /// boundaries.
  std::vector<StreamRecord> run(const std::vector<backbone::ImageGridEmbedding>& frames,
                                const std::vector<double>& frame_times,
                                const backbone::PromptSpec& prompt,
                                const std::vector<double>& decode_timestamps);

 private:
  Model& model_;
  StreamOptions options_;
};

/// {"t_start":..,"t_end":..,"text":..} per line.
std::string to_jsonl(const std::vector<StreamRecord>& records);

}  // namespace pam::streamer
