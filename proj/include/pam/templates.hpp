// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Every fixed prompt string in the project. Placeholders are written {name}
// and substituted by fill(). tests/golden/templates pins the rendered forms.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pam/task.hpp"

namespace pam::templates {

// Decoder instructions.
inline constexpr std::string_view kInstruction = "Instruction: {instruction}";
inline constexpr std::string_view kPrevious = "Previous: {text}\n";

inline constexpr std::string_view kTaskCategory =
    "Name the category of the marked region with a short label.";
inline constexpr std::string_view kTaskExplanation =
    "Explain what the marked region is and what it does in this scene.";
inline constexpr std::string_view kTaskCaption = "Describe the marked region in detail.";
inline constexpr std::string_view kTaskStream =
    "Describe what the marked region does during this clip.";

// Annotation elaboration (data pipeline).
inline constexpr std::string_view kElaborate =
    "Task: {task}\n"
    "Language: {language}\n"
    "Region: {region}\n"
    "Original annotation: {original}\n"
    "{storyboard}"
    "{previous}"
    "Write the {granularity} for the marked region.";
inline constexpr std::string_view kStoryboardLine =
    "Storyboard: {media} keyframes [{indices}], region outlined in {color}.\n";
inline constexpr std::string_view kPreviousClip = "Preceding clip description: {text}\n";
inline constexpr std::string_view kEventSpan = "Event span: {t0}s to {t1}s.\n";
inline constexpr std::string_view kSegment =
    "Split the video into consecutive events.\n"
    "Duration: {duration}s\n"
    "Original annotation: {original}\n"
    "Reply with a JSON array of [t0, t1] pairs in seconds.";
inline constexpr std::string_view kTranslate = "Translate into Simplified Chinese:\n{text}";

// Streaming judge.
inline constexpr std::string_view kJudge =
    "Compare two sequences of event descriptions for the same region.\n"
    "Judge temporal continuity and entity consistency of the prediction.\n"
    "Reference events:\n"
    "{reference}"
    "Predicted events:\n"
    "{prediction}"
    "Give a G-STDC score from 0 to 5, where 5 is best. Start your reply with the score.";
inline constexpr std::string_view kJudgeEvent = "[{t0}-{t1}] {text}\n";

std::string_view task_instruction(Task task);

/// Replaces each {key} with its value. Throws ConfigError if a placeholder
/// in `tmpl` has no value.
std::string fill(std::string_view tmpl,
                 const std::vector<std::pair<std::string_view, std::string>>& values);

}  // namespace pam::templates
