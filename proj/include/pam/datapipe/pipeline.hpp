// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pam/clients.hpp"
#include "pam/datapipe/record.hpp"
#include "pam/datapipe/storyboard.hpp"

namespace pam::datapipe {

enum class Mode { image, video, stream };
std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

/// Event boundaries for a video of the given duration.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::vector<std::pair<double, double>> segment(const AnnotationRecord& record) = 0;
};

/// Fixed windows (0,w), (w,2w), ... clamped to the duration.
class MockSegmenter : public Segmenter {
 public:
  explicit MockSegmenter(double window = 2.0);
  std::vector<std::pair<double, double>> segment(const AnnotationRecord& record) override;

 private:
  double window_;
};

/// Asks a text client for a JSON array of [t0, t1] pairs.
class TextSegmenter : public Segmenter {
 public:
  explicit TextSegmenter(clients::TextClient& client) : client_(client) {}
  std::vector<std::pair<double, double>> segment(const AnnotationRecord& record) override;

 private:
  clients::TextClient& client_;
};

/// Throws DataError unless spans are sorted, disjoint, non-empty and inside
/// [0, duration]. Throws InputError for a non-positive duration.
void validate_segments(const std::vector<std::pair<double, double>>& spans, double duration);

/// "Mock annotation <digest>" (or a Chinese prefix when the prompt asks for zh).
class MockAnnotator : public clients::TextClient {
 public:
  std::string complete(const clients::Request& request) override;
};

/// Prefixes the text to translate with 【中文】.
class MockTranslator : public clients::TextClient {
 public:
  std::string complete(const clients::Request& request) override;
};

std::string region_text(const backbone::PromptSpec& prompt);
std::string format_seconds(double t);

/// Renders the elaboration prompt and returns the client reply. An empty or
/// whitespace-only reply throws DataError.
std::string elaborate(const AnnotationRecord& record, clients::TextClient& client,
                      const std::string& storyboard_line, const std::string& previous,
                      const std::optional<std::string>& image_b64 = std::nullopt);

/// Per-event elaboration. Each event prompt carries its span and the previous
/// event's stored description verbatim.
std::vector<Event> elaborate_stream(const AnnotationRecord& record, clients::TextClient& client,
                                    const std::vector<std::pair<double, double>>& spans,
                                    const std::string& storyboard_line,
                                    const std::optional<std::string>& image_b64 = std::nullopt);

/// True when the script of `text` agrees with the language tag.
bool language_matches(const std::string& text, Language language);

/// Rule-based cleaning. Returns the reasons a record fails (empty = keep).
///   empty_response, short_caption, malformed_events, language_mismatch
std::vector<std::string> clean(const AnnotationRecord& record);

struct PipelineResult {
  std::vector<AnnotationRecord> kept;
  std::vector<AnnotationRecord> flagged;
};

/// clean() over a batch plus dedup: a later record repeating an earlier key
/// is flagged "duplicate".
PipelineResult clean(const std::vector<AnnotationRecord>& records);

/// Chinese copy of an English record; every response and event text goes
/// through the translator.
AnnotationRecord translate_record(const AnnotationRecord& record, clients::TextClient& translator);

struct PipelineOptions {
  Mode mode = Mode::image;
  bool bilingual = false;
  std::size_t keyframes = kKeyframes;
  MediaSource media;
};

struct PipelineClients {
  clients::TextClient& annotator;
  clients::TextClient& translator;
  Segmenter& segmenter;
};

/// Dedup, storyboard, elaborate (segmenting first in stream mode), clean and
/// optionally bilingualize. Per-record failures land in `flagged` with reasons.
PipelineResult run_pipeline(const std::vector<AnnotationRecord>& records,
                            const PipelineOptions& options, const PipelineClients& clients);

}  // namespace pam::datapipe
