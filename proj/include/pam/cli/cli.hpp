// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pam/cli/config.hpp"
#include "pam/curriculum/curriculum.hpp"
#include "pam/datapipe/record.hpp"
#include "pam/metrics/metrics.hpp"
#include "pam/model.hpp"

namespace pam::cli {

/// Process exit codes.
enum Exit : int {
  kOk = 0,
  kFailure = 1,   // anything not listed below
  kConfig = 2,    // bad configuration or command line
  kInput = 3,     // bad input data
  kNumeric = 4,   // non-finite values
  kClient = 5,    // external client or judge protocol failure
};

/// Maps the current exception onto an exit code and writes one line to `err`.
int report_error(std::ostream& err);

/// Entry point shared by the `pam` binary and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Frame embeddings for a media spec: "synthetic:<seed>" (with `frames`
/// frames), a PNG file, or a directory of PNG frames.
std::vector<backbone::ImageGridEmbedding> load_frames(const Model& model, const std::string& media,
                                                      std::size_t frames);

/// Training samples built from annotation records. Video records contribute
/// up to `video_frames` uniformly spaced frames; stream records one sample
/// per event, each carrying the previous event's text.
std::vector<curriculum::TrainingSample> samples_from_records(
    const Model& model, const std::vector<datapipe::AnnotationRecord>& records,
    std::size_t video_frames, const std::string& media_root = {});

/// Aligns prediction and reference JSONL ({"id", "text"|"refs"|"events"}).
/// A key present on one side only raises InputError naming the key.
std::vector<metrics::EvalSample> align_eval(const std::string& pred_jsonl, const std::string& ref_jsonl);

}  // namespace pam::cli
