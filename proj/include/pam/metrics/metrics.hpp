// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pam/clients.hpp"
#include "pam/events.hpp"

namespace pam::metrics {

/// Lowercases ASCII letters, turns ASCII punctuation into spaces and splits on
/// whitespace. Non-ASCII bytes pass through, so CJK text survives.
struct TokenizedText {
  std::string original;
  std::vector<std::string> tokens;
};
TokenizedText tokenize(std::string_view text);
/// Tokens joined by single spaces; normalize(normalize(s)) == normalize(s).
std::string normalize(std::string_view text);

/// Token-set IoU; two empty sets score 1.
double semantic_iou(std::string_view pred, std::string_view gt);

using Embedder = std::function<std::vector<double>(std::string_view)>;
/// Token counts hashed (FNV-1a mod dim) into a dense vector.
std::vector<double> hashed_bow(std::string_view text, std::size_t dim = 256);
/// Cosine similarity of embeddings; a zero vector on either side scores 0.
double semantic_similarity(std::string_view pred, std::string_view gt,
                           const Embedder& embedder = {});

/// 1 when equal after trimming and ASCII case folding.
int ocr_accuracy(std::string_view pred, std::string_view gt);

/// LCS F1 over normalized tokens; 0 when either side is empty.
double rouge_l(std::string_view pred, std::string_view ref);

/// Exact-match METEOR variant: leftmost-greedy unigram alignment,
/// F_mean = P·R/(α·P + (1−α)·R), penalty γ·(chunks/matches)^β with
/// α = 0.9, β = 3, γ = 0.5.
double meteor_lite(std::string_view pred, std::string_view ref);

struct CiderResult {
  std::vector<double> scores;
  double mean = 0.0;
};
/// CIDEr-D over (prediction, references) pairs: n = 1..4, tf·idf with
/// idf = log(N / max(1, df)) from the reference sets, clipped numerator,
/// Gaussian length penalty σ = 6 on token counts, mean over n and references,
/// ×10. Throws InputError on an empty corpus.
CiderResult cider_d(const std::vector<std::pair<std::string, std::vector<std::string>>>& pairs);

/// Scores predicted against reference events. Implementations return the raw
/// judge reply; g_stdc parses it.
class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  virtual std::string judge(const std::string& prompt, const std::vector<Event>& pred,
                            const std::vector<Event>& ref) = 0;
};

/// Replies "Score: N" with N = round(5·min(|pred|,|ref|)/max(|pred|,|ref|))
/// (5 when both are empty).
class MockJudge : public JudgeClient {
 public:
  std::string judge(const std::string& prompt, const std::vector<Event>& pred,
                    const std::vector<Event>& ref) override;
};

/// Sends the prompt through a text client.
class TextJudge : public JudgeClient {
 public:
  explicit TextJudge(clients::TextClient& client) : client_(client) {}
  std::string judge(const std::string& prompt, const std::vector<Event>& pred,
                    const std::vector<Event>& ref) override;

 private:
  clients::TextClient& client_;
};

/// Judge prompt for chronologically sorted event lists.
std::string judge_prompt(const std::vector<Event>& pred, const std::vector<Event>& ref);
/// First integer in the reply; ProtocolError (carrying the reply) unless it
/// exists and lies in 0..5.
int parse_judge_score(const std::string& reply);
/// Sorts both lists, asks the judge and parses its reply.
int g_stdc(std::vector<Event> pred, std::vector<Event> ref, JudgeClient& judge);

/// Streaming evaluation record.
struct StreamEvalRecord {
  std::string id;
  std::vector<Event> events;
};
/// Keeps records with at least one event whose events satisfy t0 < t1, are
/// contiguous in order (t1 of event i == t0 of event i+1) and share one
/// non-empty subject id.
bool is_curated(const StreamEvalRecord& r);
std::vector<StreamEvalRecord> curate_streaming_eval(const std::vector<StreamEvalRecord>& records);

/// One aligned evaluation sample.
struct EvalSample {
  std::string key;
  std::string pred;
  std::vector<std::string> refs;  // first entry is the primary reference
  std::vector<Event> pred_events;
  std::vector<Event> ref_events;
};

/// Metric names: semantic_iou, semantic_similarity, ocr_accuracy, rouge_l,
/// meteor_lite, cider_d, g_stdc. Unknown names raise ConfigError; g_stdc
/// needs a judge.
const std::vector<std::string>& metric_names();
nlohmann::ordered_json evaluate(const std::vector<EvalSample>& samples,
                                const std::vector<std::string>& metrics, JudgeClient* judge);

}  // namespace pam::metrics
