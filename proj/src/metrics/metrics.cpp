// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/metrics/metrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "pam/errors.hpp"
#include "pam/hash.hpp"
#include "pam/templates.hpp"

namespace pam::metrics {

namespace {

bool ascii_punct(unsigned char c) { return c < 128 && std::ispunct(c); }
bool ascii_space(unsigned char c) { return c < 128 && std::isspace(c); }

}  // namespace

TokenizedText tokenize(std::string_view text) {
  TokenizedText t{std::string(text), {}};
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (ascii_space(c) || ascii_punct(c)) {
      if (!cur.empty()) t.tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c < 128 ? static_cast<char>(std::tolower(c)) : ch;
    }
  }
  if (!cur.empty()) t.tokens.push_back(std::move(cur));
  return t;
}

std::string normalize(std::string_view text) {
  std::string out;
  for (const auto& tok : tokenize(text).tokens) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

double semantic_iou(std::string_view pred, std::string_view gt) {
  const auto a = tokenize(pred).tokens, b = tokenize(gt).tokens;
  const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& s : sa) inter += sb.count(s);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

std::vector<double> hashed_bow(std::string_view text, std::size_t dim) {
  if (dim == 0) throw ConfigError("hashed_bow: dim must be positive");
  std::vector<double> v(dim, 0.0);
  for (const auto& tok : tokenize(text).tokens) v[fnv1a(tok) % dim] += 1.0;
  return v;
}

double semantic_similarity(std::string_view pred, std::string_view gt, const Embedder& embedder) {
  const auto a = embedder ? embedder(pred) : hashed_bow(pred);
  const auto b = embedder ? embedder(gt) : hashed_bow(gt);
  if (a.size() != b.size()) throw ShapeError("embedder returned vectors of different sizes");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

int ocr_accuracy(std::string_view pred, std::string_view gt) {
  auto fold = [](std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && ascii_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && ascii_space(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out(s.substr(b, e - b));
    for (char& c : out)
      if (static_cast<unsigned char>(c) < 128) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  return fold(pred) == fold(gt) ? 1 : 0;
}

double rouge_l(std::string_view pred, std::string_view ref) {
  const auto p = tokenize(pred).tokens, r = tokenize(ref).tokens;
  if (p.empty() || r.empty()) return 0.0;
  std::vector<std::size_t> prev(r.size() + 1, 0), cur(r.size() + 1, 0);
  for (std::size_t i = 1; i <= p.size(); ++i) {
    for (std::size_t j = 1; j <= r.size(); ++j)
      cur[j] = p[i - 1] == r[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[r.size()]);
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / static_cast<double>(p.size());
  const double recall = lcs / static_cast<double>(r.size());
  return 2.0 * precision * recall / (precision + recall);
}

double meteor_lite(std::string_view pred, std::string_view ref) {
  constexpr double kAlpha = 0.9, kBeta = 3.0, kGamma = 0.5;
  const auto p = tokenize(pred).tokens, r = tokenize(ref).tokens;
  std::vector<bool> used(r.size(), false);
  std::vector<long> align(p.size(), -1);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j)
      if (!used[j] && p[i] == r[j]) {
        used[j] = true;
        align[i] = static_cast<long>(j);
        ++matches;
        break;
      }
  if (matches == 0) return 0.0;
  std::size_t chunks = 0;
  long last = -2;
  bool in_chunk = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (align[i] < 0) {
      in_chunk = false;
      continue;
    }
    if (!in_chunk || align[i] != last + 1) ++chunks;
    in_chunk = true;
    last = align[i];
  }
  const double m = static_cast<double>(matches);
  const double precision = m / static_cast<double>(p.size());
  const double recall = m / static_cast<double>(r.size());
  const double fmean = precision * recall / (kAlpha * precision + (1.0 - kAlpha) * recall);
  const double penalty = kGamma * std::pow(static_cast<double>(chunks) / m, kBeta);
  return fmean * (1.0 - penalty);
}

namespace {

using NgramCounts = std::unordered_map<std::string, double>;

std::array<NgramCounts, 4> ngram_counts(const std::vector<std::string>& toks) {
  std::array<NgramCounts, 4> out;
  for (std::size_t n = 1; n <= 4; ++n)
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      std::string key = toks[i];
      for (std::size_t k = 1; k < n; ++k) key += '\x1f' + toks[i + k];
      out[n - 1][key] += 1.0;
    }
  return out;
}

}  // namespace

CiderResult cider_d(const std::vector<std::pair<std::string, std::vector<std::string>>>& pairs) {
  if (pairs.empty()) throw InputError("cider_d: empty corpus");
  constexpr double kSigma = 6.0;
  struct Doc {
    std::array<NgramCounts, 4> counts;
    double length;
  };
  std::vector<Doc> hyps;
  std::vector<std::vector<Doc>> refs;
  std::array<std::unordered_map<std::string, double>, 4> df;
  for (const auto& [pred, rs] : pairs) {
    const auto pt = tokenize(pred).tokens;
    hyps.push_back({ngram_counts(pt), static_cast<double>(pt.size())});
    std::vector<Doc> docs;
    std::array<std::set<std::string>, 4> seen;
    for (const auto& r : rs) {
      const auto rt = tokenize(r).tokens;
      docs.push_back({ngram_counts(rt), static_cast<double>(rt.size())});
      for (std::size_t n = 0; n < 4; ++n)
        for (const auto& [g, c] : docs.back().counts[n]) seen[n].insert(g);
    }
    for (std::size_t n = 0; n < 4; ++n)
      for (const auto& g : seen[n]) df[n][g] += 1.0;
    refs.push_back(std::move(docs));
  }
  const double log_n = std::log(static_cast<double>(pairs.size()));

  struct Vec {
    std::array<NgramCounts, 4> w;
    std::array<double, 4> norm{};
  };
  auto weigh = [&](const Doc& d) {
    Vec v;
    for (std::size_t n = 0; n < 4; ++n) {
      double sq = 0.0;
      for (const auto& [g, tf] : d.counts[n]) {
        const auto it = df[n].find(g);
        const double dfv = it == df[n].end() ? 0.0 : it->second;
        const double x = tf * (log_n - std::log(std::max(1.0, dfv)));
        v.w[n][g] = x;
        sq += x * x;
      }
      v.norm[n] = std::sqrt(sq);
    }
    return v;
  };

  CiderResult out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (hyps[i].length == 0.0 || refs[i].empty()) {
      out.scores.push_back(0.0);
      continue;
    }
    const Vec h = weigh(hyps[i]);
    double total = 0.0;
    for (const Doc& rd : refs[i]) {
      const Vec r = weigh(rd);
      const double delta = hyps[i].length - rd.length;
      const double lp = std::exp(-(delta * delta) / (2.0 * kSigma * kSigma));
      double per_n = 0.0;
      for (std::size_t n = 0; n < 4; ++n) {
        double val = 0.0;
        for (const auto& [g, x] : h.w[n]) {
          const auto it = r.w[n].find(g);
          if (it != r.w[n].end()) val += std::min(x, it->second) * it->second;
        }
        if (h.norm[n] != 0.0 && r.norm[n] != 0.0) val /= h.norm[n] * r.norm[n];
        per_n += val * lp;
      }
      total += per_n / 4.0;
    }
    out.scores.push_back(10.0 * total / static_cast<double>(refs[i].size()));
  }
  double sum = 0.0;
  for (double s : out.scores) sum += s;
  out.mean = sum / static_cast<double>(out.scores.size());
  return out;
}

std::string MockJudge::judge(const std::string&, const std::vector<Event>& pred,
                             const std::vector<Event>& ref) {
  const double a = static_cast<double>(pred.size()), b = static_cast<double>(ref.size());
  const long score = std::max(a, b) == 0.0 ? 5 : std::lround(5.0 * std::min(a, b) / std::max(a, b));
  return "Score: " + std::to_string(score);
}

std::string TextJudge::judge(const std::string& prompt, const std::vector<Event>&,
                             const std::vector<Event>&) {
  return client_.complete(clients::Request{prompt, std::nullopt});
}

namespace {

std::string format_seconds(double t) {
  std::ostringstream ss;
  ss << t;
  return ss.str();
}

std::string event_lines(const std::vector<Event>& events) {
  std::string out;
  for (const Event& e : events) {
    out += templates::fill(templates::kJudgeEvent,
                           {{"t0", format_seconds(e.t0)}, {"t1", format_seconds(e.t1)}, {"text", e.text}});
  }
  return out;
}

}  // namespace

std::string judge_prompt(const std::vector<Event>& pred, const std::vector<Event>& ref) {
  return templates::fill(templates::kJudge,
                         {{"reference", event_lines(ref)}, {"prediction", event_lines(pred)}});
}

int parse_judge_score(const std::string& reply) {
  std::size_t i = 0;
  while (i < reply.size() && !std::isdigit(static_cast<unsigned char>(reply[i]))) ++i;
  if (i == reply.size()) throw ProtocolError("judge reply holds no score", reply);
  std::size_t j = i;
  while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
  const std::string digits = reply.substr(i, j - i);
  if (digits.size() > 1 || digits[0] > '5') {
    throw ProtocolError("judge score " + digits + " outside 0..5", reply);
  }
  return digits[0] - '0';
}

int g_stdc(std::vector<Event> pred, std::vector<Event> ref, JudgeClient& judge) {
  sort_events(pred);
  sort_events(ref);
  return parse_judge_score(judge.judge(judge_prompt(pred, ref), pred, ref));
}

bool is_curated(const StreamEvalRecord& r) {
  if (r.events.empty()) return false;
  for (std::size_t i = 0; i < r.events.size(); ++i) {
    const Event& e = r.events[i];
    if (!(e.t0 < e.t1)) return false;
    if (e.subject_id.empty() || e.subject_id != r.events.front().subject_id) return false;
    if (i > 0 && r.events[i - 1].t1 != e.t0) return false;
  }
  return true;
}

std::vector<StreamEvalRecord> curate_streaming_eval(const std::vector<StreamEvalRecord>& records) {
  std::vector<StreamEvalRecord> out;
  for (const auto& r : records)
    if (is_curated(r)) out.push_back(r);
  return out;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"semantic_iou", "semantic_similarity",
                                                 "ocr_accuracy", "rouge_l",
                                                 "meteor_lite",  "cider_d",
                                                 "g_stdc"};
  return names;
}

nlohmann::ordered_json evaluate(const std::vector<EvalSample>& samples,
                                const std::vector<std::string>& metrics, JudgeClient* judge) {
  for (const auto& m : metrics) {
    if (std::find(metric_names().begin(), metric_names().end(), m) == metric_names().end()) {
      throw ConfigError("unknown metric '" + m + "'");
    }
    if (m == "g_stdc" && !judge) throw ConfigError("g_stdc needs a judge client");
  }
  if (samples.empty()) throw InputError("no samples to evaluate");
  for (const auto& s : samples)
    if (s.refs.empty()) throw InputError("sample " + s.key + " has no reference");

  nlohmann::ordered_json per_sample = nlohmann::ordered_json::array();
  for (const auto& s : samples) per_sample.push_back({{"key", s.key}});
  nlohmann::ordered_json aggregate = nlohmann::ordered_json::object();

  for (const auto& m : metrics) {
    std::vector<double> values;
    if (m == "cider_d") {
      std::vector<std::pair<std::string, std::vector<std::string>>> pairs;
      for (const auto& s : samples) pairs.emplace_back(s.pred, s.refs);
      values = cider_d(pairs).scores;
    } else {
      for (const auto& s : samples) {
        const std::string& ref = s.refs.front();
        if (m == "semantic_iou") values.push_back(semantic_iou(s.pred, ref));
        else if (m == "semantic_similarity") values.push_back(semantic_similarity(s.pred, ref));
        else if (m == "ocr_accuracy") values.push_back(ocr_accuracy(s.pred, ref));
        else if (m == "rouge_l") values.push_back(rouge_l(s.pred, ref));
        else if (m == "meteor_lite") values.push_back(meteor_lite(s.pred, ref));
        else values.push_back(g_stdc(s.pred_events, s.ref_events, *judge));
      }
    }
    const bool integral = m == "ocr_accuracy" || m == "g_stdc";
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      sum += values[i];
      if (integral) per_sample[i][m] = static_cast<int>(values[i]);
      else per_sample[i][m] = values[i];
    }
    aggregate[m] = sum / static_cast<double>(values.size());
  }
  return {{"metrics", metrics}, {"count", samples.size()}, {"aggregate", aggregate},
          {"samples", per_sample}};
}

}  // namespace pam::metrics
