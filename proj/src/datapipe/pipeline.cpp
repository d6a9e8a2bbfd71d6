// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/datapipe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "pam/errors.hpp"
#include "pam/templates.hpp"

namespace pam::datapipe {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::image: return "image";
    case Mode::video: return "video";
    case Mode::stream: return "stream";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  if (s == "image") return Mode::image;
  if (s == "video") return Mode::video;
  if (s == "stream") return Mode::stream;
  throw InputError("unknown pipeline mode '" + s + "' (image|video|stream)");
}

MockSegmenter::MockSegmenter(double window) : window_(window) {
  if (!(window > 0.0)) throw ConfigError("segment window must be positive");
}

std::vector<std::pair<double, double>> MockSegmenter::segment(const AnnotationRecord& record) {
  const double d = record.duration();
  if (!(d > 0.0)) throw InputError("cannot segment a video of duration " + format_seconds(d));
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; static_cast<double>(k) * window_ < d; ++k) {
    out.emplace_back(static_cast<double>(k) * window_,
                     std::min(static_cast<double>(k + 1) * window_, d));
  }
  return out;
}

std::vector<std::pair<double, double>> TextSegmenter::segment(const AnnotationRecord& record) {
  const double d = record.duration();
  if (!(d > 0.0)) throw InputError("cannot segment a video of duration " + format_seconds(d));
  auto it = record.responses.find("original");
  const std::string prompt =
      templates::fill(templates::kSegment, {{"duration", format_seconds(d)},
                                            {"original", it == record.responses.end() ? "" : it->second}});
  const std::string reply = client_.complete({prompt, std::nullopt});
  const auto j = nlohmann::json::parse(reply, nullptr, false);
  if (j.is_discarded() || !j.is_array()) throw DataError("segmenter reply is not a JSON array");
  std::vector<std::pair<double, double>> out;
  for (const auto& e : j) {
    if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
      out.emplace_back(e[0].get<double>(), e[1].get<double>());
    } else if (e.is_object() && e.contains("t0") && e.contains("t1") && e["t0"].is_number() &&
               e["t1"].is_number()) {
      out.emplace_back(e["t0"].get<double>(), e["t1"].get<double>());
    } else {
      throw DataError("segmenter reply has a malformed span");
    }
  }
  validate_segments(out, d);
  return out;
}

void validate_segments(const std::vector<std::pair<double, double>>& spans, double duration) {
  if (!(duration > 0.0)) throw InputError("duration must be positive");
  if (spans.empty()) throw DataError("no events");
  double prev_end = 0.0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto [t0, t1] = spans[i];
    if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 > t0)) throw DataError("empty or inverted span");
    if (t0 < 0.0 || t1 > duration + 1e-9) throw DataError("span outside the video");
    if (i > 0 && t0 < prev_end - 1e-9) throw DataError("spans overlap or are unsorted");
    prev_end = t1;
  }
}

std::string MockAnnotator::complete(const clients::Request& request) {
  const bool zh = request.prompt.find("\nLanguage: zh\n") != std::string::npos;
  return std::string(zh ? "模拟标注 " : "Mock annotation ") + clients::digest(request.prompt);
}

std::string MockTranslator::complete(const clients::Request& request) {
  const std::string head = templates::fill(templates::kTranslate, {{"text", ""}});
  if (request.prompt.rfind(head, 0) != 0) throw ClientError("translator got an unexpected prompt");
  return "【中文】" + request.prompt.substr(head.size());
}

std::string format_seconds(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", t);
  return buf;
}

std::string region_text(const backbone::PromptSpec& prompt) {
  std::string s = backbone::to_string(prompt.kind);
  if (prompt.kind == backbone::PromptKind::mask) {
    std::size_t on = 0;
    for (auto v : prompt.mask) on += v != 0;
    s += " covering " + std::to_string(on) + "/" + std::to_string(prompt.mask.size()) + " cells";
  } else {
    s += " [";
    for (std::size_t i = 0; i < prompt.coords.size(); ++i) {
      if (i) s += ", ";
      s += format_seconds(prompt.coords[i]);
    }
    s += "]";
  }
  return s + " on frame " + std::to_string(prompt.frame_index);
}

namespace {

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string original_of(const AnnotationRecord& r) {
  auto it = r.responses.find("original");
  return it == r.responses.end() ? std::string() : it->second;
}

std::string complete_nonempty(clients::TextClient& client, const clients::Request& req) {
  std::string reply = client.complete(req);
  if (blank(reply)) throw DataError("annotator returned an empty response");
  return reply;
}

std::vector<char32_t> code_points(const std::string& s) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t n = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
    if (i + n > s.size()) n = 1;
    char32_t cp = n == 1 ? c : n == 2 ? (c & 0x1F) : n == 3 ? (c & 0x0F) : (c & 0x07);
    for (std::size_t k = 1; k < n; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += n;
  }
  return out;
}

bool is_cjk(char32_t c) {
  return (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF) ||
         (c >= 0x3000 && c <= 0x303F) || (c >= 0xFF00 && c <= 0xFFEF);
}

std::string granularity(Task task) {
  switch (task) {
    case Task::category: return "category label";
    case Task::explanation: return "explanation";
    case Task::caption: return "detailed caption";
    case Task::stream: return "clip caption";
  }
  return "?";
}

}  // namespace

std::string elaborate(const AnnotationRecord& record, clients::TextClient& client,
                      const std::string& storyboard_line, const std::string& previous,
                      const std::optional<std::string>& image_b64) {
  const std::string prompt = templates::fill(templates::kElaborate,
                                             {{"task", to_string(record.task)},
                                              {"granularity", granularity(record.task)},
                                              {"language", to_string(record.language)},
                                              {"region", region_text(record.prompt)},
                                              {"original", original_of(record)},
                                              {"storyboard", storyboard_line},
                                              {"previous", previous}});
  return complete_nonempty(client, {prompt, image_b64});
}

std::vector<Event> elaborate_stream(const AnnotationRecord& record, clients::TextClient& client,
                                    const std::vector<std::pair<double, double>>& spans,
                                    const std::string& storyboard_line,
                                    const std::optional<std::string>& image_b64) {
  std::vector<Event> events;
  for (const auto& [t0, t1] : spans) {
    std::string previous = templates::fill(
        templates::kEventSpan, {{"t0", format_seconds(t0)}, {"t1", format_seconds(t1)}});
    if (!events.empty()) {
      previous += templates::fill(templates::kPreviousClip, {{"text", events.back().text}});
    }
    events.push_back({t0, t1, elaborate(record, client, storyboard_line, previous, image_b64),
                      record.media_id});
  }
  return events;
}

bool language_matches(const std::string& text, Language language) {
  std::size_t cjk = 0, latin = 0;
  for (char32_t c : code_points(text)) {
    if (is_cjk(c)) ++cjk;
    else if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) ++latin;
  }
  return language == Language::zh ? cjk > 0 : cjk <= latin;
}

std::vector<std::string> clean(const AnnotationRecord& record) {
  std::vector<std::string> reasons;
  std::vector<std::string> texts;
  if (record.task == Task::stream) {
    if (record.events.empty() || !events_well_formed(record.events)) {
      reasons.push_back("malformed_events");
    }
    for (const auto& e : record.events) texts.push_back(e.text);
    if (std::any_of(texts.begin(), texts.end(), blank)) reasons.push_back("empty_response");
  } else {
    auto it = record.responses.find(to_string(record.task));
    if (it == record.responses.end() || blank(it->second)) {
      reasons.push_back("empty_response");
    } else {
      texts.push_back(it->second);
      if (record.task == Task::caption && code_points(it->second).size() < 3) {
        reasons.push_back("short_caption");
      }
    }
    if (!record.events.empty() && !events_well_formed(record.events)) {
      reasons.push_back("malformed_events");
    }
  }
  for (const auto& t : texts) {
    if (!blank(t) && !language_matches(t, record.language)) {
      reasons.push_back("language_mismatch");
      break;
    }
  }
  return reasons;
}

PipelineResult clean(const std::vector<AnnotationRecord>& records) {
  PipelineResult out;
  std::set<std::string> seen;
  for (auto r : records) {
    r.flags.clear();
    if (!seen.insert(record_key(r)).second) {
      r.flags.push_back("duplicate");
    } else {
      r.flags = clean(r);
    }
    (r.flags.empty() ? out.kept : out.flagged).push_back(std::move(r));
  }
  return out;
}

AnnotationRecord translate_record(const AnnotationRecord& record, clients::TextClient& translator) {
  if (record.language != Language::en) throw InputError("only English records are translated");
  auto translate = [&](const std::string& text) {
    return complete_nonempty(translator,
                             {templates::fill(templates::kTranslate, {{"text", text}}), std::nullopt});
  };
  AnnotationRecord zh = record;
  zh.language = Language::zh;
  zh.flags.clear();
  for (auto& [k, v] : zh.responses) v = translate(v);
  for (auto& e : zh.events) e.text = translate(e.text);
  return zh;
}

namespace {

struct Visual {
  std::string line;
  std::string png_b64;
};

Visual render(const AnnotationRecord& r, const PipelineOptions& opt) {
  const auto& color = mark_palette().front();
  if (r.modality == Modality::image) {
    const Image img = som_overlay(opt.media.image(r.media_id), r.prompt, color.rgb);
    return {"", base64_encode(encode_png(img))};
  }
  const auto idx = sample_keyframes(r.frames, opt.keyframes);
  std::vector<Image> frames;
  for (auto i : idx) frames.push_back(opt.media.video_frame(r.media_id, i, r.frames));
  StoryboardSpec spec;
  spec.color = color.rgb;
  spec.rows = 2;
  spec.cols = (idx.size() + 1) / 2;
  if (idx.size() % 2) {
    spec.rows = 1;
    spec.cols = idx.size();
  }
  const Image board = compose_storyboard(frames, r.prompt, spec);
  std::string indices;
  for (std::size_t k = 0; k < idx.size(); ++k) indices += (k ? ", " : "") + std::to_string(idx[k]);
  const std::string line = templates::fill(
      templates::kStoryboardLine,
      {{"media", to_string(r.modality)}, {"indices", indices}, {"color", color.name}});
  return {line, base64_encode(encode_png(board))};
}

AnnotationRecord flagged(AnnotationRecord r, std::vector<std::string> reasons) {
  r.flags = std::move(reasons);
  return r;
}

}  // namespace

PipelineResult run_pipeline(const std::vector<AnnotationRecord>& records,
                            const PipelineOptions& options, const PipelineClients& clients) {
  PipelineResult out;
  std::set<std::string> seen;
  for (const auto& input : records) {
    if (!seen.insert(record_key(input)).second) {
      out.flagged.push_back(flagged(input, {"duplicate"}));
      continue;
    }
    const bool want_video = options.mode != Mode::image;
    if ((input.modality == Modality::video) != want_video) {
      out.flagged.push_back(flagged(input, {"modality_mismatch"}));
      continue;
    }
    if ((options.mode == Mode::stream) != (input.task == Task::stream)) {
      out.flagged.push_back(flagged(input, {"task_mismatch"}));
      continue;
    }
    AnnotationRecord rec = input;
    rec.flags.clear();
    try {
      const Visual vis = render(rec, options);
      if (options.mode == Mode::stream) {
        const auto spans = clients.segmenter.segment(rec);
        validate_segments(spans, rec.duration());
        rec.events = elaborate_stream(rec, clients.annotator, spans, vis.line, vis.png_b64);
      } else {
        rec.responses[to_string(rec.task)] =
            elaborate(rec, clients.annotator, vis.line, "", vis.png_b64);
      }
    } catch (const InputError&) {
      out.flagged.push_back(flagged(input, {"media_error"}));
      continue;
    } catch (const DataError&) {
      out.flagged.push_back(flagged(input, {"empty_response"}));
      continue;
    } catch (const ClientError&) {
      out.flagged.push_back(flagged(input, {"client_error"}));
      continue;
    }
    if (auto reasons = clean(rec); !reasons.empty()) {
      out.flagged.push_back(flagged(std::move(rec), std::move(reasons)));
      continue;
    }
    out.kept.push_back(rec);
    if (options.bilingual && rec.language == Language::en) {
      try {
        AnnotationRecord zh = translate_record(rec, clients.translator);
        if (auto reasons = clean(zh); !reasons.empty()) {
          out.flagged.push_back(flagged(std::move(zh), std::move(reasons)));
        } else {
          out.kept.push_back(std::move(zh));
        }
      } catch (const Error&) {
        AnnotationRecord zh = rec;
        zh.language = Language::zh;
        out.flagged.push_back(flagged(std::move(zh), {"translation_failed"}));
      }
    }
  }
  return out;
}

}  // namespace pam::datapipe
