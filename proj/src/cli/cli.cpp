// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "pam/datapipe/pipeline.hpp"
#include "pam/errors.hpp"
#include "pam/streamer/streamer.hpp"
#include "pam/templates.hpp"

namespace pam::cli {

int report_error(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ShapeError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const DataError& e) {
    err << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const ProtocolError& e) {
    err << "protocol error: " << e.what() << " (reply: " << e.raw_reply() << ")\n";
    return kClient;
  } catch (const ClientError& e) {
    err << "client error: " << e.what() << "\n";
    return kClient;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

backbone::PromptSpec parse_prompt(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw InputError("prompt is not valid JSON");
  return backbone::prompt_from_json(j);
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::logic_error&) {
      throw InputError("bad number '" + item + "'");
    }
    if (used != item.size()) throw InputError("bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string dump(const nlohmann::ordered_json& j) {
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

bool synthetic_seed(const std::string& media, std::uint64_t& seed) {
  static constexpr std::string_view kPrefix = "synthetic:";
  if (media.rfind(kPrefix, 0) != 0) return false;
  const std::string rest = media.substr(kPrefix.size());
  if (rest.empty() || !std::all_of(rest.begin(), rest.end(), ::isdigit)) {
    throw InputError("bad synthetic media '" + media + "'");
  }
  seed = std::stoull(rest);
  return true;
}

std::vector<std::filesystem::path> png_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError(dir.string() + " holds no PNG frames");
  return files;
}

// Nearest-cell resampling of a mask prompt onto the model grid.
backbone::PromptSpec fit_prompt(backbone::PromptSpec p, std::size_t grid) {
  p.frame_index = 0;
  if (p.kind != backbone::PromptKind::mask || p.mask_grid == grid) return p;
  std::vector<std::uint8_t> cells(grid * grid);
  for (std::size_t y = 0; y < grid; ++y)
    for (std::size_t x = 0; x < grid; ++x)
      cells[y * grid + x] = p.mask[(y * p.mask_grid / grid) * p.mask_grid + x * p.mask_grid / grid];
  p.mask = std::move(cells);
  p.mask_grid = grid;
  return p;
}

}  // namespace

std::vector<backbone::ImageGridEmbedding> load_frames(const Model& model, const std::string& media,
                                                      std::size_t frames) {
  std::uint64_t seed = 0;
  if (synthetic_seed(media, seed)) {
    if (frames == 0) throw InputError("a synthetic video needs at least one frame");
    return model.synthetic_video(seed, frames);
  }
  const std::filesystem::path path(media);
  if (!std::filesystem::exists(path)) throw InputError("no such media " + media);
  std::vector<backbone::ImageGridEmbedding> out;
  if (std::filesystem::is_directory(path)) {
    const auto files = png_files(path);
    for (std::size_t i = 0; i < files.size(); ++i) {
      out.push_back(model.backbone().encode_image(read_png(files[i]), i));
    }
  } else {
    out.push_back(model.backbone().encode_image(read_png(path), 0));
  }
  return out;
}

std::vector<curriculum::TrainingSample> samples_from_records(
    const Model& model, const std::vector<datapipe::AnnotationRecord>& records,
    std::size_t video_frames, const std::string& media_root) {
  const datapipe::MediaSource media(media_root, 64);
  std::vector<curriculum::TrainingSample> out;
  for (const auto& r : records) {
    auto frame = [&](std::size_t i) {
      return r.modality == Modality::image ? model.backbone().encode_image(media.image(r.media_id), 0)
                                           : model.backbone().encode_image(
                                                 media.video_frame(r.media_id, i, r.frames), i);
    };
    auto pick = [&](std::size_t begin, std::size_t end) {
      const std::size_t n = end - begin;
      const std::size_t k = std::min(n, video_frames);
      std::vector<std::size_t> idx;
      if (k == 1) {
        idx = {begin};
      } else {
        for (auto i : datapipe::sample_keyframes(n, k)) idx.push_back(begin + i);
      }
      std::vector<backbone::ImageGridEmbedding> frames;
      for (auto i : idx) frames.push_back(frame(i));
      return frames;
    };
    const std::string key = datapipe::record_key(r);
    if (r.task == Task::stream) {
      if (r.events.empty()) throw InputError("stream record " + key + " has no events");
      const auto times = streamer::frame_times(r.frames, r.fps);
      std::optional<std::string> prev;
      for (std::size_t e = 0; e < r.events.size(); ++e) {
        const auto& ev = r.events[e];
        std::size_t begin = r.frames, end = 0;
        for (std::size_t i = 0; i < r.frames; ++i) {
          if (times[i] > ev.t0 && times[i] <= ev.t1 + 1e-9) {
            begin = std::min(begin, i);
            end = i + 1;
          }
        }
        if (end == 0) throw InputError("event " + std::to_string(e) + " of " + key + " covers no frame");
        const auto frames = pick(begin, end);
        curriculum::TrainingSample t;
        t.key = key + "#" + std::to_string(e);
        t.kind = {r.modality, r.task};
        const auto prompt = fit_prompt(r.prompt, model.config().grid);
        t.states = model.encode(frames, prompt);
        t.roles = streamer::clip_roles(frames.size(), false);
        t.instruction = std::string(templates::task_instruction(r.task));
        t.response = ev.text;
        t.prev_description = prev;
        prev = ev.text;
        out.push_back(std::move(t));
      }
      continue;
    }
    const auto it = r.responses.find(to_string(r.task));
    const auto fallback = r.responses.find("original");
    if (it == r.responses.end() && fallback == r.responses.end()) {
      throw InputError("record " + key + " has no response for task " + to_string(r.task));
    }
    curriculum::TrainingSample t;
    t.key = key;
    t.kind = {r.modality, r.task};
    const auto frames = r.modality == Modality::image
                            ? std::vector<backbone::ImageGridEmbedding>{frame(0)}
                            : pick(0, r.frames);
    const auto prompt = fit_prompt(r.prompt, model.config().grid);
    t.states = model.encode(frames, prompt);
    t.roles = video_roles(frames.size(), 0);
    t.instruction = std::string(templates::task_instruction(r.task));
    t.response = (it != r.responses.end() ? it : fallback)->second;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<metrics::EvalSample> align_eval(const std::string& pred_jsonl,
                                            const std::string& ref_jsonl) {
  struct Entry {
    std::vector<std::string> texts;
    std::vector<Event> events;
  };
  auto parse = [](const std::string& text, const char* side) {
    std::map<std::string, Entry> out;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      const std::string where = std::string(side) + " line " + std::to_string(n) + ": ";
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) throw InputError(where + "invalid JSON object");
      if (!j.contains("id") || !(j["id"].is_string() || j["id"].is_number_integer())) {
        throw InputError(where + "missing 'id'");
      }
      const std::string id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
      Entry e;
      try {
        for (const auto& [k, v] : j.items()) {
          if (k == "id") continue;
          if (k == "text") {
            e.texts.insert(e.texts.begin(), v.get<std::string>());
          } else if (k == "refs") {
            for (const auto& r : v) e.texts.push_back(r.get<std::string>());
          } else if (k == "events") {
            for (const auto& ev : v) e.events.push_back(event_from_json(ev));
          } else {
            throw InputError(where + "unknown field '" + k + "'");
          }
        }
      } catch (const nlohmann::json::exception&) {
        throw InputError(where + "field has the wrong type");
      }
      if (!out.emplace(id, std::move(e)).second) throw InputError(where + "duplicate id " + id);
    }
    return out;
  };
  const auto preds = parse(pred_jsonl, "pred");
  const auto refs = parse(ref_jsonl, "ref");
  for (const auto& [id, e] : preds) {
    if (!refs.count(id)) throw InputError("missing reference for key " + id);
  }
  for (const auto& [id, e] : refs) {
    if (!preds.count(id)) throw InputError("missing prediction for key " + id);
  }
  std::vector<metrics::EvalSample> out;
  for (const auto& [id, p] : preds) {
    const auto& r = refs.at(id);
    metrics::EvalSample s;
    s.key = id;
    s.pred = p.texts.empty() ? "" : p.texts.front();
    s.refs = r.texts;
    s.pred_events = p.events;
    s.ref_events = r.events;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool mock_clients = false;
};

RunConfig resolve(const Globals& g) {
  RunConfig c = g.config_path.empty() ? RunConfig::defaults() : load_config(g.config_path);
  if (g.seed) {
    c.model.seed = *g.seed;
    for (auto& [label, s] : c.stages) s.seed = *g.seed;
  }
  if (g.mock_clients) c.clients.mock = true;
  apply_environment(c);
  c.validate();
  return c;
}

struct PerceiveArgs {
  std::string media;
  std::size_t frames = 1;
  std::string prompt;
  std::string task = "caption";
  std::optional<std::size_t> max_len;
  std::string checkpoint;
};

void cmd_perceive(const RunConfig& c, const PerceiveArgs& a, std::ostream& out) {
  const Task task = parse_task(a.task);
  const backbone::PromptSpec prompt = parse_prompt(a.prompt);
  Model model(c.model, c.tap);
  if (!a.checkpoint.empty()) model.load(a.checkpoint);
  prompt.validate(c.model.grid);
  const auto frames = load_frames(model, a.media, a.frames);
  const auto roles = video_roles(frames.size(), prompt.frame_index);
  const auto states = model.encode(frames, prompt);
  const Prefix prefix = model.prefix(states, roles);
  const MaskSummary mask =
      summarize_mask(model.backbone().decode_mask(states[prompt.frame_index]), c.model.grid);
  const Description d = model.describe(prefix, std::string(templates::task_instruction(task)),
                                       std::nullopt, a.max_len.value_or(c.generate.max_len));
  nlohmann::ordered_json j;
  j["media"] = a.media;
  j["frames"] = frames.size();
  j["task"] = to_string(task);
  j["prompt"] = backbone::to_json(prompt);
  j["visual_tokens"] = d.visual_tokens;
  j["semantic_tokens"] = d.semantic_tokens;
  j["sequence_length"] = d.sequence_length;
  j["mask"] = {{"grid", c.model.grid}, {"area", mask.area}};
  if (mask.area > 0) {
    j["mask"]["bbox"] = {mask.x0, mask.y0, mask.x1, mask.y1};
  } else {
    j["mask"]["bbox"] = nullptr;
  }
  j["instruction"] = d.instruction;
  j["text"] = d.text;
  out << dump(j);
}

struct StreamArgs {
  std::string media;
  std::size_t frames = 0;
  std::string prompt;
  std::string timestamps;
  std::optional<double> fps;
  std::optional<std::size_t> max_len;
  std::string checkpoint;
};

void cmd_stream(const RunConfig& c, const StreamArgs& a, std::ostream& out) {
  const backbone::PromptSpec prompt = parse_prompt(a.prompt);
  const auto stamps = parse_numbers(a.timestamps);
  Model model(c.model, c.tap);
  if (!a.checkpoint.empty()) model.load(a.checkpoint);
  prompt.validate(c.model.grid);
  const auto frames = load_frames(model, a.media, a.frames);
  const auto times = streamer::frame_times(frames.size(), a.fps.value_or(c.generate.fps));
  streamer::StreamOptions opts;
  opts.max_len = a.max_len.value_or(c.generate.max_len);
  streamer::Streamer s(model, opts);
  out << streamer::to_jsonl(s.run(frames, times, prompt, stamps));
}

struct TrainArgs {
  std::string stages = "1,1.5,2";
  std::string dataset;
  std::string out;
};

void cmd_train(const RunConfig& c, const TrainArgs& a, std::ostream& out) {
  const auto plan = curriculum::parse_order(a.stages);
  Model model(c.model, c.tap);
  const std::string dataset = a.dataset.empty() ? c.train.dataset : a.dataset;
  curriculum::StageDatasets data;
  const std::vector<curriculum::Stage> all{curriculum::Stage::s1, curriculum::Stage::s1_5,
                                           curriculum::Stage::s2};
  if (dataset == "synthetic") {
    for (auto s : all) {
      data[curriculum::to_string(s)] = curriculum::synthetic_dataset(
          model, curriculum::dataset_mix(s), c.train.samples,
          c.model.seed + static_cast<std::uint64_t>(s) + 1);
    }
  } else {
    const auto records = datapipe::read_jsonl(dataset);
    const auto samples =
        samples_from_records(model, records, c.train.video_frames, c.pipeline.media_root);
    for (auto s : all) {
      const auto mix = curriculum::dataset_mix(s);
      auto& bucket = data[curriculum::to_string(s)];
      for (const auto& t : samples) {
        if (std::find(mix.begin(), mix.end(), t.kind) != mix.end()) bucket.push_back(t);
      }
    }
    for (auto s : plan.stages) {
      if (data[curriculum::to_string(s)].empty()) {
        throw InputError(dataset + " has no samples admitted by stage " + curriculum::to_string(s));
      }
    }
  }
  curriculum::StageConfigs configs(c.stages.begin(), c.stages.end());
  const std::filesystem::path dir = a.out.empty() ? c.train.checkpoint_dir : a.out;
  const auto reports = curriculum::run_curriculum(model, plan, data, configs, dir);
  nlohmann::ordered_json j;
  j["stages"] = a.stages;
  j["dataset"] = dataset;
  j["checkpoint_dir"] = dir.string();
  auto arr = nlohmann::ordered_json::array();
  bool frozen = true;
  for (const auto& r : reports) {
    arr.push_back(nlohmann::ordered_json::parse(curriculum::to_json(r).dump()));
    frozen = frozen && r.backbone_unchanged;
  }
  j["backbone_unchanged"] = frozen;
  j["reports"] = arr;
  write_text(dir / "report.json", dump(j));
  out << dump(j);
}

struct PipelineArgs {
  std::string input;
  std::string mode = "image";
  std::string output;
  std::string flagged;
  bool bilingual = false;
};

void cmd_pipeline(const RunConfig& c, const PipelineArgs& a, std::ostream& out) {
  const auto mode = datapipe::parse_mode(a.mode);
  const auto records = datapipe::read_jsonl(a.input);
  std::unique_ptr<clients::TextClient> annotator, translator, segmenter_client;
  std::unique_ptr<datapipe::Segmenter> segmenter;
  if (c.clients.mock) {
    annotator = std::make_unique<datapipe::MockAnnotator>();
    translator = std::make_unique<datapipe::MockTranslator>();
    segmenter = std::make_unique<datapipe::MockSegmenter>(c.pipeline.segment_window);
  } else {
    // Only the clients this run calls need an endpoint.
    annotator = std::make_unique<clients::HttpClient>(c.clients.annotator);
    translator = a.bilingual ? std::unique_ptr<clients::TextClient>(
                                   std::make_unique<clients::HttpClient>(c.clients.translator))
                             : std::make_unique<datapipe::MockTranslator>();
    if (mode == datapipe::Mode::stream) {
      segmenter_client = std::make_unique<clients::HttpClient>(c.clients.segmenter);
      segmenter = std::make_unique<datapipe::TextSegmenter>(*segmenter_client);
    } else {
      segmenter = std::make_unique<datapipe::MockSegmenter>(c.pipeline.segment_window);
    }
  }
  datapipe::PipelineOptions opts;
  opts.mode = mode;
  opts.bilingual = a.bilingual;
  opts.keyframes = c.pipeline.keyframes;
  opts.media = datapipe::MediaSource(c.pipeline.media_root, c.pipeline.frame_side);
  const auto result = datapipe::run_pipeline(records, opts, {*annotator, *translator, *segmenter});
  write_text(a.output, datapipe::to_jsonl(result.kept));
  const std::string flagged_path = a.flagged.empty() ? a.output + ".flagged.jsonl" : a.flagged;
  write_text(flagged_path, datapipe::to_jsonl(result.flagged));
  nlohmann::ordered_json j{{"input", records.size()},
                           {"kept", result.kept.size()},
                           {"flagged", result.flagged.size()},
                           {"output", a.output},
                           {"flagged_output", flagged_path}};
  out << j.dump() << "\n";
}

struct EvalArgs {
  std::string pred;
  std::string ref;
  std::string metrics = "rouge_l,meteor_lite,cider_d";
  std::string output;
};

void cmd_eval(const RunConfig& c, const EvalArgs& a, std::ostream& out) {
  std::vector<std::string> names;
  for (auto n : split_list(a.metrics)) {
    std::replace(n.begin(), n.end(), '-', '_');
    names.push_back(n);
  }
  if (names.empty()) throw ConfigError("no metrics requested");
  const auto samples = align_eval(read_text(a.pred), read_text(a.ref));
  std::unique_ptr<metrics::JudgeClient> judge;
  std::unique_ptr<clients::TextClient> http;
  if (std::find(names.begin(), names.end(), "g_stdc") != names.end()) {
    if (c.clients.mock) {
      judge = std::make_unique<metrics::MockJudge>();
    } else {
      http = std::make_unique<clients::HttpClient>(c.clients.judge);
      judge = std::make_unique<metrics::TextJudge>(*http);
    }
  }
  const std::string report = dump(metrics::evaluate(samples, names, judge.get()));
  if (!a.output.empty()) write_text(a.output, report);
  out << report;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Region-level perception and captioning at desk scale", "pam"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Run configuration JSON");
  app.add_option("--seed", g.seed, "Override every seed in the configuration");
  app.add_flag("--mock-clients", g.mock_clients, "Use deterministic mock clients");

  PerceiveArgs pa;
  auto* perceive = app.add_subcommand("perceive", "Describe a prompted region in an image or video");
  perceive->add_option("--media", pa.media, "synthetic:<seed>, a PNG file or a directory of PNG frames")
      ->required();
  perceive->add_option("--frames", pa.frames, "Frame count for synthetic media")->capture_default_str();
  perceive->add_option("--prompt", pa.prompt, "Prompt JSON, e.g. {\"kind\":\"point\",\"coords\":[0.5,0.5]}")
      ->required();
  perceive->add_option("--task", pa.task, "category | explanation | caption")->capture_default_str();
  perceive->add_option("--max-len", pa.max_len, "Generation cap in tokens");
  perceive->add_option("--checkpoint", pa.checkpoint, "Weights written by train");

  StreamArgs sa;
  auto* stream = app.add_subcommand("stream", "Describe a region clip by clip");
  stream->add_option("--media", sa.media, "synthetic:<seed> or a directory of PNG frames")->required();
  stream->add_option("--frames", sa.frames, "Frame count for synthetic media");
  stream->add_option("--prompt", sa.prompt, "Prompt JSON on the first frame")->required();
  stream->add_option("--timestamps", sa.timestamps, "Comma-separated decode times in seconds")
      ->required();
  stream->add_option("--fps", sa.fps, "Frame rate");
  stream->add_option("--max-len", sa.max_len, "Generation cap in tokens per clip");
  stream->add_option("--checkpoint", sa.checkpoint, "Weights written by train");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Run the training curriculum");
  train->add_option("--stages", ta.stages, "Stage order (1,1.5,2 | 1,2 | 2 | all-in-one)")
      ->capture_default_str();
  train->add_option("--dataset", ta.dataset, "\"synthetic\" or an annotation JSONL path");
  train->add_option("--out", ta.out, "Checkpoint and report directory");

  PipelineArgs pp;
  auto* pipeline = app.add_subcommand("pipeline", "Refine annotation records");
  pipeline->add_option("--input", pp.input, "Annotation JSONL")->required();
  pipeline->add_option("--mode", pp.mode, "image | video | stream")->capture_default_str();
  pipeline->add_option("--out", pp.output, "Output JSONL")->required();
  pipeline->add_option("--flagged", pp.flagged, "Flagged JSONL (default <out>.flagged.jsonl)");
  pipeline->add_flag("--bilingual", pp.bilingual, "Add a Chinese copy of every English record");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score predictions against references");
  eval->add_option("--pred", ea.pred, "Prediction JSONL")->required();
  eval->add_option("--ref", ea.ref, "Reference JSONL")->required();
  eval->add_option("--metrics", ea.metrics, "Comma-separated metric names")->capture_default_str();
  eval->add_option("--out", ea.output, "Also write the report here");

  auto* config = app.add_subcommand("config", "Print the resolved configuration");
  config->require_subcommand(1);
  auto* config_dump = config->add_subcommand("dump", "Print the resolved configuration as JSON");
  auto* config_check = config->add_subcommand("check", "Validate the configuration");

  for (auto* sub : {perceive, stream, train, pipeline, eval, config, config_dump, config_check}) {
    sub->fallthrough();
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kConfig;
  }

  try {
    const RunConfig c = resolve(g);
    if (perceive->parsed()) {
      cmd_perceive(c, pa, out);
    } else if (stream->parsed()) {
      cmd_stream(c, sa, out);
    } else if (train->parsed()) {
      cmd_train(c, ta, out);
    } else if (pipeline->parsed()) {
      cmd_pipeline(c, pp, out);
    } else if (eval->parsed()) {
      cmd_eval(c, ea, out);
    } else if (config_dump->parsed()) {
      out << dump(to_json(c));
    } else if (config_check->parsed()) {
      out << "ok\n";
    }
  } catch (...) {
    return report_error(err);
  }
  return kOk;
}

}  // namespace pam::cli
