// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pam/cli/cli.hpp"
#include "pam/datapipe/record.hpp"
#include "pam/errors.hpp"
#include "test_util.hpp"

namespace pam::cli {
namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result pam(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

const char* kTiny = R"({
  "model": {"grid": 8, "dim": 16, "mask_tokens": 2, "semantic_tokens": 2, "embed": 32, "decoder_layers": 1},
  "generate": {"max_len": 8},
  "train": {"samples": 4},
  "stages": {
    "1": {"stage": "1", "base_lr": 0.003, "batch_size": 4, "max_steps": 3},
    "1.5": {"stage": "1.5", "base_lr": 0.002, "batch_size": 4, "max_steps": 3},
    "2": {"stage": "2", "base_lr": 0.002, "batch_size": 4, "max_steps": 3}
  }
})";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    write(dir_ / "tiny.json", kTiny);
    config_ = (dir_ / "tiny.json").string();
  }
  test::TempDir dir_{"cli"};
  std::string config_;
  const std::string point_ = R"({"kind":"point","coords":[0.5,0.5]})";
};

TEST_F(Cli, HelpListsEveryFlag) {
  const auto top = pam({"--help"});
  EXPECT_EQ(top.code, 0);
  for (const char* flag : {"--config", "--seed", "--mock-clients", "perceive", "stream", "train",
                           "pipeline", "eval", "config"}) {
    EXPECT_NE(top.out.find(flag), std::string::npos) << flag;
  }
  const std::vector<std::pair<std::string, std::vector<std::string>>> subs{
      {"perceive", {"--media", "--frames", "--prompt", "--task", "--max-len", "--checkpoint"}},
      {"stream", {"--media", "--frames", "--prompt", "--timestamps", "--fps", "--max-len"}},
      {"train", {"--stages", "--dataset", "--out"}},
      {"pipeline", {"--input", "--mode", "--out", "--flagged", "--bilingual"}},
      {"eval", {"--pred", "--ref", "--metrics", "--out"}}};
  for (const auto& [sub, flags] : subs) {
    const auto r = pam({sub, "--help"});
    EXPECT_EQ(r.code, 0);
    for (const auto& f : flags) EXPECT_NE(r.out.find(f), std::string::npos) << sub << " " << f;
  }
  EXPECT_EQ(pam({}).code, kConfig);
  EXPECT_EQ(pam({"perceive", "--bogus"}).code, kConfig);
}

TEST_F(Cli, ConfigRoundTrip) {
  const auto first = pam({"--config", config_, "config", "dump"});
  ASSERT_EQ(first.code, 0) << first.err;
  write(dir_ / "dumped.json", first.out);
  const auto second = pam({"--config", (dir_ / "dumped.json").string(), "config", "dump"});
  EXPECT_EQ(second.out, first.out);
  EXPECT_EQ(config_from_json(nlohmann::json::parse(first.out)).model.grid, 8u);
  const auto defaults = pam({"config", "dump"});
  write(dir_ / "defaults.json", defaults.out);
  EXPECT_EQ(pam({"--config", (dir_ / "defaults.json").string(), "config", "dump"}).out, defaults.out);
}

TEST_F(Cli, ConfigRejectsUnknownKeys) {
  write(dir_ / "bad.json", R"({"model": {"grid": 8, "depth": 3}})");
  const auto r = pam({"--config", (dir_ / "bad.json").string(), "config", "check"});
  EXPECT_EQ(r.code, kConfig);
  EXPECT_NE(r.err.find("model.depth"), std::string::npos) << r.err;
  write(dir_ / "bad2.json", R"({"stages": {"3": {"stage": "2"}}})");
  EXPECT_EQ(pam({"--config", (dir_ / "bad2.json").string(), "config", "check"}).code, kConfig);
  write(dir_ / "bad3.json", R"({"model": {"grid": 6}})");
  EXPECT_EQ(pam({"--config", (dir_ / "bad3.json").string(), "config", "check"}).code, kConfig);
  EXPECT_EQ(pam({"--config", config_, "config", "check"}).code, 0);
}

TEST_F(Cli, EnvironmentOverridesEndpoints) {
  ::setenv(kEndpointEnv, "http://127.0.0.1:9/x", 1);
  const auto r = pam({"--config", config_, "config", "dump"});
  ::unsetenv(kEndpointEnv);
  const auto j = nlohmann::json::parse(r.out);
  for (const char* c : {"annotator", "translator", "segmenter", "judge"}) {
    EXPECT_EQ(j["clients"][c]["endpoint"], "http://127.0.0.1:9/x");
  }
}

TEST_F(Cli, PerceiveDeterministic) {
  const std::vector<std::string> args{"--config", config_, "perceive", "--media", "synthetic:0",
                                      "--prompt", point_, "--task", "category"};
  const auto a = pam(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(pam(args).out, a.out);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j["visual_tokens"], 16u);  // G=8 image: (8/2)^2
  EXPECT_EQ(j["semantic_tokens"], 2u);
  EXPECT_TRUE(j["mask"].contains("area"));
  EXPECT_TRUE(j["text"].is_string());
  auto seeded = args;
  seeded.insert(seeded.begin(), {"--seed", "5"});
  EXPECT_EQ(pam(seeded).out, pam(seeded).out);
}

TEST_F(Cli, PerceiveSixteenFrameBudget) {
  write(dir_ / "g64.json",
        R"({"model": {"grid": 64, "dim": 8, "mask_tokens": 2, "semantic_tokens": 2, "embed": 16, "decoder_layers": 1}})");
  const auto r = pam({"--config", (dir_ / "g64.json").string(), "perceive", "--media", "synthetic:3",
                      "--frames", "16", "--prompt", point_, "--max-len", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["visual_tokens"], 4864u);
}

TEST_F(Cli, PerceiveInputErrors) {
  EXPECT_EQ(pam({"--config", config_, "perceive", "--media", "synthetic:0", "--prompt", "{\"kind\":"}).code,
            kInput);
  EXPECT_EQ(pam({"--config", config_, "perceive", "--media", "synthetic:0", "--prompt",
                 R"({"kind":"point","coords":[1.5,0.5]})"})
                .code,
            kInput);
  EXPECT_EQ(pam({"--config", config_, "perceive", "--media", "synthetic:0", "--prompt", point_,
                 "--task", "poem"})
                .code,
            kInput);
  EXPECT_EQ(pam({"--config", config_, "perceive", "--media", (dir_ / "none.png").string(),
                 "--prompt", point_})
                .code,
            kInput);
}

TEST_F(Cli, PerceivePngFile) {
  write_png(dir_ / "frame.png", synthetic_image(1, 32, 32));
  const auto r = pam({"--config", config_, "perceive", "--media", (dir_ / "frame.png").string(),
                      "--prompt", point_});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["frames"], 1u);
}

TEST_F(Cli, StreamPartitions) {
  const std::vector<std::string> args{"--config", config_, "stream", "--media", "synthetic:2",
                                      "--frames", "8", "--fps", "2", "--timestamps", "1.5,3",
                                      "--prompt", point_};
  const auto r = pam(args);
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::vector<nlohmann::json> lines;
  while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
  // Two decode points plus the trailing frames after 3 s.
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_DOUBLE_EQ(lines[0]["t_start"], 0.0);
  for (std::size_t i = 1; i < lines.size(); ++i) EXPECT_EQ(lines[i]["t_start"], lines[i - 1]["t_end"]);
  EXPECT_DOUBLE_EQ(lines.back()["t_end"], 4.0);
  EXPECT_EQ(pam(args).out, r.out);

  const auto two = pam({"--config", config_, "stream", "--media", "synthetic:2", "--frames", "8",
                        "--fps", "2", "--timestamps", "1.5,4", "--prompt", point_});
  EXPECT_EQ(std::count(two.out.begin(), two.out.end(), '\n'), 2);

  EXPECT_EQ(pam({"--config", config_, "stream", "--media", "synthetic:2", "--frames", "8",
                 "--timestamps", "3,1", "--prompt", point_})
                .code,
            kInput);
}

TEST_F(Cli, TrainCurriculumAndAblation) {
  const auto r = pam({"--config", config_, "train", "--out", (dir_ / "ck").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["backbone_unchanged"], true);
  ASSERT_EQ(j["reports"].size(), 3u);
  EXPECT_EQ(j["reports"][0]["stage"], "1");
  EXPECT_EQ(j["reports"][1]["stage"], "1.5");
  EXPECT_EQ(j["reports"][2]["stage"], "2");
  for (const char* f : {"stage_1.pamw", "stage_1.5.pamw", "stage_2.pamw", "report.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir_ / "ck" / f)) << f;
  }
  const auto again = pam({"--config", config_, "train", "--out", (dir_ / "ck2").string()});
  auto strip = [](std::string s, const std::string& a, const std::string& b) {
    for (std::size_t p; (p = s.find(a)) != std::string::npos;) s.replace(p, a.size(), b);
    return s;
  };
  EXPECT_EQ(strip(again.out, (dir_ / "ck2").string(), "X"), strip(r.out, (dir_ / "ck").string(), "X"));

  const auto aio = pam({"--config", config_, "train", "--stages", "all-in-one", "--out",
                        (dir_ / "aio").string()});
  ASSERT_EQ(aio.code, 0) << aio.err;
  const auto a = nlohmann::json::parse(aio.out);
  ASSERT_EQ(a["reports"].size(), 1u);
  EXPECT_EQ(a["backbone_unchanged"], true);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "aio" / "stage_all-in-one.pamw"));

  EXPECT_EQ(pam({"--config", config_, "train", "--stages", "2,1"}).code, kConfig);

  // Trained weights load back into perceive.
  const auto p = pam({"--config", config_, "perceive", "--media", "synthetic:0", "--prompt", point_,
                      "--checkpoint", (dir_ / "ck" / "stage_2.pamw").string()});
  EXPECT_EQ(p.code, 0) << p.err;
}

TEST_F(Cli, TrainFromAnnotations) {
  std::string text = "{\"schema\":\"pam.annotation\",\"version\":1}\n";
  for (int i = 0; i < 3; ++i) {
    text += R"({"media_id":"synthetic:)" + std::to_string(i) +
            R"(","modality":"image","prompt":{"kind":"box","coords":[0.1,0.1,0.6,0.6]},"task":"caption","language":"en","responses":{"caption":"a mug"}})" +
            "\n";
  }
  text += R"({"media_id":"synthetic:9","modality":"video","frames":8,"fps":2,"prompt":{"kind":"mask","grid":4,"mask":[1,1,0,0,1,1,0,0,0,0,0,0,0,0,0,0]},"task":"stream","language":"en","responses":{},"events":[{"t0":0,"t1":2,"text":"walks"},{"t0":2,"t1":4,"text":"stops"}]})";
  text += "\n";
  write(dir_ / "train.jsonl", text);
  const auto r = pam({"--config", config_, "train", "--stages", "1,2", "--dataset",
                      (dir_ / "train.jsonl").string(), "--out", (dir_ / "ck").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["reports"].size(), 2u);

  const Model model(ModelConfig{8, 16, 2, 2, 32, 1});
  const auto samples =
      samples_from_records(model, datapipe::read_jsonl(dir_ / "train.jsonl"), 3);
  ASSERT_EQ(samples.size(), 5u);
  EXPECT_EQ(samples[3].response, "walks");
  EXPECT_FALSE(samples[3].prev_description.has_value());
  EXPECT_EQ(samples[4].prev_description, std::optional<std::string>("walks"));
  EXPECT_EQ(samples[4].roles.back(), projector::FrameRole::clip_final);
}

TEST_F(Cli, PipelineDeterministicAndBilingual) {
  const std::string in = test::fixture("pipeline_50.jsonl").string();
  auto go = [&](const std::string& out, bool bilingual) {
    std::vector<std::string> args{"--mock-clients", "pipeline", "--input", in,   "--mode",
                                  "video",          "--out",    (dir_ / out).string()};
    if (bilingual) args.push_back("--bilingual");
    return pam(args);
  };
  ASSERT_EQ(go("a.jsonl", false).code, 0);
  ASSERT_EQ(go("b.jsonl", false).code, 0);
  EXPECT_EQ(test::read_file(dir_ / "a.jsonl"), test::read_file(dir_ / "b.jsonl"));
  const auto bi = go("bi.jsonl", true);
  ASSERT_EQ(bi.code, 0) << bi.err;
  EXPECT_EQ(datapipe::read_jsonl(dir_ / "bi.jsonl").size(), 100u);
  EXPECT_EQ(datapipe::read_jsonl(dir_ / "bi.jsonl.flagged.jsonl").size(), 0u);
}

TEST_F(Cli, PipelineTenRecordsBilingual) {
  std::string text = "{\"schema\":\"pam.annotation\",\"version\":1}\n";
  for (int i = 0; i < 10; ++i) {
    text += R"({"media_id":"synthetic:)" + std::to_string(i) +
            R"(","modality":"image","prompt":{"kind":"point","coords":[0.5,0.5]},"task":"category","language":"en","responses":{"original":"mug"}})" +
            "\n";
  }
  write(dir_ / "ten.jsonl", text);
  const auto r = pam({"--mock-clients", "pipeline", "--input", (dir_ / "ten.jsonl").string(),
                      "--out", (dir_ / "o.jsonl").string(), "--bilingual"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(datapipe::read_jsonl(dir_ / "o.jsonl").size(), 20u);
}

TEST_F(Cli, PipelineSchemaErrorNamesLine) {
  std::string text = "{\"schema\":\"pam.annotation\",\"version\":1}\n";
  text += R"({"media_id":"synthetic:1","modality":"image","prompt":{"kind":"point","coords":[0.5,0.5]},"task":"category","language":"en","responses":{"original":"mug"}})";
  text += "\n{\"media_id\":\"synthetic:2\",\"modality\":\"image\"}\n";
  write(dir_ / "bad.jsonl", text);
  const auto r = pam({"--mock-clients", "pipeline", "--input", (dir_ / "bad.jsonl").string(),
                      "--out", (dir_ / "o.jsonl").string()});
  EXPECT_EQ(r.code, kInput);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(Cli, PipelineLiveClientFailureIsFlagged) {
  std::string text = "{\"schema\":\"pam.annotation\",\"version\":1}\n";
  text += R"({"media_id":"synthetic:1","modality":"image","prompt":{"kind":"point","coords":[0.5,0.5]},"task":"category","language":"en","responses":{"original":"mug"}})";
  text += "\n";
  write(dir_ / "one.jsonl", text);
  write(dir_ / "live.json", R"({"clients": {"annotator": {"endpoint": "http://127.0.0.1:1/x", "timeout_seconds": 1, "retries": 0}}})");
  const auto r = pam({"--config", (dir_ / "live.json").string(), "pipeline", "--input",
                      (dir_ / "one.jsonl").string(), "--out", (dir_ / "o.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto flagged = datapipe::read_jsonl(dir_ / "o.jsonl.flagged.jsonl");
  ASSERT_EQ(flagged.size(), 1u);
  EXPECT_EQ(flagged[0].flags, std::vector<std::string>{"client_error"});
}

TEST_F(Cli, Eval) {
  write(dir_ / "p.jsonl",
        "{\"id\":\"a\",\"text\":\"a red car turns left\"}\n"
        "{\"id\":\"b\",\"text\":\"dog\",\"events\":[{\"t0\":0,\"t1\":2,\"text\":\"dog runs\"}]}\n");
  write(dir_ / "r.jsonl",
        "{\"id\":\"b\",\"text\":\"dog\",\"events\":[{\"t0\":0,\"t1\":2,\"text\":\"dog runs fast\"}]}\n"
        "{\"id\":\"a\",\"text\":\"a red car turns left\"}\n");
  const auto r = pam({"eval", "--pred", (dir_ / "p.jsonl").string(), "--ref",
                      (dir_ / "r.jsonl").string(), "--metrics", "rouge_l"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(r.out)["aggregate"]["rouge_l"].get<double>(), 1.0);

  const auto g = pam({"--mock-clients", "eval", "--pred", (dir_ / "p.jsonl").string(), "--ref",
                      (dir_ / "r.jsonl").string(), "--metrics", "g-stdc"});
  ASSERT_EQ(g.code, 0) << g.err;
  for (const auto& s : nlohmann::json::parse(g.out)["samples"]) {
    EXPECT_TRUE(s["g_stdc"].is_number_integer()) << s;
  }

  write(dir_ / "r2.jsonl", "{\"id\":\"a\",\"text\":\"x\"}\n");
  const auto m = pam({"eval", "--pred", (dir_ / "p.jsonl").string(), "--ref",
                      (dir_ / "r2.jsonl").string()});
  EXPECT_EQ(m.code, kInput);
  EXPECT_NE(m.err.find("key b"), std::string::npos) << m.err;
  EXPECT_EQ(pam({"eval", "--pred", (dir_ / "p.jsonl").string(), "--ref", (dir_ / "r.jsonl").string(),
                 "--metrics", "bleu"})
                .code,
            kConfig);
}

TEST(ExitCodes, Mapping) {
  auto code = [](auto thrower) {
    std::ostringstream err;
    try {
      thrower();
    } catch (...) {
      return report_error(err);
    }
    return -1;
  };
  EXPECT_EQ(code([] { throw ConfigError("x"); }), kConfig);
  EXPECT_EQ(code([] { throw InputError("x"); }), kInput);
  EXPECT_EQ(code([] { throw NumericError("x"); }), kNumeric);
  EXPECT_EQ(code([] { throw ClientError("x"); }), kClient);
  EXPECT_EQ(code([] { throw ProtocolError("x", "raw"); }), kClient);
  EXPECT_EQ(code([] { throw std::runtime_error("x"); }), kFailure);
}

}  // namespace
}  // namespace pam::cli
