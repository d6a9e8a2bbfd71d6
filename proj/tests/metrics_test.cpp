// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "pam/errors.hpp"
#include "pam/hash.hpp"
#include "pam/metrics/metrics.hpp"
#include "test_util.hpp"

using namespace pam;
using namespace pam::metrics;

namespace {

// Direct evaluation of the CIDEr-D formula, written independently of the
// library: n-grams as token vectors, document frequency by scanning every
// reference set, no caching.
using Gram = std::vector<std::string>;

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::map<Gram, double> grams(const std::vector<std::string>& w, std::size_t n) {
  std::map<Gram, double> out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) out[Gram(w.begin() + i, w.begin() + i + n)] += 1;
  return out;
}

double oracle_cider(const std::vector<std::pair<std::string, std::vector<std::string>>>& corpus,
                    std::size_t which) {
  const double big_n = static_cast<double>(corpus.size());
  const auto hyp = words(corpus[which].first);
  if (hyp.empty()) return 0.0;
  auto df = [&](const Gram& g) {
    double count = 0;
    for (const auto& [p, refs] : corpus) {
      bool present = false;
      for (const auto& r : refs) present = present || grams(words(r), g.size()).count(g) > 0;
      count += present ? 1 : 0;
    }
    return count;
  };
  auto vec = [&](const std::vector<std::string>& w, std::size_t n) {
    std::map<Gram, double> v;
    for (const auto& [g, tf] : grams(w, n)) v[g] = tf * std::log(big_n / std::max(1.0, df(g)));
    return v;
  };
  double sum_refs = 0;
  for (const auto& r : corpus[which].second) {
    const auto rw = words(r);
    double sum_n = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto vh = vec(hyp, n), vr = vec(rw, n);
      double num = 0, nh = 0, nr = 0;
      for (const auto& [g, x] : vh) {
        nh += x * x;
        if (vr.count(g)) num += std::min(x, vr.at(g)) * vr.at(g);
      }
      for (const auto& [g, x] : vr) nr += x * x;
      double cos = num;
      if (nh > 0 && nr > 0) cos = num / (std::sqrt(nh) * std::sqrt(nr));
      const double d = static_cast<double>(hyp.size()) - static_cast<double>(rw.size());
      sum_n += cos * std::exp(-d * d / 72.0);
    }
    sum_refs += sum_n / 4;
  }
  return 10 * sum_refs / static_cast<double>(corpus[which].second.size());
}

std::vector<StreamEvalRecord> load_curation_fixture(std::vector<std::string>* expected) {
  std::ifstream in(test::fixture("curation_20.jsonl"));
  std::vector<StreamEvalRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    StreamEvalRecord r;
    r.id = j.at("id");
    for (const auto& e : j.at("events")) r.events.push_back(event_from_json(e));
    if (j.at("expect_keep").get<bool>()) expected->push_back(r.id);
    out.push_back(std::move(r));
  }
  return out;
}

struct CapturingJudge : JudgeClient {
  std::string prompt;
  std::string reply = "Score: 4";
  std::string judge(const std::string& p, const std::vector<Event>&,
                    const std::vector<Event>&) override {
    prompt = p;
    return reply;
  }
};

}  // namespace

TEST(Tokenize, NormalizationRules) {
  EXPECT_EQ(tokenize("Hello, World!  A-b").tokens,
            (std::vector<std::string>{"hello", "world", "a", "b"}));
  EXPECT_EQ(normalize("  The DOG's bowl. "), "the dog s bowl");
  EXPECT_EQ(normalize("中文 测试"), "中文 测试");
  std::mt19937_64 g(5);
  const std::string alphabet = "aB .,;:!?-'\"\t\nxyzQ";
  for (int i = 0; i < 300; ++i) {
    std::string s(g() % 30, ' ');
    for (char& c : s) c = alphabet[g() % alphabet.size()];
    EXPECT_EQ(normalize(normalize(s)), normalize(s));
  }
}

TEST(SemanticIou, Examples) {
  EXPECT_EQ(semantic_iou("dog", "dog"), 1.0);
  EXPECT_EQ(semantic_iou("brown dog", "dog"), 0.5);
  EXPECT_EQ(semantic_iou("cat", "dog"), 0.0);
  EXPECT_EQ(semantic_iou("", ""), 1.0);
  EXPECT_EQ(semantic_iou("", "dog"), 0.0);
  EXPECT_EQ(semantic_iou("Dog!", "dog"), 1.0);
  EXPECT_EQ(semantic_iou("a red car", "car red blue"), semantic_iou("car red blue", "a red car"));
}

TEST(SemanticSimilarity, Examples) {
  EXPECT_NEAR(semantic_similarity("a red car", "a red car"), 1.0, 1e-15);
  // Pick two tokens that land in different buckets.
  ASSERT_NE(fnv1a("cat") % 256, fnv1a("dog") % 256);
  EXPECT_EQ(semantic_similarity("cat", "dog"), 0.0);
  EXPECT_EQ(semantic_similarity("", "dog"), 0.0);
  EXPECT_EQ(semantic_similarity("", ""), 0.0);
  const Embedder constant = [](std::string_view) { return std::vector<double>{1.0, -1.0}; };
  EXPECT_NEAR(semantic_similarity("x", "y", constant), 1.0, 1e-15);
  const double s = semantic_similarity("red car", "blue car");
  EXPECT_GT(s, 0.0);
  EXPECT_LT(s, 1.0);
}

TEST(OcrAccuracy, Examples) {
  EXPECT_EQ(ocr_accuracy("Tack", "tack"), 1);
  EXPECT_EQ(ocr_accuracy("Tcct", "Tack"), 0);
  EXPECT_EQ(ocr_accuracy(" a ", "a"), 1);
  EXPECT_EQ(ocr_accuracy("a b", "ab"), 0);
}

TEST(RougeL, Examples) {
  EXPECT_EQ(rouge_l("the cat sat", "the cat sat"), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l("a b c", "a c"), 0.8);
  EXPECT_EQ(rouge_l("", "a c"), 0.0);
  EXPECT_EQ(rouge_l("x y", "a c"), 0.0);
}

TEST(MeteorLite, Examples) {
  EXPECT_DOUBLE_EQ(meteor_lite("a b c d e", "a b c d e"), 0.996);
  EXPECT_EQ(meteor_lite("x y", "a b"), 0.0);
  EXPECT_DOUBLE_EQ(meteor_lite("a c b", "a b c"), 0.5);
  // P = 1/2, R = 1, one chunk: F = 0.5/(0.45 + 0.1), penalty 0.5.
  EXPECT_DOUBLE_EQ(meteor_lite("a z", "a"), (0.5 / 0.55) * (1 - 0.5));
  // Leftmost-greedy: the repeated "a" takes the first free reference slot.
  EXPECT_DOUBLE_EQ(meteor_lite("a a", "a b a"),
                   (1.0 * (2.0 / 3) / (0.9 * 1.0 + 0.1 * (2.0 / 3))) * (1 - 0.5 * std::pow(2.0 / 2, 3)));
}

TEST(MetricProperties, RangesAndSelfScores) {
  std::mt19937_64 g(8);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f", "g"};
  auto sentence = [&](std::size_t len) {
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s += (i ? " " : "") + vocab[g() % vocab.size()];
    return s;
  };
  for (int i = 0; i < 300; ++i) {
    const std::string a = sentence(1 + g() % 8), b = sentence(g() % 8);
    for (double v : {semantic_iou(a, b), rouge_l(a, b), meteor_lite(a, b)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(semantic_similarity(a, b), -1.0);
    EXPECT_LE(semantic_similarity(a, b), 1.0 + 1e-12);
    EXPECT_EQ(semantic_iou(a, b), semantic_iou(b, a));
    EXPECT_EQ(rouge_l(a, a), 1.0);
    // Identical strings give one chunk, so the penalty is 0.5/len³.
    const double len = static_cast<double>(tokenize(a).tokens.size());
    EXPECT_NEAR(meteor_lite(a, a), 1.0 - 0.5 / (len * len * len), 1e-12);
  }
}

TEST(CiderD, SinglePairCorpusScoresZero) {
  const auto r = cider_d({{"a dog runs", {"a dog runs"}}});
  EXPECT_EQ(r.scores[0], 0.0);
  EXPECT_THROW(cider_d({}), InputError);
}

TEST(CiderD, ExactMatchInTwoPairCorpus) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> corpus = {
      {"a dog runs on grass", {"a dog runs on grass"}}, {"red car", {"blue boat sails"}}};
  const auto r = cider_d(corpus);
  // Every n-gram of pair 0 has df = 1 of N = 2 and the vectors coincide, so
  // each n contributes cosine 1 and the score is the 10× scale.
  EXPECT_NEAR(r.scores[0], 10.0, 1e-12);
  EXPECT_NEAR(r.scores[0], oracle_cider(corpus, 0), 1e-12);
  EXPECT_EQ(r.scores[1], 0.0);
  EXPECT_NEAR(r.mean, 5.0, 1e-12);
  const auto empty = cider_d({{"", {"x"}}, {"x", {"x"}}});
  EXPECT_EQ(empty.scores[0], 0.0);
}

TEST(CiderD, MatchesBruteForceOracleOnRandomCorpora) {
  std::mt19937_64 g(2024);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<std::string, std::vector<std::string>>> corpus;
    const std::size_t pairs = 2 + g() % 4;
    auto sentence = [&] {
      std::string s;
      const std::size_t len = g() % 8;
      for (std::size_t i = 0; i < len; ++i) s += (i ? " " : "") + vocab[g() % vocab.size()];
      return s;
    };
    for (std::size_t p = 0; p < pairs; ++p) {
      std::vector<std::string> refs;
      const std::size_t nr = 1 + g() % 3;
      for (std::size_t k = 0; k < nr; ++k) refs.push_back(sentence());
      corpus.emplace_back(sentence(), refs);
    }
    const auto r = cider_d(corpus);
    double mean = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      EXPECT_NEAR(r.scores[i], oracle_cider(corpus, i), 1e-9) << "trial " << trial << " pair " << i;
      mean += r.scores[i];
    }
    EXPECT_NEAR(r.mean, mean / static_cast<double>(corpus.size()), 1e-12);
  }
}

TEST(GStdc, PromptGoldenAndParsing) {
  CapturingJudge judge;
  const std::vector<Event> pred = {{2, 4, "b", "s"}, {0, 2, "a", "s"}};
  const std::vector<Event> ref = {{0, 1.5, "x", "s"}, {1.5, 4, "y", "s"}};
  EXPECT_EQ(g_stdc(pred, ref, judge), 4);
  EXPECT_EQ(judge.prompt, test::golden("templates/judge_prompt.txt"));

  EXPECT_EQ(parse_judge_score("Score: 3 because the events connect"), 3);
  EXPECT_EQ(parse_judge_score("0"), 0);
  EXPECT_EQ(parse_judge_score("5/5"), 5);
  try {
    parse_judge_score("great");
    FAIL() << "expected ProtocolError";
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.raw_reply(), "great");
  }
  EXPECT_THROW(parse_judge_score("Score: 7"), ProtocolError);
  EXPECT_THROW(parse_judge_score("Score: 10"), ProtocolError);
  judge.reply = "no idea";
  EXPECT_THROW(g_stdc(pred, ref, judge), ProtocolError);
}

TEST(GStdc, MockJudgeRule) {
  MockJudge mock;
  const std::vector<Event> two = {{0, 2, "a", "s"}, {2, 4, "b", "s"}};
  const std::vector<Event> four = {{0, 1, "a", "s"}, {1, 2, "b", "s"}, {2, 3, "c", "s"}, {3, 4, "d", "s"}};
  EXPECT_EQ(g_stdc(two, two, mock), 5);
  EXPECT_EQ(g_stdc(two, four, mock), 3);  // round(2.5) = 3
  EXPECT_EQ(g_stdc({}, four, mock), 0);
  EXPECT_EQ(g_stdc({}, {}, mock), 5);
}

TEST(Curation, ExampleRules) {
  EXPECT_TRUE(is_curated({"k", {{0, 2, "", "s"}, {2, 4, "", "s"}}}));
  EXPECT_FALSE(is_curated({"g", {{0, 2, "", "s"}, {3, 4, "", "s"}}}));
  EXPECT_FALSE(is_curated({"m", {{0, 2, "", "s"}, {2, 4, "", "t"}}}));
}

TEST(Curation, FixtureKeepSetAndIdempotence) {
  std::vector<std::string> expected;
  const auto records = load_curation_fixture(&expected);
  ASSERT_EQ(records.size(), 20u);
  const auto kept = curate_streaming_eval(records);
  std::vector<std::string> ids;
  for (const auto& r : kept) ids.push_back(r.id);
  EXPECT_EQ(ids, expected);
  EXPECT_EQ(curate_streaming_eval(kept).size(), kept.size());
}

TEST(Evaluate, ReportShape) {
  std::vector<EvalSample> samples = {
      {"k1", "a red car", {"a red car"}, {{0, 2, "a", "s"}}, {{0, 2, "a", "s"}}},
      {"k2", "blue boat", {"blue boat sails"}, {{0, 1, "a", "s"}}, {{0, 1, "a", "s"}, {1, 2, "b", "s"}}}};
  MockJudge judge;
  const auto rep = evaluate(samples, {"rouge_l", "g_stdc", "cider_d"}, &judge);
  EXPECT_EQ(rep.at("count"), 2);
  EXPECT_EQ(rep.at("samples")[0].at("rouge_l"), 1.0);
  EXPECT_TRUE(rep.at("samples")[1].at("g_stdc").is_number_integer());
  EXPECT_EQ(rep.at("samples")[1].at("g_stdc"), 3);
  EXPECT_DOUBLE_EQ(rep.at("aggregate").at("g_stdc").get<double>(), 4.0);
  EXPECT_THROW(evaluate(samples, {"bleu"}, &judge), ConfigError);
  EXPECT_THROW(evaluate(samples, {"g_stdc"}, nullptr), ConfigError);
}
