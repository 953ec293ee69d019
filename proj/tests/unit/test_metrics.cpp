#include <gtest/gtest.h>

#include <filesystem>

#include "embexp/metrics.hpp"
#include "fixtures.hpp"
#include "metric_oracle.hpp"

namespace embexp {
namespace {

TEST(Tokens, LowercaseAndStripPunctuation) {
  EXPECT_EQ(rouge_tokens("Walk to living room. Sit on sofa!"),
            (std::vector<std::string>{"walk", "to", "living", "room", "sit", "on", "sofa"}));
  EXPECT_TRUE(rouge_tokens("  ... ").empty());
}

TEST(RougeL, HandExamples) {
  EXPECT_EQ(rouge_l("walk to kitchen", "walk to living room"), 4.0 / 7.0);
  EXPECT_DOUBLE_EQ(rouge_l("Walk to kitchen.", "walk to kitchen"), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l("grab cup", "open fridge"), 0.0);
  EXPECT_DOUBLE_EQ(rouge_l("", ""), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l("", "walk"), 0.0);
  EXPECT_DOUBLE_EQ(rouge_l("walk", "."), 0.0);
}

TEST(LcsNormalized, HandExamples) {
  const std::vector<std::string> pred{"kitchen", "bedroom"};
  const std::vector<std::string> gold{"kitchen", "living room", "bedroom"};
  EXPECT_EQ(lcs_normalized(pred, gold), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(lcs_normalized(gold, gold), 1.0);
  EXPECT_DOUBLE_EQ(lcs_normalized(pred, std::vector<std::string>{"bathroom"}), 0.0);
  EXPECT_THROW(lcs_normalized({}, gold), MetricError);
  EXPECT_THROW(lcs_normalized(gold, {}), MetricError);
}

TEST(ParsePath, SplitsAndTrims) {
  EXPECT_EQ(parse_path("kitchen, Living Room ,bedroom"),
            (std::vector<std::string>{"kitchen", "living room", "bedroom"}));
  EXPECT_TRUE(parse_path(" , ").empty());
}

// Exhaustive over all sequences of length <= 5; the acceptance binary runs
// the same check up to length 6.
TEST(BruteForce, LcsRougeAndNormalizedMatchEnumeration) {
  const testing::SubsequenceOracle oracle(5);
  std::vector<std::vector<std::string>> toks;
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    toks.push_back(oracle.tokens(i));
    texts.push_back(join(toks.back(), " "));
  }
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    for (std::size_t j = 0; j < oracle.size(); ++j) {
      const int expect = oracle.lcs(i, j);
      ASSERT_EQ(lcs_length(toks[i], toks[j]), static_cast<std::size_t>(expect)) << texts[i] << " | " << texts[j];
      ASSERT_EQ(rouge_l(texts[i], texts[j]), testing::f1_from_lcs(expect, toks[i].size(), toks[j].size()))
          << texts[i] << " | " << texts[j];
      if (!toks[i].empty() && !toks[j].empty()) {
        const double norm = lcs_normalized(toks[i], toks[j]);
        ASSERT_EQ(norm, static_cast<double>(expect) / static_cast<double>(std::max(toks[i].size(), toks[j].size())));
        ASSERT_EQ(norm, lcs_normalized(toks[j], toks[i]));
      }
    }
  }
}

EvalExample example(std::string id, EvalTask task, std::string gold) {
  EvalExample e;
  e.id = std::move(id);
  e.task = task;
  e.scoring = eval_scoring(task);
  e.gold = std::move(gold);
  return e;
}

TEST(ScoreExample, PerRule) {
  const auto qa = example("a", EvalTask::HouseworkQa, "TV");
  EXPECT_EQ(score_example(qa, "  tv\n"), 1.0);
  EXPECT_EQ(score_example(qa, "sofa"), 0.0);
  const auto path = example("b", EvalTask::ObjectPathTrackingEval, "kitchen, living room, bedroom");
  EXPECT_EQ(score_example(path, "kitchen, bedroom"), 2.0 / 3.0);
  EXPECT_EQ(score_example(path, ""), 0.0);
  const auto plan = example("c", EvalTask::PlanGenVanillaSeen, "Walk to living room.");
  EXPECT_EQ(score_example(plan, "walk to kitchen"), 4.0 / 7.0);
}

TEST(ScorePredictions, MeansPerTaskAndErrors) {
  std::vector<EvalExample> eval;
  std::vector<Prediction> preds;
  for (int i = 0; i < 8; ++i) {
    eval.push_back(example("qa-" + std::to_string(i), EvalTask::CountingQa, std::to_string(i)));
    preds.push_back({eval.back().id, i == 3 ? "99" : std::to_string(i)});
  }
  eval.push_back(example("path-0", EvalTask::ObjectPathTrackingEval, "kitchen, bedroom"));
  preds.push_back({"path-0", "kitchen, bedroom"});

  const auto reports = score_predictions(preds, eval, 2);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].task, "counting_qa");
  EXPECT_EQ(reports[0].metric, "accuracy");
  EXPECT_DOUBLE_EQ(reports[0].value, 7.0 / 8.0);
  EXPECT_EQ(reports[0].n, 8);
  EXPECT_EQ(reports[1].metric, "lcs_norm");
  EXPECT_DOUBLE_EQ(reports[1].value, 1.0);

  auto missing = preds;
  missing.erase(missing.begin() + 2);
  try {
    score_predictions(missing, eval);
    FAIL();
  } catch (const MetricError& e) {
    EXPECT_NE(std::string(e.what()).find("qa-2"), std::string::npos);
  }
  auto extra = preds;
  extra.push_back({"ghost-1", "x"});
  EXPECT_THROW(score_predictions(extra, eval), MetricError);
  auto dup = preds;
  dup.push_back(preds[0]);
  EXPECT_THROW(score_predictions(dup, eval), MetricError);
}

EvalSuite choice_suite() {
  const auto split = split_library(testing::shipped_library(), 0.2, 0);
  EvalConfig cfg;
  cfg.counts = {0, 0, 0, 0, 200, 200, 200, 200, 0, 0, 0};
  cfg.seed = 5;
  return generate_eval_suite(testing::shipped_catalog(), split, cfg, 1);
}

TEST(ScoreFile, GoldAndShuffledChoices) {
  const auto suite = choice_suite();
  const auto dir = std::filesystem::temp_directory_path() / "embexp_metrics_test";
  std::filesystem::create_directories(dir);
  const auto eval_path = (dir / "eval.jsonl").string();
  write_text_file(eval_path, to_jsonl(std::span<const EvalExample>(suite.examples)));

  std::string gold, shuffled;
  Rng rng(17);
  for (const auto& e : suite.examples) {
    ASSERT_EQ(e.choices.size(), 4u);
    gold += nlohmann::json{{"id", e.id}, {"output", e.gold}}.dump() + "\n";
    shuffled += nlohmann::json{{"id", e.id}, {"output", rng.pick(e.choices)}}.dump() + "\n";
  }
  write_text_file((dir / "gold.jsonl").string(), gold);
  write_text_file((dir / "shuffled.jsonl").string(), shuffled);

  for (const auto& r : score_file((dir / "gold.jsonl").string(), eval_path)) EXPECT_DOUBLE_EQ(r.value, 1.0) << r.task;
  double hit = 0;
  int n = 0;
  for (const auto& r : score_file((dir / "shuffled.jsonl").string(), eval_path)) {
    hit += r.value * r.n;
    n += r.n;
  }
  EXPECT_EQ(n, 800);
  EXPECT_NEAR(hit / n, 0.25, 0.05);
  std::filesystem::remove_all(dir);
}

TEST(Reports, JsonAndTable) {
  const ScoreReport r{"housework_qa", "accuracy", 0.5, 4};
  EXPECT_EQ(to_json(r).dump(), R"({"task":"housework_qa","metric":"accuracy","value":0.5,"n":4})");
  const std::vector<ScoreReport> rs{r};
  EXPECT_NE(format_reports(rs).find("50.00"), std::string::npos);
}

}  // namespace
}  // namespace embexp
