#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <sstream>

#include "embexp/pipeline.hpp"
#include "embexp/util.hpp"
#include "fixtures.hpp"

namespace embexp {
namespace {

namespace fs = std::filesystem;
using testing::data_path;

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("embexp_pipeline_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

PipelineConfig small_config(const fs::path& out) {
  auto cfg = default_config();
  cfg.catalog = data_path("catalog.json");
  cfg.activities = data_path("activities.jsonl");
  cfg.out = out;
  cfg.seed = 4;
  cfg.collect.scenes_per_activity = 1;
  cfg.collect.traces = 24;
  cfg.eval_counts = {2, 2, 2, 2, 15, 15, 12, 12, 8, 6, 6};
  cfg.demo.pretrain_steps = 60;
  cfg.demo.finetune_steps = 40;
  return cfg;
}

TEST(Config, DefaultsMatchLibraryDefaults) {
  const auto cfg = default_config();
  EXPECT_EQ(cfg.eval_counts, EvalConfig{}.counts);
  EXPECT_EQ(cfg.planner.simulations_per_step, PlannerConfig{}.simulations_per_step);
  EXPECT_EQ(cfg.out, fs::path("out"));
  EXPECT_DOUBLE_EQ(cfg.unseen_fraction, 0.2);
}

TEST(Config, ShippedFileEqualsDefaults) {
  const auto path = fs::path(EMBEXP_DATA_DIR).parent_path() / "configs" / "default.json";
  const auto cfg = load_config(path);
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(config_to_json(cfg), config_to_json(default_config()));
  EXPECT_TRUE(fs::equivalent(cfg.catalog, data_path("catalog.json")));
}

TEST(Config, OverridesAndRelativePaths) {
  const auto doc = nlohmann::json::parse(R"({
    "catalog": "c.json", "activities": "/abs/lib.jsonl", "seed": 9,
    "planner": {"step_penalty": "-1/5", "reward_satisfy": 3},
    "mixture": {"alpha": {"counting": 0.25}},
    "eval": {"counts": {"counting_qa": 7}},
    "ewc_demo": {"lambdas": [1.0]}
  })");
  const auto cfg = apply_config_json(default_config(), doc, "/base");
  EXPECT_EQ(cfg.catalog, fs::path("/base/c.json"));
  EXPECT_EQ(cfg.activities, fs::path("/abs/lib.jsonl"));
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.planner.step_penalty, Rational(-1, 5));
  EXPECT_EQ(cfg.planner.reward_satisfy, Rational(3));
  EXPECT_DOUBLE_EQ(cfg.mixture.weight(TrainTask::Counting), 0.25);
  EXPECT_DOUBLE_EQ(cfg.mixture.weight(TrainTask::PlanGeneration), 1.0);
  EXPECT_EQ(cfg.eval_counts[static_cast<std::size_t>(EvalTask::CountingQa)], 7);
  EXPECT_EQ(cfg.lambdas, std::vector<double>{1.0});
}

TEST(Config, RejectsUnknownAndMistypedKeys) {
  auto apply = [](const char* text) {
    return apply_config_json(default_config(), nlohmann::json::parse(text), ".");
  };
  try {
    apply(R"({"planner": {"uct": 2}})");
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("planner.uct"), std::string::npos) << e.what();
  }
  EXPECT_THROW(apply(R"({"eval": {"counts": {"counting": 3}}})"), ConfigError);
  EXPECT_THROW(apply(R"({"seed": "zero"})"), ConfigError);
  EXPECT_THROW(apply(R"({"collect": {"scene_size": "huge"}})"), ConfigError);
  EXPECT_THROW(apply(R"([1, 2])"), ConfigError);
}

TEST(Config, ValidateChecksFilesAndRanges) {
  auto cfg = small_config("unused");
  EXPECT_NO_THROW(cfg.validate());
  auto missing = cfg;
  missing.catalog = "/nonexistent/catalog.json";
  EXPECT_THROW(missing.validate(), ConfigError);
  auto agents = cfg;
  agents.collect.min_agents = 4;
  EXPECT_THROW(agents.validate(), ConfigError);
  auto frac = cfg;
  frac.unseen_fraction = 1.0;
  EXPECT_THROW(frac.validate(), ConfigError);
}

TEST(Config, EnvironmentOverrides) {
  const std::map<std::string, std::string> env{{"EMBEXP_SEED", "17"}, {"EMBEXP_JOBS", "3"}, {"EMBEXP_OUT", "/tmp/x"}};
  auto lookup = [&](const char* name) -> const char* {
    const auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  const auto cfg = apply_env(default_config(), lookup);
  EXPECT_EQ(cfg.seed, 17u);
  EXPECT_EQ(cfg.jobs, 3u);
  EXPECT_EQ(cfg.out, fs::path("/tmp/x"));
  EXPECT_THROW(apply_env(default_config(), [](const char*) { return "12abc"; }), ConfigError);
  const auto none = apply_env(default_config(), [](const char*) -> const char* { return nullptr; });
  EXPECT_EQ(config_to_json(none), config_to_json(default_config()));
}

TEST(Pipeline, EndToEndIsDeterministicAcrossJobs) {
  TempDir a("a"), b("b");
  std::ostringstream log;
  std::string hashes[2];
  for (int run = 0; run < 2; ++run) {
    auto cfg = small_config(run == 0 ? a.path() : b.path());
    cfg.jobs = run == 0 ? 1 : 3;
    const auto collected = cmd_collect(cfg, log);
    EXPECT_EQ(collected.experiences.traces.size(), 24u);
    EXPECT_GE(collected.manifest.at("success_rate").get<double>(), 0.9);
    const auto compiled = cmd_compile(cfg, log);
    EXPECT_TRUE(compiled.oracle.ok());
    EXPECT_GT(compiled.oracle.total(), 0);
    cmd_ewc_demo(cfg, log);
    hashes[run] = artifact_tree_hash(cfg.out);
  }
  EXPECT_EQ(hashes[0], hashes[1]);
  for (const char* f : {"experiences.jsonl", "collect.manifest.json", "train.jsonl", "eval.jsonl",
                        "eval_sources.jsonl", "compile.manifest.json", "ewc_demo.json"}) {
    EXPECT_TRUE(fs::exists(a.path() / f)) << f;
  }
  const auto eval = read_eval_jsonl(read_text_file((a.path() / "eval.jsonl").string()));
  std::map<EvalTask, int> counts;
  for (const auto& e : eval) ++counts[e.task];
  for (std::size_t i = 0; i < kEvalTaskCount; ++i) {
    EXPECT_EQ(counts[static_cast<EvalTask>(i)], small_config("x").eval_counts[i]);
  }
  EXPECT_NE(log.str().find("[collect]"), std::string::npos);
  EXPECT_NE(log.str().find("[compile] oracle checked"), std::string::npos);
}

TEST(Pipeline, ManifestEntriesHashTheirFiles) {
  TempDir d("manifest");
  std::ostringstream log;
  auto cfg = small_config(d.path());
  const auto r = cmd_collect(cfg, log);
  const auto& entry = r.manifest.at("files").at(0);
  const auto bytes = read_text_file((d.path() / "experiences.jsonl").string());
  EXPECT_EQ(entry.at("fnv1a64").get<std::string>(), hex64(fnv1a64(bytes)));
  EXPECT_EQ(entry.at("bytes").get<std::size_t>(), bytes.size());
  EXPECT_EQ(entry.at("records").get<std::size_t>(), r.experiences.plans.size() + r.experiences.traces.size());
  EXPECT_TRUE(r.manifest.at("failures").is_array());
}

TEST(Pipeline, SeedChangesArtifacts) {
  TempDir a("seed_a"), b("seed_b");
  std::ostringstream log;
  auto ca = small_config(a.path());
  auto cb = small_config(b.path());
  cb.seed = 5;
  cmd_collect(ca, log);
  cmd_collect(cb, log);
  EXPECT_NE(artifact_tree_hash(a.path()), artifact_tree_hash(b.path()));
}

TEST(Pipeline, CompileRejectsEmptyStreamAndWarnsWithoutTraces) {
  TempDir d("empty");
  std::ostringstream log;
  auto cfg = small_config(d.path());
  write_text_file((d.path() / "experiences.jsonl").string(), "");
  try {
    cmd_compile(cfg, log);
    FAIL() << "empty stream accepted";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "compile");
    EXPECT_EQ(std::string(e.what()).rfind("[compile] ", 0), 0u) << e.what();
  }

  cfg.collect.traces = 0;
  cmd_collect(cfg, log);
  const auto r = cmd_compile(cfg, log);
  EXPECT_NE(log.str().find("warning: no exploration traces"), std::string::npos);
  for (const auto& e : r.train.examples) {
    EXPECT_NE(e.task, TrainTask::Counting);
    EXPECT_NE(e.task, TrainTask::PathTracking);
  }
}

TEST(Pipeline, ValidateDetectsTamperingAndWrongGold) {
  TempDir d("validate");
  std::ostringstream log;
  auto cfg = small_config(d.path());
  cmd_collect(cfg, log);
  cmd_compile(cfg, log);
  EXPECT_NO_THROW(cmd_validate(cfg, log));

  const auto train = (d.path() / "train.jsonl").string();
  const auto original = read_text_file(train);
  write_text_file(train, original + "\n");
  EXPECT_THROW(cmd_validate(cfg, log), StageError);
  write_text_file(train, original);

  // Corrupt a counting gold and drop the manifest that would catch it first.
  const auto eval_path = (d.path() / "eval.jsonl").string();
  auto eval = read_eval_jsonl(read_text_file(eval_path));
  for (auto& e : eval) {
    if (e.task == EvalTask::CountingQa) {
      e.gold = std::to_string(std::stoi(e.gold) + 2);
      break;
    }
  }
  write_text_file(eval_path, to_jsonl(std::span<const EvalExample>(eval)));
  fs::remove(d.path() / "compile.manifest.json");
  try {
    cmd_validate(cfg, log);
    FAIL() << "wrong gold accepted";
  } catch (const OracleError& e) {
    EXPECT_EQ(e.report().mismatches.size(), 1u);
  }
}

TEST(Pipeline, ScoreWritesReportsAndNamesMissingIds) {
  TempDir d("score");
  std::ostringstream log;
  auto cfg = small_config(d.path());
  cfg.collect.traces = 0;
  cmd_collect(cfg, log);
  cmd_compile(cfg, log);
  const auto eval = read_eval_jsonl(read_text_file((d.path() / "eval.jsonl").string()));
  nlohmann::ordered_json line;
  std::string gold, partial;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    line = {{"id", eval[i].id}, {"output", eval[i].gold}};
    gold += line.dump() + "\n";
    if (i != 3) partial += line.dump() + "\n";
  }
  write_text_file((d.path() / "gold.jsonl").string(), gold);
  write_text_file((d.path() / "partial.jsonl").string(), partial);
  const auto reports = cmd_score(cfg, d.path() / "gold.jsonl", log);
  EXPECT_EQ(reports.size(), kEvalTaskCount);
  for (const auto& r : reports) EXPECT_DOUBLE_EQ(r.value, 1.0) << r.task;
  EXPECT_TRUE(fs::exists(d.path() / "scores.json"));
  try {
    cmd_score(cfg, d.path() / "partial.jsonl", log);
    FAIL() << "missing id accepted";
  } catch (const StageError& e) {
    EXPECT_NE(std::string(e.what()).find(eval[3].id), std::string::npos) << e.what();
  }
}

TEST(Pipeline, EwcDemoReportsFourRegimes) {
  TempDir d("demo");
  std::ostringstream log;
  auto cfg = small_config(d.path());
  cfg.lambdas = {0.0, 1.0};
  const auto r = cmd_ewc_demo(cfg, log);
  ASSERT_EQ(r.regimes.size(), 4u);
  ASSERT_EQ(r.lambda_sweep.size(), 2u);
  EXPECT_EQ(r.lambda_sweep[0].theta, r.regimes[2].theta);
  const auto doc = nlohmann::json::parse(read_text_file((d.path() / "ewc_demo.json").string()));
  EXPECT_EQ(doc.at("regimes").size(), 4u);
}

TEST(TreeHash, DependsOnNamesAndBytes) {
  TempDir d("tree");
  write_text_file((d.path() / "a.txt").string(), "x");
  fs::create_directories(d.path() / "sub");
  write_text_file((d.path() / "sub" / "b.txt").string(), "y");
  const auto h0 = artifact_tree_hash(d.path());
  EXPECT_EQ(h0, artifact_tree_hash(d.path()));
  fs::rename(d.path() / "a.txt", d.path() / "c.txt");
  const auto h1 = artifact_tree_hash(d.path());
  EXPECT_NE(h0, h1);
  write_text_file((d.path() / "c.txt").string(), "z");
  EXPECT_NE(h1, artifact_tree_hash(d.path()));
}

}  // namespace
}  // namespace embexp
