#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "embexp/compiler.hpp"
#include "embexp/metrics.hpp"
#include "embexp/oracle.hpp"
#include "embexp/toy_continual.hpp"

namespace embexp {

/// Bad configuration or command-line input. CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stage rejected its input or an artifact failed its manifest check.
/// Messages start with "[stage] ". CLI exit code 2.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& message);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Eval gold answers disagree with replay. CLI exit code 3.
class OracleError : public std::runtime_error {
 public:
  explicit OracleError(OracleReport report);
  const OracleReport& report() const { return report_; }

 private:
  OracleReport report_;
};

struct CollectConfig {
  SceneSize scene_size = SceneSize::Small;
  int scenes_per_activity = 2;
  int traces = 200;
  int min_agents = 1;
  int max_agents = 3;
  int min_steps = 8;
  int max_steps = 40;
};

struct PipelineConfig {
  std::filesystem::path catalog;
  std::filesystem::path activities;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  CollectConfig collect;
  PlannerConfig planner;
  PolicyBias policy;
  MixtureConfig mixture;
  std::array<int, kEvalTaskCount> eval_counts = EvalConfig{}.counts;
  double unseen_fraction = 0.2;
  DemoConfig demo;
  std::vector<double> lambdas{0.0, 0.5, 2.0};

  /// Checks ranges and that the catalog and library exist.
  void validate() const;
};

/// Data paths default to data/ under the working directory.
PipelineConfig default_config();

/// Reads a JSON config over the defaults. Relative data paths resolve against
/// the config file's directory; `out` stays relative to the working
/// directory. Unknown keys are errors.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig apply_config_json(PipelineConfig base, const nlohmann::json& doc,
                                 const std::filesystem::path& base_dir);
nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);

/// EMBEXP_SEED, EMBEXP_JOBS and EMBEXP_OUT, read through `getenv`.
PipelineConfig apply_env(PipelineConfig cfg, const std::function<const char*(const char*)>& getenv);

/// {file, records, bytes, fnv1a64} for a file already on disk.
nlohmann::ordered_json file_entry(const std::filesystem::path& path, std::size_t records);

/// Hash over every regular file below `dir`: relative path and bytes, in
/// sorted path order.
std::string artifact_tree_hash(const std::filesystem::path& dir);

struct CollectResult {
  ExperienceSet experiences;
  nlohmann::ordered_json manifest;
};

struct CompileResult {
  TrainingSet train;
  EvalSuite eval;
  OracleReport oracle;
  nlohmann::ordered_json manifest;
};

/// Plans every seen activity on `scenes_per_activity` scenes and explores
/// `traces` random traces; writes experiences.jsonl and collect.manifest.json.
CollectResult cmd_collect(const PipelineConfig& cfg, std::ostream& log);

/// Reads `experiences` (default: out/experiences.jsonl), writes train.jsonl,
/// eval.jsonl, eval_sources.jsonl and compile.manifest.json. Throws
/// OracleError when replay disagrees with a gold answer.
CompileResult cmd_compile(const PipelineConfig& cfg, std::ostream& log,
                          const std::optional<std::filesystem::path>& experiences = std::nullopt);

/// Scores predictions against an eval file (default: out/eval.jsonl) and
/// writes out/scores.json.
std::vector<ScoreReport> cmd_score(const PipelineConfig& cfg, const std::filesystem::path& predictions,
                                   std::ostream& log,
                                   const std::optional<std::filesystem::path>& eval = std::nullopt);

/// Runs the toy continual-learning demo over cfg.lambdas; writes out/ewc_demo.json.
DemoReport cmd_ewc_demo(const PipelineConfig& cfg, std::ostream& log);

/// Rehashes every file listed in the manifests under cfg.out and replays the
/// eval gold answers. Throws StageError or OracleError.
void cmd_validate(const PipelineConfig& cfg, std::ostream& log);

}  // namespace embexp
