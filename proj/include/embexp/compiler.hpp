#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "embexp/experience.hpp"

namespace embexp {

enum class TrainTask : std::uint8_t { PlanGeneration, ActivityRecognition, Counting, PathTracking };
inline constexpr std::size_t kTrainTaskCount = 4;
std::string_view train_task_name(TrainTask t);
TrainTask parse_train_task(std::string_view name);

enum class EvalTask : std::uint8_t {
  PlanGenVanillaSeen,
  PlanGenVanillaUnseen,
  PlanGenConfusingSeen,
  PlanGenConfusingUnseen,
  HouseworkQa,
  NegationHouseworkQa,
  ActivityRecognitionQa,
  ActivityInferenceQa,
  CountingQa,
  ObjectPathTrackingEval,
  ObjectLocationQa,
};
inline constexpr std::size_t kEvalTaskCount = 11;
std::string_view eval_task_name(EvalTask t);
EvalTask parse_eval_task(std::string_view name);

enum class Scoring : std::uint8_t { RougeL, Accuracy, Lcs };
std::string_view scoring_name(Scoring s);
Scoring parse_scoring(std::string_view name);
Scoring eval_scoring(EvalTask t);
int eval_shots(EvalTask t);

struct MixtureConfig {
  std::array<double, kTrainTaskCount> alpha{1.0, 0.7, 1.0, 1.0};
  int exemplars_per_prompt = 2;
  /// Keep the counting template's original spellings ("Ther are", "itmes").
  bool verbatim_templates = true;
  std::uint64_t seed = 0;

  double weight(TrainTask t) const { return alpha[static_cast<std::size_t>(t)]; }
  void validate() const;
};

/// A prompt/answer pair whose concatenation is one complete exemplar.
struct Exemplar {
  std::string prompt;
  std::string answer;
  std::string text() const { return prompt + answer; }
};

namespace templates {

inline constexpr std::string_view kCountingInstruction =
    "Given a sequence of actions in a house, and a question about what items are located in a "
    "specific place. Answer the number of items and list the items.";

Exemplar plan_generation(std::string_view activity, std::string_view condition, std::string_view plan);
Exemplar housework_qa(std::string_view activity, std::string_view answer);
Exemplar negation_qa(std::string_view activity, std::string_view answer);
Exemplar activity_recognition(std::string_view plan, std::string_view answer);
Exemplar activity_inference(std::string_view state, std::string_view answer);
/// `relation` is "on" for surfaces, "in" for containers.
Exemplar counting(std::string_view movement, std::string_view location, int number,
                  std::string_view items, bool verbatim, std::string_view relation = "on");
Exemplar counting_qa(std::string_view movement, std::string_view location, int number,
                     std::string_view relation = "on");
Exemplar path_tracking(std::string_view movement, std::string_view object, std::string_view path);
Exemplar object_location(std::string_view movement, std::string_view object,
                         std::string_view preposition, std::string_view reference_room,
                         std::string_view answer);

/// Instruction (optional), then each shot, then the query prompt, separated
/// by blank lines.
std::string assemble(std::string_view instruction, std::span<const Exemplar> shots, const Exemplar& query);

}  // namespace templates

struct ExampleMeta {
  std::uint64_t seed = 0;
  std::string source;
  std::string split;  // "train", "seen", "unseen"
};

struct DatasetExample {
  std::string id;
  TrainTask task = TrainTask::PlanGeneration;
  double weight = 1.0;
  std::string prompt;
  std::string completion;
  /// Multiple-choice candidates (activity recognition only).
  std::vector<std::string> choices;
  ExampleMeta meta;
};

struct EvalExample {
  std::string id;
  EvalTask task = EvalTask::HouseworkQa;
  std::string prompt;
  std::string gold;
  std::vector<std::string> choices;
  int gold_index = -1;
  int n_shots = 0;
  Scoring scoring = Scoring::Accuracy;
  ExampleMeta meta;
  /// Task-specific facts for oracle checks (object id, location id, ...).
  nlohmann::ordered_json facts = nlohmann::ordered_json::object();
};

class CompileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- facts derived from experiences ----

/// What a counting question asks about: a holder and the objects placed on
/// or in it during the trace that are still there at the end, in order of
/// their last placement.
struct CountingFacts {
  int location = -1;
  Relation relation = Relation::On;
  std::vector<int> items;
};

/// Every holder whose class received no placement on another instance, with
/// at least one counted item. Sorted by holder id.
std::vector<CountingFacts> counting_candidates(const ExplorationTrace& t);

/// Moved objects (path length >= 2) whose class has no other instance named
/// in any step.
std::vector<int> trackable_objects(const ExplorationTrace& t);

struct LocationQuestion {
  int object = -1;
  int reference_room = -1;
  bool before = true;
  int answer_room = -1;
};

/// All before/after questions over trackable objects whose reference room
/// occurs exactly once in the object's path.
std::vector<LocationQuestion> location_questions(const ExplorationTrace& t);

/// "Tom is sitting on the sofa. Tom is facing the TV." followed by one
/// sentence per predicate of `goal` that holds and is not about the agent.
std::string render_agent_state(const WorldState& s, int agent, std::string_view name, const Goal& goal);

WorldState final_state(const PlanEpisode& e);

/// Three distractor activity names: same room first, then any room. Names
/// whose goal already holds in `final` are skipped. Throws CompileError when
/// fewer than three remain.
std::vector<std::string> pick_distractor_activities(const Activity& gold,
                                                    std::span<const Activity> pool,
                                                    const WorldState& final, Rng& rng);

/// Inserts `gold` at a random position among the distractors; returns its index.
int place_gold(std::vector<std::string>& choices, const std::string& gold, Rng& rng);

// ---- training tasks ----

Exemplar plan_generation_exemplar(const PlanEpisode& e);
Exemplar activity_recognition_exemplar(const PlanEpisode& e);
/// Chooses the question from `t` with `rng`; throws CompileError when the
/// trace has no suitable holder.
Exemplar counting_exemplar(const ExplorationTrace& t, const MixtureConfig& cfg, Rng& rng);
Exemplar path_tracking_exemplar(const ExplorationTrace& t, Rng& rng);

DatasetExample compile_plan_generation(const PlanEpisode& e, const MixtureConfig& cfg,
                                       std::span<const Exemplar> shots = {});
DatasetExample compile_activity_recognition(const PlanEpisode& e, std::span<const Activity> pool,
                                            const MixtureConfig& cfg,
                                            std::span<const Exemplar> shots = {});
DatasetExample compile_counting(const ExplorationTrace& t, const MixtureConfig& cfg,
                                std::span<const Exemplar> shots = {});
DatasetExample compile_path_tracking(const ExplorationTrace& t, const MixtureConfig& cfg,
                                     std::span<const Exemplar> shots = {});

struct TrainingSet {
  std::vector<DatasetExample> examples;
  /// Records that could not feed a task (failed plan, no placement, ...).
  std::vector<std::string> skipped;
};

/// All four tasks from an experience set, with in-context shots sampled from
/// the other records of the same task. Plans of activities outside `seen` are
/// rejected. Output is sorted by (task, source id).
TrainingSet compile_training_set(const ExperienceSet& set, std::span<const Activity> seen,
                                 const MixtureConfig& cfg, unsigned jobs = 1);

// ---- evaluation suite ----

struct LibrarySplit {
  std::vector<Activity> seen;
  std::vector<Activity> unseen;
};

/// Deterministic split holding out round(fraction * n) activities.
LibrarySplit split_library(std::span<const Activity> library, double unseen_fraction, std::uint64_t seed);
/// Throws CompileError on overlapping names or a side with fewer than 4 activities.
void check_split(const LibrarySplit& split);

struct EvalConfig {
  std::array<int, kEvalTaskCount> counts{175, 54, 135, 43, 261, 162, 549, 262, 194, 200, 200};
  std::uint64_t seed = 0;
  int min_agents = 1;
  int max_agents = 3;
  int min_steps = 8;
  int max_steps = 40;
  PolicyBias policy{};
  PlannerConfig planner{};

  int count(EvalTask t) const { return counts[static_cast<std::size_t>(t)]; }
  void validate() const;
};

struct EvalSuite {
  std::vector<EvalExample> examples;
  /// Experiences the gold answers were read from, keyed by meta.source.
  std::vector<PlanEpisode> plans;
  std::vector<ExplorationTrace> traces;
};

EvalSuite generate_eval_suite(const CatalogPtr& catalog, const LibrarySplit& split,
                              const EvalConfig& cfg, unsigned jobs = 1);

// ---- serialization ----

nlohmann::ordered_json to_json(const DatasetExample& e);
nlohmann::ordered_json to_json(const EvalExample& e);
DatasetExample dataset_example_from_json(const nlohmann::ordered_json& doc);
EvalExample eval_example_from_json(const nlohmann::ordered_json& doc);

std::string to_jsonl(std::span<const DatasetExample> examples);
std::string to_jsonl(std::span<const EvalExample> examples);
std::vector<DatasetExample> read_dataset_jsonl(std::string_view text);
std::vector<EvalExample> read_eval_jsonl(std::string_view text);

/// Writes the JSONL file and returns its manifest entry:
/// {file, records, bytes, fnv1a64, counts{task: n}}.
nlohmann::ordered_json emit_dataset(std::span<const DatasetExample> examples, const std::string& path);
nlohmann::ordered_json emit_dataset(std::span<const EvalExample> examples, const std::string& path);

}  // namespace embexp
