#include "embexp/compiler.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace embexp {
namespace {

using ojson = nlohmann::ordered_json;

constexpr std::array<std::string_view, kTrainTaskCount> kTrainNames{
    "plan_generation", "activity_recognition", "counting", "object_path_tracking"};

constexpr std::array<std::string_view, kEvalTaskCount> kEvalNames{
    "plan_gen_vanilla_seen",   "plan_gen_vanilla_unseen", "plan_gen_confusing_seen",
    "plan_gen_confusing_unseen", "housework_qa",          "negation_housework_qa",
    "activity_recognition_qa", "activity_inference_qa",   "counting_qa",
    "object_path_tracking_eval", "object_location_qa"};

constexpr std::array<std::string_view, 3> kScoringNames{"rouge_l", "accuracy", "lcs_norm"};

template <std::size_t N>
std::size_t index_of(const std::array<std::string_view, N>& names, std::string_view name,
                     std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == name) return i;
  }
  throw std::invalid_argument("unknown " + std::string(what) + " '" + std::string(name) + "'");
}

Rng record_rng(std::uint64_t seed, std::string_view tag, std::string_view id) {
  return Rng(mix_seed(seed, fnv1a64(std::string(tag) + ":" + std::string(id))));
}

std::vector<std::string> class_names(const WorldState& s, const std::vector<int>& ids) {
  std::vector<std::string> out;
  for (int id : ids) out.push_back(s.name_of(id));
  return out;
}

std::string term_name(const WorldState& s, const Term& t) {
  return t.kind == Term::Kind::ObjectId ? s.name_of(t.id) : t.class_name;
}

bool goal_holds(const WorldState& s, const Goal& g) {
  try {
    return satisfied_subset(s, g).size() == g.size();
  } catch (const GoalError&) {
    return false;
  }
}

std::string_view relation_word(Relation r) { return r == Relation::In ? "in" : "on"; }

std::string narrative(const ExplorationTrace& t) { return render_trace_to_narrative(t, t.seed); }

std::string path_text(const WorldState& s, const std::vector<int>& rooms) {
  return join(class_names(s, rooms), ", ");
}

// Up to k items of `pool` other than index `self`, drawn without replacement.
std::vector<Exemplar> sample_shots(const std::vector<Exemplar>& pool, std::size_t self, std::size_t k,
                                   Rng& rng, const std::vector<std::string>* groups = nullptr) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (i == self) continue;
    if (groups && (*groups)[i] == (*groups)[self]) continue;
    idx.push_back(i);
  }
  rng.shuffle(idx);
  if (idx.size() > k) idx.resize(k);
  std::vector<Exemplar> out;
  for (auto i : idx) out.push_back(pool[i]);
  return out;
}

}  // namespace

std::string_view train_task_name(TrainTask t) { return kTrainNames[static_cast<std::size_t>(t)]; }
TrainTask parse_train_task(std::string_view name) {
  return static_cast<TrainTask>(index_of(kTrainNames, name, "training task"));
}
std::string_view eval_task_name(EvalTask t) { return kEvalNames[static_cast<std::size_t>(t)]; }
EvalTask parse_eval_task(std::string_view name) {
  return static_cast<EvalTask>(index_of(kEvalNames, name, "eval task"));
}
std::string_view scoring_name(Scoring s) { return kScoringNames[static_cast<std::size_t>(s)]; }
Scoring parse_scoring(std::string_view name) {
  return static_cast<Scoring>(index_of(kScoringNames, name, "metric"));
}

Scoring eval_scoring(EvalTask t) {
  switch (t) {
    case EvalTask::PlanGenVanillaSeen:
    case EvalTask::PlanGenVanillaUnseen:
    case EvalTask::PlanGenConfusingSeen:
    case EvalTask::PlanGenConfusingUnseen: return Scoring::RougeL;
    case EvalTask::ObjectPathTrackingEval: return Scoring::Lcs;
    default: return Scoring::Accuracy;
  }
}

int eval_shots(EvalTask t) {
  switch (t) {
    case EvalTask::HouseworkQa:
    case EvalTask::NegationHouseworkQa:
    case EvalTask::ActivityInferenceQa: return 10;
    case EvalTask::CountingQa: return 5;
    case EvalTask::ObjectLocationQa: return 2;
    default: return 0;
  }
}

void MixtureConfig::validate() const {
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (!(alpha[i] > 0.0) || !std::isfinite(alpha[i])) {
      throw std::invalid_argument("mixture weight for " + std::string(kTrainNames[i]) + " must be positive");
    }
  }
  if (exemplars_per_prompt < 0) throw std::invalid_argument("exemplars_per_prompt must be >= 0");
}

namespace templates {

Exemplar plan_generation(std::string_view activity, std::string_view condition, std::string_view plan) {
  return {"Q: How to " + std::string(activity) + "? Given items include " + std::string(condition) + "\nA: ",
          std::string(plan)};
}

Exemplar housework_qa(std::string_view activity, std::string_view answer) {
  return {"Question: To " + std::string(activity) + ", a possibly related item could be\nAnswer: ",
          std::string(answer)};
}

Exemplar negation_qa(std::string_view activity, std::string_view answer) {
  return {"Question: To " + std::string(activity) + ", an unrelated item could be\nAnswer: ",
          std::string(answer)};
}

Exemplar activity_recognition(std::string_view plan, std::string_view answer) {
  return {"Given a task plan: " + std::string(plan) + "\nQuestion: what is the name of this task?\nAnswer: ",
          std::string(answer)};
}

Exemplar activity_inference(std::string_view state, std::string_view answer) {
  return {std::string(state) + "\nQuestion: given the above state, a possible activity could be\nAnswer: ",
          std::string(answer)};
}

Exemplar counting(std::string_view movement, std::string_view location, int number,
                  std::string_view items, bool verbatim, std::string_view relation) {
  const std::string loc(location);
  const std::string rel(relation);
  std::string answer = verbatim ? "Ther are " : "There are ";
  answer += std::to_string(number) + (verbatim ? " itmes " : " items ") + rel + " the " + loc +
            ". They are " + std::string(items);
  return {"Q: " + std::string(movement) + " How many items are there " + rel + " the " + loc + "?\nA: ",
          std::move(answer)};
}

Exemplar counting_qa(std::string_view movement, std::string_view location, int number,
                     std::string_view relation) {
  return {"Q: " + std::string(movement) + " How many items are there " + std::string(relation) + " the " +
              std::string(location) + "?\nA: ",
          std::to_string(number)};
}

Exemplar path_tracking(std::string_view movement, std::string_view object, std::string_view path) {
  return {std::string(movement) + "\nQuestion: What is the order of the rooms where the " +
              std::string(object) + " appeared?\nAnswer: ",
          std::string(path)};
}

Exemplar object_location(std::string_view movement, std::string_view object,
                         std::string_view preposition, std::string_view reference_room,
                         std::string_view answer) {
  return {std::string(movement) + "\nQuestion: Where is the " + std::string(object) + " " +
              std::string(preposition) + " the " + std::string(reference_room) + "?\nAnswer: ",
          std::string(answer)};
}

std::string assemble(std::string_view instruction, std::span<const Exemplar> shots, const Exemplar& query) {
  std::vector<std::string> parts;
  if (!instruction.empty()) parts.emplace_back(instruction);
  for (const auto& s : shots) parts.push_back(s.text());
  parts.push_back(query.prompt);
  return join(parts, "\n\n");
}

}  // namespace templates

// ---- facts ----

std::vector<CountingFacts> counting_candidates(const ExplorationTrace& t) {
  WorldState s = t.initial_state;
  struct Placement {
    int holder;
    Relation relation;
    std::size_t step;
  };
  std::map<int, Placement> last;
  std::map<int, std::set<int>> receivers_by_class;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& step = t.steps[i];
    apply_action_in_place(s, step);
    if (step.verb == Verb::Put || step.verb == Verb::PutIn) {
      const Relation rel = step.verb == Verb::Put ? Relation::On : Relation::In;
      last[step.args[0]] = {step.args[1], rel, i};
      receivers_by_class[s.object(step.args[1]).class_index].insert(step.args[1]);
    }
  }
  std::map<int, std::vector<std::pair<std::size_t, int>>> placed;
  std::map<int, Relation> relation;
  for (const auto& [obj, p] : last) {
    const auto& o = s.object(obj);
    if (!o.support || o.support->holder != p.holder) continue;
    if (receivers_by_class[s.object(p.holder).class_index].size() != 1) continue;
    placed[p.holder].emplace_back(p.step, obj);
    relation[p.holder] = p.relation;
  }
  std::vector<CountingFacts> out;
  for (auto& [holder, items] : placed) {
    std::sort(items.begin(), items.end());
    CountingFacts f{holder, relation[holder], {}};
    for (const auto& [step, obj] : items) f.items.push_back(obj);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<int> trackable_objects(const ExplorationTrace& t) {
  const auto& s = t.initial_state;
  std::map<int, std::set<int>> mentioned_by_class;
  for (const auto& step : t.steps) {
    for (int i = 0; i < step.arity(); ++i) {
      const int id = step.args[static_cast<std::size_t>(i)];
      if (!s.is_room(id)) mentioned_by_class[s.object(id).class_index].insert(id);
    }
  }
  std::vector<int> out;
  for (const auto& [id, path] : t.object_paths) {
    if (path.size() < 2) continue;
    const auto& ids = mentioned_by_class[s.object(id).class_index];
    if (ids.size() == 1 && *ids.begin() == id) out.push_back(id);
  }
  return out;
}

std::vector<LocationQuestion> location_questions(const ExplorationTrace& t) {
  std::vector<LocationQuestion> out;
  for (int obj : trackable_objects(t)) {
    const auto& path = t.object_paths.at(obj);
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (std::count(path.begin(), path.end(), path[i]) != 1) continue;
      if (i > 0) out.push_back({obj, path[i], true, path[i - 1]});
      if (i + 1 < path.size()) out.push_back({obj, path[i], false, path[i + 1]});
    }
  }
  return out;
}

std::string render_agent_state(const WorldState& s, int agent, std::string_view name, const Goal& goal) {
  const auto& a = s.agent(agent);
  const std::string who(name);
  std::vector<std::string> out;
  const std::string target = a.posture_target >= 0 ? " the " + s.name_of(a.posture_target) : "";
  switch (a.posture) {
    case Posture::Sitting: out.push_back(who + " is sitting on" + target + "."); break;
    case Posture::Lying: out.push_back(who + " is lying on" + target + "."); break;
    case Posture::Sleeping:
      out.push_back(a.posture_target >= 0 ? who + " is sleeping on" + target + "." : who + " is sleeping.");
      break;
    case Posture::Standing: break;
  }
  if (a.facing >= 0) out.push_back(who + " is facing the " + s.name_of(a.facing) + ".");
  for (int held : a.holding) out.push_back(who + " is holding the " + s.name_of(held) + ".");

  for (const auto& p : goal) {
    if (p.kind == PredicateKind::Holds || p.kind == PredicateKind::Sitting || p.kind == PredicateKind::Lying) {
      continue;
    }
    if (!evaluate_predicate(s, p)) continue;
    const std::string x = "The " + term_name(s, p.args[0]);
    switch (p.kind) {
      case PredicateKind::On: out.push_back(x + " is on the " + term_name(s, p.args[1]) + "."); break;
      case PredicateKind::In: out.push_back(x + " is in the " + term_name(s, p.args[1]) + "."); break;
      case PredicateKind::Open: out.push_back(x + " is open."); break;
      case PredicateKind::Closed: out.push_back(x + " is closed."); break;
      case PredicateKind::SwitchedOn: out.push_back(x + " is on."); break;
      case PredicateKind::SwitchedOff: out.push_back(x + " is off."); break;
      case PredicateKind::Clean: out.push_back(x + " is clean."); break;
      default: break;
    }
  }
  return join(out, " ");
}

WorldState final_state(const PlanEpisode& e) {
  WorldState s = e.initial_state;
  for (const auto& step : e.steps) apply_action_in_place(s, step);
  return s;
}

std::vector<std::string> pick_distractor_activities(const Activity& gold, std::span<const Activity> pool,
                                                    const WorldState& final, Rng& rng) {
  std::vector<std::string> same, other;
  std::set<std::string> seen{gold.name};
  for (const auto& a : pool) {
    if (!seen.insert(a.name).second) continue;
    if (goal_holds(final, a.goal)) continue;
    (a.room == gold.room ? same : other).push_back(a.name);
  }
  rng.shuffle(same);
  rng.shuffle(other);
  std::vector<std::string> out;
  for (auto* group : {&same, &other}) {
    for (const auto& n : *group) {
      if (out.size() < 3) out.push_back(n);
    }
  }
  if (out.size() < 3) {
    throw CompileError("not enough distractor activities for '" + gold.name + "'");
  }
  return out;
}

int place_gold(std::vector<std::string>& choices, const std::string& gold, Rng& rng) {
  const auto pos = rng.uniform(choices.size() + 1);
  choices.insert(choices.begin() + static_cast<std::ptrdiff_t>(pos), gold);
  return static_cast<int>(pos);
}

// ---- training ----

Exemplar plan_generation_exemplar(const PlanEpisode& e) {
  return templates::plan_generation(e.activity.name, e.initial_condition,
                                    render_plan_text(e.initial_state, e.steps));
}

Exemplar activity_recognition_exemplar(const PlanEpisode& e) {
  return templates::activity_recognition(render_plan_text(e.initial_state, e.steps), e.activity.name);
}

Exemplar counting_exemplar(const ExplorationTrace& t, const MixtureConfig& cfg, Rng& rng) {
  const auto cands = counting_candidates(t);
  if (cands.empty()) throw CompileError("trace " + t.id + " places nothing on a surface or in a container");
  const auto& f = rng.pick(cands);
  const auto& s = t.initial_state;
  return templates::counting(narrative(t), s.name_of(f.location), static_cast<int>(f.items.size()),
                             join(class_names(s, f.items), ", "), cfg.verbatim_templates,
                             relation_word(f.relation));
}

Exemplar path_tracking_exemplar(const ExplorationTrace& t, Rng& rng) {
  const auto objs = trackable_objects(t);
  if (objs.empty()) throw CompileError("trace " + t.id + " moves no trackable object between rooms");
  const int obj = rng.pick(objs);
  const auto& s = t.initial_state;
  return templates::path_tracking(narrative(t), s.name_of(obj), path_text(s, t.object_paths.at(obj)));
}

namespace {

DatasetExample make_example(TrainTask task, const MixtureConfig& cfg, const std::string& source,
                            std::uint64_t seed, std::string_view instruction, const Exemplar& q,
                            std::span<const Exemplar> shots) {
  DatasetExample d;
  d.id = std::string(train_task_name(task)) + ":" + source;
  d.task = task;
  d.weight = cfg.weight(task);
  d.prompt = templates::assemble(instruction, shots, q);
  d.completion = q.answer;
  d.meta = {seed, source, "train"};
  return d;
}

void require_success(const PlanEpisode& e) {
  if (!e.success) throw CompileError("plan episode " + e.id + " did not reach its goal");
  if (e.steps.empty()) throw CompileError("plan episode " + e.id + " has no steps");
}

}  // namespace

DatasetExample compile_plan_generation(const PlanEpisode& e, const MixtureConfig& cfg,
                                       std::span<const Exemplar> shots) {
  require_success(e);
  return make_example(TrainTask::PlanGeneration, cfg, e.id, e.seed, "", plan_generation_exemplar(e), shots);
}

DatasetExample compile_activity_recognition(const PlanEpisode& e, std::span<const Activity> pool,
                                            const MixtureConfig& cfg, std::span<const Exemplar> shots) {
  require_success(e);
  auto rng = record_rng(cfg.seed, "activity_recognition", e.id);
  auto choices = pick_distractor_activities(e.activity, pool, final_state(e), rng);
  place_gold(choices, e.activity.name, rng);
  auto d = make_example(TrainTask::ActivityRecognition, cfg, e.id, e.seed, "",
                        activity_recognition_exemplar(e), shots);
  d.choices = std::move(choices);
  return d;
}

DatasetExample compile_counting(const ExplorationTrace& t, const MixtureConfig& cfg,
                                std::span<const Exemplar> shots) {
  auto rng = record_rng(cfg.seed, "counting", t.id);
  return make_example(TrainTask::Counting, cfg, t.id, t.seed, templates::kCountingInstruction,
                      counting_exemplar(t, cfg, rng), shots);
}

DatasetExample compile_path_tracking(const ExplorationTrace& t, const MixtureConfig& cfg,
                                     std::span<const Exemplar> shots) {
  auto rng = record_rng(cfg.seed, "object_path_tracking", t.id);
  return make_example(TrainTask::PathTracking, cfg, t.id, t.seed, "", path_tracking_exemplar(t, rng), shots);
}

TrainingSet compile_training_set(const ExperienceSet& set, std::span<const Activity> seen,
                                 const MixtureConfig& cfg, unsigned jobs) {
  cfg.validate();
  std::set<std::string> seen_names;
  for (const auto& a : seen) seen_names.insert(a.name);

  TrainingSet out;
  std::vector<const PlanEpisode*> plans;
  for (const auto& e : set.plans) {
    if (!seen_names.count(e.activity.name)) {
      throw CompileError("plan " + e.id + " uses activity '" + e.activity.name + "' outside the seen split");
    }
    if (!e.success) {
      out.skipped.push_back(e.id + ": goal not reached");
    } else if (e.steps.empty()) {
      out.skipped.push_back(e.id + ": goal held initially");
    } else {
      plans.push_back(&e);
    }
  }
  std::vector<const ExplorationTrace*> counting, tracking;
  for (const auto& t : set.traces) {
    if (counting_candidates(t).empty()) {
      out.skipped.push_back(t.id + ": no counting question");
    } else {
      counting.push_back(&t);
    }
    if (trackable_objects(t).empty()) {
      out.skipped.push_back(t.id + ": no path tracking question");
    } else {
      tracking.push_back(&t);
    }
  }

  const auto k = static_cast<std::size_t>(cfg.exemplars_per_prompt);
  auto build = [&](TrainTask task, std::size_t n, auto&& exemplar_of, auto&& compile_one) {
    const auto pool = parallel_map(n, jobs, exemplar_of);
    auto examples = parallel_map(n, jobs, [&](std::size_t i) {
      auto rng = record_rng(cfg.seed, "shots/" + std::string(train_task_name(task)), std::to_string(i));
      const auto shots = sample_shots(pool, i, k, rng);
      return compile_one(i, shots);
    });
    for (auto& e : examples) out.examples.push_back(std::move(e));
  };

  build(TrainTask::PlanGeneration, plans.size(),
        [&](std::size_t i) { return plan_generation_exemplar(*plans[i]); },
        [&](std::size_t i, const std::vector<Exemplar>& shots) {
          return compile_plan_generation(*plans[i], cfg, shots);
        });
  build(TrainTask::ActivityRecognition, plans.size(),
        [&](std::size_t i) { return activity_recognition_exemplar(*plans[i]); },
        [&](std::size_t i, const std::vector<Exemplar>& shots) {
          return compile_activity_recognition(*plans[i], seen, cfg, shots);
        });
  build(TrainTask::Counting, counting.size(),
        [&](std::size_t i) {
          auto rng = record_rng(cfg.seed, "counting", counting[i]->id);
          return counting_exemplar(*counting[i], cfg, rng);
        },
        [&](std::size_t i, const std::vector<Exemplar>& shots) {
          return compile_counting(*counting[i], cfg, shots);
        });
  build(TrainTask::PathTracking, tracking.size(),
        [&](std::size_t i) {
          auto rng = record_rng(cfg.seed, "object_path_tracking", tracking[i]->id);
          return path_tracking_exemplar(*tracking[i], rng);
        },
        [&](std::size_t i, const std::vector<Exemplar>& shots) {
          return compile_path_tracking(*tracking[i], cfg, shots);
        });

  std::stable_sort(out.examples.begin(), out.examples.end(), [](const auto& a, const auto& b) {
    return std::tie(a.task, a.meta.source) < std::tie(b.task, b.meta.source);
  });
  return out;
}

// ---- evaluation ----

LibrarySplit split_library(std::span<const Activity> library, double unseen_fraction, std::uint64_t seed) {
  if (!(unseen_fraction > 0.0 && unseen_fraction < 1.0)) {
    throw std::invalid_argument("unseen_fraction must lie in (0, 1)");
  }
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  for (std::size_t i = 0; i < library.size(); ++i) {
    keyed.emplace_back(mix_seed(seed, fnv1a64(library[i].name)), i);
  }
  std::sort(keyed.begin(), keyed.end());
  const auto n_unseen = static_cast<std::size_t>(std::lround(unseen_fraction * static_cast<double>(library.size())));
  std::vector<bool> unseen(library.size(), false);
  for (std::size_t i = 0; i < n_unseen && i < keyed.size(); ++i) unseen[keyed[i].second] = true;
  LibrarySplit split;
  for (std::size_t i = 0; i < library.size(); ++i) {
    (unseen[i] ? split.unseen : split.seen).push_back(library[i]);
  }
  check_split(split);
  return split;
}

void check_split(const LibrarySplit& split) {
  std::set<std::string> names;
  for (const auto& a : split.seen) names.insert(a.name);
  for (const auto& a : split.unseen) {
    if (names.count(a.name)) throw CompileError("activity '" + a.name + "' is both seen and unseen");
  }
  if (split.seen.size() < 4 || split.unseen.size() < 4) {
    throw CompileError("seen and unseen splits need at least 4 activities each (have " +
                       std::to_string(split.seen.size()) + " and " + std::to_string(split.unseen.size()) + ")");
  }
}

void EvalConfig::validate() const {
  for (int c : counts) {
    if (c < 0) throw std::invalid_argument("eval counts must be >= 0");
  }
  if (min_agents < 1 || max_agents < min_agents) throw std::invalid_argument("bad agent range");
  if (min_steps < 1 || max_steps < min_steps) throw std::invalid_argument("bad step range");
  policy.validate();
  planner.validate();
}

namespace {

constexpr int kMaxAttempts = 64;

struct PlanJob {
  EvalTask task;
  int index;
  const Activity* activity;
};

PlanEpisode plan_for(const CatalogPtr& catalog, const EvalConfig& cfg, const PlanJob& job) {
  const auto base = mix_seed(stage_seed(cfg.seed, eval_task_name(job.task)), static_cast<std::uint64_t>(job.index));
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const auto scene_seed = mix_seed(base, static_cast<std::uint64_t>(attempt));
    const auto scene = sample_scene(catalog, scene_seed, SceneSize::Small);
    auto pc = cfg.planner;
    pc.seed = scene_seed;
    auto ep = plan(scene, *job.activity, pc);
    // A goal that already holds gives an empty plan; draw another scene.
    if (ep.success && !ep.steps.empty()) return ep;
  }
  throw CompileError("planner failed on '" + job.activity->name + "' for " + std::to_string(kMaxAttempts) +
                     " scenes");
}

bool has_irrelevant_step(const ExplorationTrace& t) {
  return std::any_of(t.steps.begin(), t.steps.end(),
                     [](const ActionStep& s) { return categorize(s.verb) == ActionCategory::Irrelevant; });
}

ExplorationTrace trace_for(const CatalogPtr& catalog, const EvalConfig& cfg, EvalTask task, int index) {
  const auto base = mix_seed(stage_seed(cfg.seed, eval_task_name(task)), static_cast<std::uint64_t>(index));
  const RandomPolicy policy(cfg.policy);
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const auto seed = mix_seed(base, static_cast<std::uint64_t>(attempt));
    Rng rng(seed);
    const auto size = static_cast<SceneSize>(rng.uniform(3));
    const auto scene = sample_scene(catalog, seed, size);
    const int agents = std::min(rng.range(cfg.min_agents, cfg.max_agents), static_cast<int>(scene.rooms.size()));
    const int steps = rng.range(cfg.min_steps, cfg.max_steps);
    auto t = explore(scene, agents, steps, policy, seed);
    bool ok = false;
    switch (task) {
      case EvalTask::CountingQa: ok = has_irrelevant_step(t) && !counting_candidates(t).empty(); break;
      case EvalTask::ObjectPathTrackingEval: ok = !trackable_objects(t).empty(); break;
      case EvalTask::ObjectLocationQa: ok = !location_questions(t).empty(); break;
      default: break;
    }
    if (ok) return t;
  }
  throw CompileError("no usable exploration trace for " + std::string(eval_task_name(task)) + " #" +
                     std::to_string(index));
}

std::string eval_id(EvalTask task, std::size_t i) {
  std::ostringstream os;
  os << eval_task_name(task) << "-" << std::setw(4) << std::setfill('0') << i;
  return os.str();
}

// Unrelated classes for an activity: movable or fixed objects that are not
// relevant to it and never appear in its room.
std::vector<std::string> unrelated_classes(const Catalog& catalog, const Activity& a) {
  std::vector<std::string> out;
  for (const auto& c : catalog.classes()) {
    if (c.is_room()) continue;
    if (std::find(a.relevant_classes.begin(), a.relevant_classes.end(), c.name) != a.relevant_classes.end()) continue;
    if (std::find(c.rooms.begin(), c.rooms.end(), a.room) != c.rooms.end()) continue;
    out.push_back(c.name);
  }
  return out;
}

std::vector<std::string> draw(std::vector<std::string> pool, std::size_t k, Rng& rng) {
  rng.shuffle(pool);
  if (pool.size() > k) pool.resize(k);
  return pool;
}

}  // namespace

EvalSuite generate_eval_suite(const CatalogPtr& catalog, const LibrarySplit& split, const EvalConfig& cfg,
                              unsigned jobs) {
  cfg.validate();
  check_split(split);
  std::vector<Activity> all = split.seen;
  all.insert(all.end(), split.unseen.begin(), split.unseen.end());

  // Activities are cycled in a seeded order so small counts still spread.
  auto cycle = [&](const std::vector<Activity>& acts, EvalTask task) {
    std::vector<const Activity*> order;
    for (const auto& a : acts) order.push_back(&a);
    Rng rng(stage_seed(cfg.seed, std::string("order/") + std::string(eval_task_name(task))));
    rng.shuffle(order);
    return order;
  };

  std::vector<PlanJob> plan_jobs;
  const std::array<std::pair<EvalTask, const std::vector<Activity>*>, 6> plan_tasks{{
      {EvalTask::PlanGenVanillaSeen, &split.seen},
      {EvalTask::PlanGenVanillaUnseen, &split.unseen},
      {EvalTask::PlanGenConfusingSeen, &split.seen},
      {EvalTask::PlanGenConfusingUnseen, &split.unseen},
      {EvalTask::ActivityRecognitionQa, &all},
      {EvalTask::ActivityInferenceQa, &all},
  }};
  for (const auto& [task, acts] : plan_tasks) {
    const auto order = cycle(*acts, task);
    for (int i = 0; i < cfg.count(task); ++i) {
      plan_jobs.push_back({task, i, order[static_cast<std::size_t>(i) % order.size()]});
    }
  }
  auto episodes = parallel_map(plan_jobs.size(), jobs, [&](std::size_t i) { return plan_for(catalog, cfg, plan_jobs[i]); });

  struct TraceJob {
    EvalTask task;
    int index;
  };
  std::vector<TraceJob> trace_jobs;
  for (auto task : {EvalTask::CountingQa, EvalTask::ObjectPathTrackingEval, EvalTask::ObjectLocationQa}) {
    for (int i = 0; i < cfg.count(task); ++i) trace_jobs.push_back({task, i});
  }
  auto traces = parallel_map(trace_jobs.size(), jobs, [&](std::size_t i) {
    return trace_for(catalog, cfg, trace_jobs[i].task, trace_jobs[i].index);
  });

  EvalSuite suite;
  // Query exemplars per task first; shots are drawn from the same pool.
  std::map<EvalTask, std::vector<EvalExample>> by_task;
  std::map<EvalTask, std::vector<Exemplar>> queries;
  std::map<EvalTask, std::vector<std::string>> groups;

  auto add = [&](EvalTask task, EvalExample ex, Exemplar q, std::string group) {
    ex.task = task;
    ex.n_shots = eval_shots(task);
    ex.scoring = eval_scoring(task);
    ex.gold = q.answer;
    by_task[task].push_back(std::move(ex));
    queries[task].push_back(std::move(q));
    groups[task].push_back(std::move(group));
  };

  for (std::size_t j = 0; j < plan_jobs.size(); ++j) {
    const auto& job = plan_jobs[j];
    auto& ep = episodes[j];
    const auto task = job.task;
    auto rng = record_rng(cfg.seed, eval_task_name(task), std::to_string(job.index));
    EvalExample ex;
    ex.meta = {ep.seed, ep.id, "eval"};
    ex.facts["activity"] = ep.activity.name;
    const bool confusing = task == EvalTask::PlanGenConfusingSeen || task == EvalTask::PlanGenConfusingUnseen;
    switch (task) {
      case EvalTask::PlanGenVanillaSeen:
      case EvalTask::PlanGenVanillaUnseen:
      case EvalTask::PlanGenConfusingSeen:
      case EvalTask::PlanGenConfusingUnseen: {
        const bool unseen = task == EvalTask::PlanGenVanillaUnseen || task == EvalTask::PlanGenConfusingUnseen;
        ex.meta.split = unseen ? "unseen" : "seen";
        const auto cond = render_initial_condition(ep.initial_state, ep.activity, confusing, rng.next());
        add(task, std::move(ex),
            templates::plan_generation(ep.activity.name, cond, render_plan_text(ep.initial_state, ep.steps)),
            ep.activity.name);
        break;
      }
      case EvalTask::ActivityRecognitionQa: {
        ex.choices = pick_distractor_activities(ep.activity, all, final_state(ep), rng);
        ex.gold_index = place_gold(ex.choices, ep.activity.name, rng);
        add(task, std::move(ex), activity_recognition_exemplar(ep), ep.activity.name);
        break;
      }
      case EvalTask::ActivityInferenceQa: {
        const auto fin = final_state(ep);
        ex.choices = pick_distractor_activities(ep.activity, all, fin, rng);
        ex.gold_index = place_gold(ex.choices, ep.activity.name, rng);
        const auto state = render_agent_state(fin, 0, agent_display_name(0), ep.activity.goal);
        add(task, std::move(ex), templates::activity_inference(state, ep.activity.name), ep.activity.name);
        break;
      }
      default: break;
    }
    suite.plans.push_back(std::move(ep));
  }

  // Housework and negation QA need no simulation.
  for (auto task : {EvalTask::HouseworkQa, EvalTask::NegationHouseworkQa}) {
    const auto order = cycle(all, task);
    for (int i = 0; i < cfg.count(task); ++i) {
      const auto& act = *order[static_cast<std::size_t>(i) % order.size()];
      auto rng = record_rng(cfg.seed, eval_task_name(task), std::to_string(i));
      auto unrelated = unrelated_classes(*catalog, act);
      std::vector<std::string> related = act.relevant_classes;
      EvalExample ex;
      ex.meta = {stage_seed(cfg.seed, eval_task_name(task)), act.name, "eval"};
      ex.facts["activity"] = act.name;
      ex.facts["relevant"] = act.relevant_classes;
      ex.facts["room"] = act.room;
      std::string gold;
      if (task == EvalTask::HouseworkQa) {
        gold = rng.pick(related);
        ex.choices = draw(unrelated, 3, rng);
      } else {
        related.push_back(act.room);
        gold = rng.pick(unrelated);
        ex.choices = draw(related, 3, rng);
      }
      if (ex.choices.size() < 3) throw CompileError("not enough distractor items for '" + act.name + "'");
      ex.gold_index = place_gold(ex.choices, gold, rng);
      auto q = task == EvalTask::HouseworkQa ? templates::housework_qa(act.name, gold)
                                             : templates::negation_qa(act.name, gold);
      add(task, std::move(ex), std::move(q), act.name);
    }
  }

  for (std::size_t j = 0; j < trace_jobs.size(); ++j) {
    const auto task = trace_jobs[j].task;
    auto& t = traces[j];
    auto rng = record_rng(cfg.seed, eval_task_name(task), std::to_string(trace_jobs[j].index));
    const auto& s = t.initial_state;
    EvalExample ex;
    ex.meta = {t.seed, t.id, "eval"};
    const auto movement = narrative(t);
    switch (task) {
      case EvalTask::CountingQa: {
        const auto cands = counting_candidates(t);
        const auto& f = rng.pick(cands);
        ex.facts["location"] = f.location;
        ex.facts["relation"] = std::string(relation_word(f.relation));
        ex.facts["items"] = f.items;
        add(task, std::move(ex),
            templates::counting_qa(movement, s.name_of(f.location), static_cast<int>(f.items.size()),
                                   relation_word(f.relation)),
            t.id);
        break;
      }
      case EvalTask::ObjectPathTrackingEval: {
        const int obj = rng.pick(trackable_objects(t));
        ex.facts["object"] = obj;
        ex.facts["path"] = t.object_paths.at(obj);
        add(task, std::move(ex),
            templates::path_tracking(movement, s.name_of(obj), path_text(s, t.object_paths.at(obj))), t.id);
        break;
      }
      case EvalTask::ObjectLocationQa: {
        const auto q = rng.pick(location_questions(t));
        ex.facts["object"] = q.object;
        ex.facts["reference_room"] = q.reference_room;
        ex.facts["preposition"] = q.before ? "before" : "after";
        ex.facts["answer_room"] = q.answer_room;
        add(task, std::move(ex),
            templates::object_location(movement, s.name_of(q.object), q.before ? "before" : "after",
                                       s.name_of(q.reference_room), s.name_of(q.answer_room)),
            t.id);
        break;
      }
      default: break;
    }
    suite.traces.push_back(std::move(t));
  }

  for (std::size_t ti = 0; ti < kEvalTaskCount; ++ti) {
    const auto task = static_cast<EvalTask>(ti);
    auto& exs = by_task[task];
    const auto& pool = queries[task];
    for (std::size_t i = 0; i < exs.size(); ++i) {
      auto rng = record_rng(cfg.seed, "shots/" + std::string(eval_task_name(task)), std::to_string(i));
      const auto shots = sample_shots(pool, i, static_cast<std::size_t>(eval_shots(task)), rng, &groups[task]);
      if (shots.size() != static_cast<std::size_t>(eval_shots(task))) {
        throw CompileError("not enough exemplars for " + std::string(eval_task_name(task)) + " shots");
      }
      exs[i].id = eval_id(task, i);
      exs[i].prompt = templates::assemble("", shots, pool[i]);
      suite.examples.push_back(std::move(exs[i]));
    }
  }
  return suite;
}

// ---- serialization ----

namespace {

ojson meta_json(const ExampleMeta& m) { return {{"seed", m.seed}, {"source", m.source}, {"split", m.split}}; }

ExampleMeta meta_from(const ojson& doc) {
  return {doc.at("seed").get<std::uint64_t>(), doc.at("source").get<std::string>(),
          doc.at("split").get<std::string>()};
}

template <typename T>
std::string jsonl(std::span<const T> examples) {
  std::string out;
  for (const auto& e : examples) out += to_json(e).dump() + "\n";
  return out;
}

template <typename T, typename F>
std::vector<T> read_lines(std::string_view text, F&& parse) {
  std::vector<T> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(parse(ojson::parse(line)));
    } catch (const std::exception& ex) {
      throw CompileError("line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

template <typename T, typename NameOf>
ojson emit(std::span<const T> examples, const std::string& path, std::size_t n_tasks, NameOf&& name_of) {
  const auto text = jsonl(examples);
  write_text_file(path, text);
  std::vector<std::size_t> counts(n_tasks, 0);
  for (const auto& e : examples) ++counts[static_cast<std::size_t>(e.task)];
  ojson by_task = ojson::object();
  for (std::size_t i = 0; i < n_tasks; ++i) by_task[std::string(name_of(i))] = counts[i];
  ojson m;
  m["file"] = std::filesystem::path(path).filename().string();
  m["records"] = examples.size();
  m["bytes"] = text.size();
  m["fnv1a64"] = hex64(fnv1a64(text));
  m["counts"] = std::move(by_task);
  return m;
}

}  // namespace

ojson to_json(const DatasetExample& e) {
  ojson out;
  out["id"] = e.id;
  out["task"] = train_task_name(e.task);
  out["weight"] = e.weight;
  out["prompt"] = e.prompt;
  out["completion"] = e.completion;
  out["choices"] = e.choices;
  out["meta"] = meta_json(e.meta);
  return out;
}

ojson to_json(const EvalExample& e) {
  ojson out;
  out["id"] = e.id;
  out["task"] = eval_task_name(e.task);
  out["prompt"] = e.prompt;
  out["gold"] = e.gold;
  out["choices"] = e.choices;
  out["gold_index"] = e.gold_index;
  out["n_shots"] = e.n_shots;
  out["scoring"] = scoring_name(e.scoring);
  if (!e.choices.empty()) {
    // Either prompting style may be used by a downstream scorer.
    out["choice_formats"] = {"multiple_choice", "cloze"};
    out["normalizations"] = {"length", "unconditioned"};
  }
  out["meta"] = meta_json(e.meta);
  out["facts"] = e.facts;
  return out;
}

DatasetExample dataset_example_from_json(const ojson& doc) {
  DatasetExample e;
  e.id = doc.at("id").get<std::string>();
  e.task = parse_train_task(doc.at("task").get<std::string>());
  e.weight = doc.at("weight").get<double>();
  e.prompt = doc.at("prompt").get<std::string>();
  e.completion = doc.at("completion").get<std::string>();
  e.choices = doc.value("choices", std::vector<std::string>{});
  e.meta = meta_from(doc.at("meta"));
  return e;
}

EvalExample eval_example_from_json(const ojson& doc) {
  EvalExample e;
  e.id = doc.at("id").get<std::string>();
  e.task = parse_eval_task(doc.at("task").get<std::string>());
  e.prompt = doc.at("prompt").get<std::string>();
  e.gold = doc.at("gold").get<std::string>();
  e.choices = doc.value("choices", std::vector<std::string>{});
  e.gold_index = doc.value("gold_index", -1);
  e.n_shots = doc.at("n_shots").get<int>();
  e.scoring = parse_scoring(doc.at("scoring").get<std::string>());
  e.meta = meta_from(doc.at("meta"));
  if (doc.contains("facts")) e.facts = doc.at("facts");
  return e;
}

std::string to_jsonl(std::span<const DatasetExample> examples) { return jsonl(examples); }
std::string to_jsonl(std::span<const EvalExample> examples) { return jsonl(examples); }

std::vector<DatasetExample> read_dataset_jsonl(std::string_view text) {
  return read_lines<DatasetExample>(text, dataset_example_from_json);
}

std::vector<EvalExample> read_eval_jsonl(std::string_view text) {
  return read_lines<EvalExample>(text, eval_example_from_json);
}

ojson emit_dataset(std::span<const DatasetExample> examples, const std::string& path) {
  return emit(examples, path, kTrainTaskCount, [](std::size_t i) { return kTrainNames[i]; });
}

ojson emit_dataset(std::span<const EvalExample> examples, const std::string& path) {
  return emit(examples, path, kEvalTaskCount, [](std::size_t i) { return kEvalNames[i]; });
}

}  // namespace embexp
