#include "embexp/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>

#include "embexp/util.hpp"

namespace embexp {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

StageError::StageError(const std::string& stage, const std::string& message)
    : std::runtime_error("[" + stage + "] " + message), stage_(stage) {}

namespace {

std::string oracle_message(const OracleReport& r) {
  std::string msg = "[oracle] " + std::to_string(r.mismatches.size()) + " of " + std::to_string(r.total()) +
                    " gold answers disagree with replay";
  if (!r.mismatches.empty()) msg += "; first: " + r.mismatches[0].id + ": " + r.mismatches[0].message;
  return msg;
}

}  // namespace

OracleError::OracleError(OracleReport report) : std::runtime_error(oracle_message(report)), report_(std::move(report)) {}

namespace {

// Walks one JSON object, remembering which keys were read so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void take(const char* key, T& into) {
    used_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end()) return;
    try {
      into = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  void take_rational(const char* key, Rational& into) {
    used_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end()) return;
    try {
      into = it->is_string() ? parse_rational(it->get<std::string>()) : Rational(it->get<std::int64_t>());
    } catch (const std::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    used_.insert(key);
    const auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!used_.count(key)) throw ConfigError("unknown config key '" + where(key) + "'");
    }
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string> used_;
};

fs::path resolve(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

void write_json(const fs::path& path, const ordered_json& doc) { write_text_file(path.string(), doc.dump(2) + "\n"); }

ordered_json read_json(const fs::path& path, const std::string& stage) {
  try {
    return ordered_json::parse(read_text_file(path.string()));
  } catch (const std::exception& e) {
    throw StageError(stage, path.string() + ": " + e.what());
  }
}

struct Inputs {
  CatalogPtr catalog;
  std::vector<Activity> library;
  LibrarySplit split;
};

Inputs load_inputs(const PipelineConfig& cfg, const std::string& stage) {
  try {
    Inputs in;
    in.catalog = load_catalog(cfg.catalog.string());
    in.library = load_activity_library(cfg.activities.string(), *in.catalog);
    in.split = split_library(in.library, cfg.unseen_fraction, stage_seed(cfg.seed, "split"));
    check_split(in.split);
    return in;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

bool goal_already_holds(const WorldState& scene, const Activity& a) {
  try {
    return satisfied_subset(scene, a.goal).size() == a.goal.size();
  } catch (const GoalError&) {
    return false;
  }
}

constexpr int kSceneAttempts = 64;

PlanEpisode collect_plan(const CatalogPtr& catalog, const PipelineConfig& cfg, const Activity& a, std::size_t job) {
  const auto base = mix_seed(stage_seed(cfg.seed, "collect/plan"), job);
  for (int attempt = 0; attempt < kSceneAttempts; ++attempt) {
    const auto scene_seed = mix_seed(base, static_cast<std::uint64_t>(attempt));
    const auto scene = sample_scene(catalog, scene_seed, cfg.collect.scene_size);
    if (goal_already_holds(scene, a)) continue;
    auto pc = cfg.planner;
    pc.seed = scene_seed;
    return plan(scene, a, pc);
  }
  throw StageError("collect", "every sampled scene already satisfies '" + a.name + "'");
}

ExplorationTrace collect_trace(const CatalogPtr& catalog, const PipelineConfig& cfg, const RandomPolicy& policy,
                               std::size_t job) {
  const auto seed = mix_seed(stage_seed(cfg.seed, "collect/explore"), job);
  Rng rng(seed);
  const auto scene = sample_scene(catalog, seed, cfg.collect.scene_size);
  const int agents =
      std::min(rng.range(cfg.collect.min_agents, cfg.collect.max_agents), static_cast<int>(scene.rooms.size()));
  const int steps = rng.range(cfg.collect.min_steps, cfg.collect.max_steps);
  return explore(scene, agents, steps, policy, seed);
}

ordered_json stats_json(const SearchStats& s) {
  return {{"simulations", s.simulations},
          {"nodes", s.nodes},
          {"max_tree_depth", s.max_tree_depth},
          {"committed_visits", s.committed_visits}};
}

EvalConfig eval_config(const PipelineConfig& cfg) {
  EvalConfig ec;
  ec.counts = cfg.eval_counts;
  ec.seed = stage_seed(cfg.seed, "eval");
  ec.min_agents = cfg.collect.min_agents;
  ec.max_agents = cfg.collect.max_agents;
  ec.min_steps = cfg.collect.min_steps;
  ec.max_steps = cfg.collect.max_steps;
  ec.policy = cfg.policy;
  ec.planner = cfg.planner;
  return ec;
}

MixtureConfig mixture_config(const PipelineConfig& cfg) {
  auto m = cfg.mixture;
  m.seed = stage_seed(cfg.seed, "mixture");
  return m;
}

}  // namespace

void PipelineConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(fs::is_regular_file(catalog), "catalog not found: " + catalog.string());
  require(fs::is_regular_file(activities), "activity library not found: " + activities.string());
  require(!out.empty(), "output directory must be set");
  require(jobs >= 1, "jobs must be at least 1");
  require(collect.scenes_per_activity >= 1, "collect.scenes_per_activity must be at least 1");
  require(collect.traces >= 0, "collect.traces must be non-negative");
  require(collect.min_agents >= 1 && collect.min_agents <= collect.max_agents, "collect agent range is empty");
  require(collect.min_steps >= 1 && collect.min_steps <= collect.max_steps, "collect step range is empty");
  require(unseen_fraction > 0.0 && unseen_fraction < 1.0, "eval.unseen_fraction must lie in (0, 1)");
  for (int n : eval_counts) require(n >= 0, "eval counts must be non-negative");
  require(!lambdas.empty(), "ewc_demo.lambdas must not be empty");
  for (double l : lambdas) require(l >= 0.0, "ewc_demo.lambdas must be non-negative");
  try {
    planner.validate();
    policy.validate();
    mixture.validate();
    demo.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

PipelineConfig default_config() {
  PipelineConfig cfg;
  cfg.catalog = "data/catalog.json";
  cfg.activities = "data/activities.jsonl";
  return cfg;
}

PipelineConfig apply_config_json(PipelineConfig cfg, const json& doc, const fs::path& base_dir) {
  Section top(doc, "");
  std::string catalog, activities, out;
  top.take("catalog", catalog);
  top.take("activities", activities);
  top.take("out", out);
  if (!catalog.empty()) cfg.catalog = resolve(base_dir, catalog);
  if (!activities.empty()) cfg.activities = resolve(base_dir, activities);
  if (!out.empty()) cfg.out = out;
  top.take("seed", cfg.seed);
  top.take("jobs", cfg.jobs);

  if (const auto* c = top.child("collect")) {
    Section s(*c, "collect");
    std::string size(scene_size_name(cfg.collect.scene_size));
    s.take("scene_size", size);
    try {
      cfg.collect.scene_size = parse_scene_size(size);
    } catch (const std::exception& e) {
      throw ConfigError("collect.scene_size: " + std::string(e.what()));
    }
    s.take("scenes_per_activity", cfg.collect.scenes_per_activity);
    s.take("traces", cfg.collect.traces);
    s.take("min_agents", cfg.collect.min_agents);
    s.take("max_agents", cfg.collect.max_agents);
    s.take("min_steps", cfg.collect.min_steps);
    s.take("max_steps", cfg.collect.max_steps);
    s.finish();
  }
  if (const auto* p = top.child("planner")) {
    Section s(*p, "planner");
    s.take_rational("reward_satisfy", cfg.planner.reward_satisfy);
    s.take_rational("step_penalty", cfg.planner.step_penalty);
    s.take("uct_c", cfg.planner.uct_c);
    s.take("max_depth", cfg.planner.max_depth);
    s.take("rollout_depth", cfg.planner.rollout_depth);
    s.take("simulations_per_step", cfg.planner.simulations_per_step);
    s.take("bonus_per_predicate", cfg.planner.bonus_per_predicate);
    s.finish();
  }
  if (const auto* p = top.child("policy")) {
    Section s(*p, "policy");
    s.take("walk", cfg.policy.walk);
    s.take("grab", cfg.policy.grab);
    s.take("put", cfg.policy.put);
    s.take("put_in", cfg.policy.put_in);
    s.take("drop", cfg.policy.drop);
    s.take("other_move", cfg.policy.other_move);
    s.take("irrelevant_rate", cfg.policy.irrelevant_rate);
    s.finish();
  }
  if (const auto* m = top.child("mixture")) {
    Section s(*m, "mixture");
    if (const auto* a = s.child("alpha")) {
      Section alpha(*a, "mixture.alpha");
      for (std::size_t i = 0; i < kTrainTaskCount; ++i) {
        const std::string name(train_task_name(static_cast<TrainTask>(i)));
        alpha.take(name.c_str(), cfg.mixture.alpha[i]);
      }
      alpha.finish();
    }
    s.take("exemplars_per_prompt", cfg.mixture.exemplars_per_prompt);
    s.take("verbatim_templates", cfg.mixture.verbatim_templates);
    s.finish();
  }
  if (const auto* e = top.child("eval")) {
    Section s(*e, "eval");
    if (const auto* c = s.child("counts")) {
      Section counts(*c, "eval.counts");
      for (std::size_t i = 0; i < kEvalTaskCount; ++i) {
        const std::string name(eval_task_name(static_cast<EvalTask>(i)));
        counts.take(name.c_str(), cfg.eval_counts[i]);
      }
      counts.finish();
    }
    s.take("unseen_fraction", cfg.unseen_fraction);
    s.finish();
  }
  if (const auto* d = top.child("ewc_demo")) {
    Section s(*d, "ewc_demo");
    s.take("lambdas", cfg.lambdas);
    s.take("lambda", cfg.demo.lambda);
    s.take("rank", cfg.demo.rank);
    s.take("coefficient", cfg.demo.coefficient);
    s.take("per_class", cfg.demo.per_class);
    s.take("sigma", cfg.demo.sigma);
    s.take("pretrain_steps", cfg.demo.pretrain_steps);
    s.take("finetune_steps", cfg.demo.finetune_steps);
    s.take("full_rate", cfg.demo.full_rate);
    s.take("adapter_rate", cfg.demo.adapter_rate);
    s.take("fisher_samples", cfg.demo.fisher_samples);
    s.finish();
  }
  top.finish();
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path.string()));
  } catch (const std::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return apply_config_json(default_config(), doc, path.parent_path());
}

ordered_json config_to_json(const PipelineConfig& cfg) {
  ordered_json alpha = ordered_json::object();
  for (std::size_t i = 0; i < kTrainTaskCount; ++i) {
    alpha[std::string(train_task_name(static_cast<TrainTask>(i)))] = cfg.mixture.alpha[i];
  }
  ordered_json counts = ordered_json::object();
  for (std::size_t i = 0; i < kEvalTaskCount; ++i) {
    counts[std::string(eval_task_name(static_cast<EvalTask>(i)))] = cfg.eval_counts[i];
  }
  const auto& c = cfg.collect;
  const auto& p = cfg.planner;
  const auto& b = cfg.policy;
  const auto& d = cfg.demo;
  // Paths and jobs are left out so the record does not depend on where or
  // how fast the pipeline ran.
  return {{"seed", cfg.seed},
          {"collect",
           {{"scene_size", scene_size_name(c.scene_size)},
            {"scenes_per_activity", c.scenes_per_activity},
            {"traces", c.traces},
            {"min_agents", c.min_agents},
            {"max_agents", c.max_agents},
            {"min_steps", c.min_steps},
            {"max_steps", c.max_steps}}},
          {"planner",
           {{"reward_satisfy", rational_to_string(p.reward_satisfy)},
            {"step_penalty", rational_to_string(p.step_penalty)},
            {"uct_c", p.uct_c},
            {"max_depth", p.max_depth},
            {"rollout_depth", p.rollout_depth},
            {"simulations_per_step", p.simulations_per_step},
            {"bonus_per_predicate", p.bonus_per_predicate}}},
          {"policy",
           {{"walk", b.walk},
            {"grab", b.grab},
            {"put", b.put},
            {"put_in", b.put_in},
            {"drop", b.drop},
            {"other_move", b.other_move},
            {"irrelevant_rate", b.irrelevant_rate}}},
          {"mixture",
           {{"alpha", alpha},
            {"exemplars_per_prompt", cfg.mixture.exemplars_per_prompt},
            {"verbatim_templates", cfg.mixture.verbatim_templates}}},
          {"eval", {{"counts", counts}, {"unseen_fraction", cfg.unseen_fraction}}},
          {"ewc_demo",
           {{"lambdas", cfg.lambdas},
            {"lambda", d.lambda},
            {"rank", d.rank},
            {"coefficient", d.coefficient},
            {"per_class", d.per_class},
            {"sigma", d.sigma},
            {"pretrain_steps", d.pretrain_steps},
            {"finetune_steps", d.finetune_steps},
            {"full_rate", d.full_rate},
            {"adapter_rate", d.adapter_rate},
            {"fisher_samples", d.fisher_samples}}}};
}

PipelineConfig apply_env(PipelineConfig cfg, const std::function<const char*(const char*)>& getenv) {
  auto number = [&](const char* name) -> std::optional<unsigned long long> {
    const char* v = getenv(name);
    if (!v || !*v) return std::nullopt;
    try {
      std::size_t used = 0;
      const auto n = std::stoull(v, &used);
      if (used != std::string_view(v).size()) throw std::invalid_argument(v);
      return n;
    } catch (const std::exception&) {
      throw ConfigError(std::string(name) + " must be a non-negative integer, got '" + v + "'");
    }
  };
  if (const auto s = number("EMBEXP_SEED")) cfg.seed = *s;
  if (const auto j = number("EMBEXP_JOBS")) cfg.jobs = static_cast<unsigned>(*j);
  if (const char* o = getenv("EMBEXP_OUT"); o && *o) cfg.out = o;
  return cfg;
}

ordered_json file_entry(const fs::path& path, std::size_t records) {
  const auto bytes = read_text_file(path.string());
  return {{"file", path.filename().string()},
          {"records", records},
          {"bytes", bytes.size()},
          {"fnv1a64", hex64(fnv1a64(bytes))}};
}

std::string artifact_tree_hash(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), dir));
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = fnv1a64("");
  for (const auto& rel : files) {
    const auto name = rel.generic_string();
    h = fnv1a64(name + '\0', h);
    h = fnv1a64(read_text_file((dir / rel).string()), h);
    h = fnv1a64(std::string_view("\0", 1), h);
  }
  return hex64(h);
}

CollectResult cmd_collect(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto in = load_inputs(cfg, "collect");

  std::vector<const Activity*> jobs_activity;
  for (const auto& a : in.split.seen) {
    for (int k = 0; k < cfg.collect.scenes_per_activity; ++k) jobs_activity.push_back(&a);
  }
  CollectResult r;
  try {
    r.experiences.plans = parallel_map(jobs_activity.size(), cfg.jobs, [&](std::size_t i) {
      return collect_plan(in.catalog, cfg, *jobs_activity[i], i);
    });
    const RandomPolicy policy(cfg.policy);
    r.experiences.traces = parallel_map(static_cast<std::size_t>(cfg.collect.traces), cfg.jobs,
                                        [&](std::size_t i) { return collect_trace(in.catalog, cfg, policy, i); });
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("collect", e.what());
  }

  std::size_t solved = 0, total_steps = 0;
  ordered_json failures = ordered_json::array();
  for (const auto& e : r.experiences.plans) {
    if (e.success) {
      ++solved;
      total_steps += e.steps.size();
    } else {
      failures.push_back({{"id", e.id},
                          {"activity", e.activity.name},
                          {"remaining", e.remaining.to_string()},
                          {"steps", e.steps.size()},
                          {"stats", stats_json(e.stats)}});
    }
  }
  const auto n_plans = r.experiences.plans.size();
  const double success_rate = n_plans ? static_cast<double>(solved) / static_cast<double>(n_plans) : 0.0;
  const double mean_len = solved ? static_cast<double>(total_steps) / static_cast<double>(solved) : 0.0;

  fs::create_directories(cfg.out);
  const auto path = cfg.out / "experiences.jsonl";
  write_text_file(path.string(), experiences_to_jsonl(r.experiences));
  r.manifest = {{"stage", "collect"},
                {"config", config_to_json(cfg)},
                {"files", ordered_json::array({file_entry(path, n_plans + r.experiences.traces.size())})},
                {"plans", n_plans},
                {"traces", r.experiences.traces.size()},
                {"success_rate", success_rate},
                {"mean_plan_length", mean_len},
                {"failures", failures}};
  write_json(cfg.out / "collect.manifest.json", r.manifest);

  log << "[collect] " << n_plans << " plans (" << solved << " solved, success rate " << success_rate
      << ", mean length " << mean_len << "), " << r.experiences.traces.size() << " traces -> " << path.string()
      << "\n";
  for (const auto& f : failures) {
    log << "[collect] unsolved " << f.at("activity").get<std::string>() << " (" << f.at("id").get<std::string>()
        << "): remaining " << f.at("remaining").get<std::string>() << ", " << f.at("stats").dump() << "\n";
  }
  return r;
}

CompileResult cmd_compile(const PipelineConfig& cfg, std::ostream& log,
                          const std::optional<fs::path>& experiences) {
  cfg.validate();
  const auto in = load_inputs(cfg, "compile");
  const auto src = experiences.value_or(cfg.out / "experiences.jsonl");

  ExperienceSet set;
  try {
    set = experiences_from_jsonl(read_text_file(src.string()), in.catalog, src.string());
  } catch (const std::exception& e) {
    throw StageError("compile", e.what());
  }
  if (set.plans.empty() && set.traces.empty()) throw StageError("compile", "experience stream is empty: " + src.string());
  if (set.traces.empty()) {
    log << "[compile] warning: no exploration traces; counting and path tracking will be empty\n";
  }

  CompileResult r;
  try {
    r.train = compile_training_set(set, in.split.seen, mixture_config(cfg), cfg.jobs);
    r.eval = generate_eval_suite(in.catalog, in.split, eval_config(cfg), cfg.jobs);
  } catch (const std::exception& e) {
    throw StageError("compile", e.what());
  }

  fs::create_directories(cfg.out);
  const auto train_entry =
      emit_dataset(std::span<const DatasetExample>(r.train.examples), (cfg.out / "train.jsonl").string());
  const auto eval_entry =
      emit_dataset(std::span<const EvalExample>(r.eval.examples), (cfg.out / "eval.jsonl").string());
  const auto sources_path = cfg.out / "eval_sources.jsonl";
  write_text_file(sources_path.string(), experiences_to_jsonl({r.eval.plans, r.eval.traces}));

  r.oracle = verify_eval_gold(r.eval.examples, r.eval.plans, r.eval.traces, in.library);
  ordered_json checked = ordered_json::object();
  for (const auto& [task, n] : r.oracle.checked) checked[task] = n;

  ordered_json seen = ordered_json::array(), unseen = ordered_json::array();
  for (const auto& a : in.split.seen) seen.push_back(a.name);
  for (const auto& a : in.split.unseen) unseen.push_back(a.name);
  r.manifest = {
      {"stage", "compile"},
      {"config", config_to_json(cfg)},
      {"files",
       ordered_json::array({train_entry, eval_entry,
                            file_entry(sources_path, r.eval.plans.size() + r.eval.traces.size())})},
      {"split", {{"seen", seen}, {"unseen", unseen}}},
      {"skipped", r.train.skipped.size()},
      {"oracle", {{"checked", checked}, {"mismatches", r.oracle.mismatches.size()}}}};
  write_json(cfg.out / "compile.manifest.json", r.manifest);

  log << "[compile] train " << r.train.examples.size() << " records (" << r.train.skipped.size() << " skipped)\n";
  for (const auto& [task, n] : train_entry.at("counts").items()) log << "[compile]   " << task << " " << n << "\n";
  log << "[compile] eval " << r.eval.examples.size() << " records\n";
  for (const auto& [task, n] : eval_entry.at("counts").items()) log << "[compile]   " << task << " " << n << "\n";
  log << "[compile] oracle checked " << r.oracle.total() << " gold answers, " << r.oracle.mismatches.size()
      << " mismatches\n";
  if (!r.oracle.ok()) throw OracleError(r.oracle);
  return r;
}

std::vector<ScoreReport> cmd_score(const PipelineConfig& cfg, const fs::path& predictions, std::ostream& log,
                                   const std::optional<fs::path>& eval) {
  const auto eval_path = eval.value_or(cfg.out / "eval.jsonl");
  std::vector<ScoreReport> reports;
  try {
    reports = score_file(predictions.string(), eval_path.string(), std::max(1u, cfg.jobs));
  } catch (const std::exception& e) {
    throw StageError("score", e.what());
  }
  ordered_json doc = ordered_json::array();
  for (const auto& r : reports) doc.push_back(to_json(r));
  fs::create_directories(cfg.out);
  write_json(cfg.out / "scores.json", doc);
  log << format_reports(reports);
  return reports;
}

DemoReport cmd_ewc_demo(const PipelineConfig& cfg, std::ostream& log) {
  auto demo = cfg.demo;
  demo.seed = cfg.seed;
  demo.jobs = std::max(1u, cfg.jobs);
  DemoReport report;
  try {
    demo.validate();
    report = toy_continual_demo(demo, cfg.lambdas);
  } catch (const std::exception& e) {
    throw StageError("ewc-demo", e.what());
  }
  fs::create_directories(cfg.out);
  write_json(cfg.out / "ewc_demo.json", to_json(report));
  log << format_demo(report);
  return report;
}

void cmd_validate(const PipelineConfig& cfg, std::ostream& log) {
  int manifests = 0;
  for (const char* name : {"collect.manifest.json", "compile.manifest.json"}) {
    const auto path = cfg.out / name;
    if (!fs::exists(path)) continue;
    ++manifests;
    const auto manifest = read_json(path, "validate");
    for (const auto& entry : manifest.at("files")) {
      const auto file = cfg.out / entry.at("file").get<std::string>();
      if (!fs::exists(file)) throw StageError("validate", file.string() + " is listed in " + name + " but missing");
      const auto bytes = read_text_file(file.string());
      const auto want = entry.at("fnv1a64").get<std::string>();
      const auto got = hex64(fnv1a64(bytes));
      if (got != want || bytes.size() != entry.at("bytes").get<std::size_t>()) {
        throw StageError("validate", file.string() + " hash " + got + " does not match manifest " + want);
      }
      log << "[validate] " << file.string() << " ok\n";
    }
  }
  if (manifests == 0) throw StageError("validate", "no manifests under " + cfg.out.string());

  const auto eval_path = cfg.out / "eval.jsonl";
  const auto sources_path = cfg.out / "eval_sources.jsonl";
  if (!fs::exists(eval_path) || !fs::exists(sources_path)) return;
  const auto in = load_inputs(cfg, "validate");
  std::vector<EvalExample> examples;
  ExperienceSet sources;
  try {
    examples = read_eval_jsonl(read_text_file(eval_path.string()));
    sources = experiences_from_jsonl(read_text_file(sources_path.string()), in.catalog, sources_path.string());
  } catch (const std::exception& e) {
    throw StageError("validate", e.what());
  }
  const auto report = verify_eval_gold(examples, sources.plans, sources.traces, in.library);
  log << "[validate] oracle checked " << report.total() << " gold answers, " << report.mismatches.size()
      << " mismatches\n";
  if (!report.ok()) throw OracleError(report);
}

}  // namespace embexp
