#include "embexp/experience.hpp"

#include <sstream>

namespace embexp {
namespace {

using ojson = nlohmann::ordered_json;

ojson steps_to_json(const std::vector<ActionStep>& steps) {
  ojson out = ojson::array();
  for (const auto& s : steps) out.push_back(step_to_json(s));
  return out;
}

std::vector<ActionStep> steps_from_json(const nlohmann::json& doc) {
  std::vector<ActionStep> out;
  for (const auto& s : doc) out.push_back(step_from_json(s));
  return out;
}

ojson goal_to_json(const Goal& g) {
  ojson out = ojson::array();
  for (const auto& p : g) out.push_back(p.to_string());
  return out;
}

Goal goal_from_json(const nlohmann::json& doc) {
  std::vector<Predicate> preds;
  for (const auto& p : doc) preds.push_back(parse_predicate(p.get<std::string>()));
  return Goal(std::move(preds));
}

ojson envelope(std::string_view kind, ojson payload, std::uint64_t seed, const WorldState& s) {
  ojson out;
  out["kind"] = kind;
  out["seed"] = seed;
  out["catalog_version"] = s.catalog->version();
  out["payload"] = std::move(payload);
  return out;
}

void check_envelope(const nlohmann::json& doc, std::string_view kind, const CatalogPtr& catalog) {
  if (doc.at("kind").get<std::string>() != kind) {
    throw ExperienceError("expected a '" + std::string(kind) + "' record");
  }
  const auto version = doc.at("catalog_version").get<std::string>();
  if (version != catalog->version()) {
    throw ExperienceError("record built against catalog '" + version + "', loaded catalog is '" +
                          catalog->version() + "'");
  }
}

}  // namespace

ojson activity_to_json(const Activity& a) {
  ojson out;
  out["name"] = a.name;
  out["room"] = a.room;
  out["goal"] = goal_to_json(a.goal);
  out["relevant"] = a.relevant_classes;
  out["description"] = a.description;
  return out;
}

Activity activity_from_json(const nlohmann::json& doc) {
  Activity a;
  a.name = doc.at("name").get<std::string>();
  a.room = doc.at("room").get<std::string>();
  a.goal = goal_from_json(doc.at("goal"));
  a.relevant_classes = doc.at("relevant").get<std::vector<std::string>>();
  a.description = doc.value("description", "");
  return a;
}

ojson plan_record(const PlanEpisode& e) {
  ojson p;
  p["id"] = e.id;
  p["activity"] = activity_to_json(e.activity);
  p["success"] = e.success;
  p["initial_condition"] = e.initial_condition;
  p["plan_text"] = render_plan_text(e.initial_state, e.steps);
  p["steps"] = steps_to_json(e.steps);
  ojson rewards = ojson::array();
  for (const auto& r : e.per_step_reward) rewards.push_back(rational_to_string(r));
  p["rewards"] = std::move(rewards);
  p["total_reward"] = rational_to_string(e.total_reward());
  p["satisfaction_events"] = e.satisfaction_events;
  p["remaining"] = goal_to_json(e.remaining);
  p["stats"] = {{"simulations", e.stats.simulations},
                {"nodes", e.stats.nodes},
                {"max_tree_depth", e.stats.max_tree_depth},
                {"committed_visits", e.stats.committed_visits}};
  p["initial_state"] = state_to_json(e.initial_state);
  return envelope("plan", std::move(p), e.seed, e.initial_state);
}

ojson explore_record(const ExplorationTrace& t) {
  ojson p;
  p["id"] = t.id;
  p["n_agents"] = t.n_agents;
  p["agent_names"] = t.agent_names;
  p["steps"] = steps_to_json(t.steps);
  ojson paths = ojson::array();
  for (const auto& [id, rooms] : t.object_paths) paths.push_back({{"object", id}, {"rooms", rooms}});
  p["object_paths"] = std::move(paths);
  ojson finals = ojson::array();
  for (const auto& [holder, objs] : t.final_locations) {
    finals.push_back({{"holder", holder}, {"objects", objs}});
  }
  p["final_locations"] = std::move(finals);
  p["initial_state"] = state_to_json(t.initial_state);
  return envelope("explore", std::move(p), t.seed, t.initial_state);
}

PlanEpisode plan_from_record(const nlohmann::json& doc, const CatalogPtr& catalog) {
  check_envelope(doc, "plan", catalog);
  const auto& p = doc.at("payload");
  PlanEpisode e;
  e.seed = doc.at("seed").get<std::uint64_t>();
  e.id = p.at("id").get<std::string>();
  e.activity = activity_from_json(p.at("activity"));
  e.success = p.at("success").get<bool>();
  e.initial_condition = p.at("initial_condition").get<std::string>();
  e.initial_state = state_from_json(p.at("initial_state"), catalog);
  e.steps = steps_from_json(p.at("steps"));
  for (const auto& r : p.at("rewards")) e.per_step_reward.push_back(parse_rational(r.get<std::string>()));
  if (e.per_step_reward.size() != e.steps.size()) throw ExperienceError("rewards and steps differ in length");
  e.satisfaction_events = p.at("satisfaction_events").get<int>();
  e.remaining = goal_from_json(p.at("remaining"));
  const auto& st = p.at("stats");
  e.stats.simulations = st.at("simulations").get<std::uint64_t>();
  e.stats.nodes = st.at("nodes").get<std::uint64_t>();
  e.stats.max_tree_depth = st.at("max_tree_depth").get<int>();
  e.stats.committed_visits = st.at("committed_visits").get<std::vector<int>>();
  return e;
}

ExplorationTrace trace_from_record(const nlohmann::json& doc, const CatalogPtr& catalog) {
  check_envelope(doc, "explore", catalog);
  const auto& p = doc.at("payload");
  ExplorationTrace t;
  t.seed = doc.at("seed").get<std::uint64_t>();
  t.id = p.at("id").get<std::string>();
  t.n_agents = p.at("n_agents").get<int>();
  t.agent_names = p.at("agent_names").get<std::vector<std::string>>();
  t.steps = steps_from_json(p.at("steps"));
  for (const auto& e : p.at("object_paths")) {
    t.object_paths[e.at("object").get<int>()] = e.at("rooms").get<std::vector<int>>();
  }
  for (const auto& e : p.at("final_locations")) {
    t.final_locations[e.at("holder").get<int>()] = e.at("objects").get<std::vector<int>>();
  }
  t.initial_state = state_from_json(p.at("initial_state"), catalog);
  return t;
}

std::string experiences_to_jsonl(const ExperienceSet& set) {
  std::string out;
  for (const auto& e : set.plans) out += plan_record(e).dump() + "\n";
  for (const auto& t : set.traces) out += explore_record(t).dump() + "\n";
  return out;
}

ExperienceSet experiences_from_jsonl(std::string_view text, const CatalogPtr& catalog,
                                     std::string_view source) {
  ExperienceSet set;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      const auto kind = doc.at("kind").get<std::string>();
      if (kind == "plan") {
        set.plans.push_back(plan_from_record(doc, catalog));
      } else if (kind == "explore") {
        set.traces.push_back(trace_from_record(doc, catalog));
      } else {
        throw ExperienceError("unknown record kind '" + kind + "'");
      }
    } catch (const std::exception& ex) {
      throw ExperienceError(std::string(source) + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return set;
}

}  // namespace embexp
