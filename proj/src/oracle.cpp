#include "embexp/oracle.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "embexp/util.hpp"

namespace embexp {
namespace {

// Room an object is in, read straight off the state rather than through
// effective_room.
int room_of(const WorldState& s, int obj) {
  const auto& o = s.object(obj);
  if (o.holder) return s.agent(*o.holder).location;
  return o.location;
}

bool ends_with(std::string_view text, std::string_view suffix) {
  return text.size() >= suffix.size() && text.substr(text.size() - suffix.size()) == suffix;
}

struct Checker {
  OracleReport& report;
  const EvalExample& ex;

  void fail(const std::string& message) { report.mismatches.push_back({ex.id, message}); }
  bool expect(bool cond, const std::string& message) {
    if (!cond) fail(message);
    return cond;
  }
};

std::vector<int> replayed_path(const ExplorationTrace& t, int obj) {
  WorldState s = t.initial_state;
  std::vector<int> path{room_of(s, obj)};
  for (const auto& step : t.steps) {
    apply_action_in_place(s, step);
    const int room = room_of(s, obj);
    if (room != path.back()) path.push_back(room);
  }
  return path;
}

// Every instance of the object's class named in a step must be the object.
bool unambiguous(const ExplorationTrace& t, int obj) {
  const auto& s = t.initial_state;
  for (const auto& step : t.steps) {
    for (int i = 0; i < step.arity(); ++i) {
      const int id = step.args[static_cast<std::size_t>(i)];
      if (id != obj && s.object(id).class_index == s.object(obj).class_index) return false;
    }
  }
  return true;
}

void check_counting(Checker& c, const ExplorationTrace& t) {
  const int holder = c.ex.facts.at("location").get<int>();
  const auto rel = c.ex.facts.at("relation").get<std::string>();
  const Verb verb = rel == "in" ? Verb::PutIn : Verb::Put;
  const auto& init = t.initial_state;
  if (!c.expect(init.is_object(holder), "counting location " + std::to_string(holder) + " is not an object")) return;

  WorldState s = init;
  std::map<int, int> last_target;
  std::set<int> receivers;
  bool other_verb = false;
  for (const auto& step : t.steps) {
    if (!c.expect(is_admissible(s, step), "trace step is not admissible on replay")) return;
    apply_action_in_place(s, step);
    if (step.verb != Verb::Put && step.verb != Verb::PutIn) continue;
    last_target[step.args[0]] = step.args[1];
    if (init.object(step.args[1]).class_index == init.object(holder).class_index) {
      receivers.insert(step.args[1]);
      if (step.args[1] == holder && step.verb != verb) other_verb = true;
    }
  }
  c.expect(receivers.size() == 1 && *receivers.begin() == holder,
           "another instance of '" + init.name_of(holder) + "' received a placement");
  c.expect(!other_verb, "placements on the holder use a different relation than '" + rel + "'");

  int count = 0;
  for (const auto& [obj, target] : last_target) {
    const auto& o = s.object(obj);
    if (target == holder && o.support && o.support->holder == holder) ++count;
  }
  c.expect(c.ex.gold == std::to_string(count),
           "gold '" + c.ex.gold + "' but replay counts " + std::to_string(count));
  c.expect(ends_with(c.ex.prompt, "How many items are there " + rel + " the " + init.name_of(holder) + "?\nA: "),
           "prompt does not ask about the " + init.name_of(holder));
}

void check_path(Checker& c, const ExplorationTrace& t) {
  const int obj = c.ex.facts.at("object").get<int>();
  const auto& init = t.initial_state;
  if (!c.expect(init.is_object(obj), "tracked object " + std::to_string(obj) + " is not an object")) return;
  c.expect(unambiguous(t, obj), "another '" + init.name_of(obj) + "' appears in the trace");
  const auto path = replayed_path(t, obj);
  std::vector<std::string> names;
  for (int room : path) names.push_back(init.name_of(room));
  const auto expected = join(names, ", ");
  c.expect(c.ex.gold == expected, "gold '" + c.ex.gold + "' but replay gives '" + expected + "'");
  c.expect(path.size() >= 2, "object never changed rooms");
  c.expect(ends_with(c.ex.prompt, "rooms where the " + init.name_of(obj) + " appeared?\nAnswer: "),
           "prompt does not ask about the " + init.name_of(obj));
}

void check_location(Checker& c, const ExplorationTrace& t) {
  const int obj = c.ex.facts.at("object").get<int>();
  const int ref = c.ex.facts.at("reference_room").get<int>();
  const auto prep = c.ex.facts.at("preposition").get<std::string>();
  const auto& init = t.initial_state;
  if (!c.expect(init.is_object(obj) && init.is_room(ref), "location facts name unknown ids")) return;
  c.expect(unambiguous(t, obj), "another '" + init.name_of(obj) + "' appears in the trace");
  const auto path = replayed_path(t, obj);
  const auto n = std::count(path.begin(), path.end(), ref);
  if (!c.expect(n == 1, "reference room occurs " + std::to_string(n) + " times in the path")) return;
  const auto pos = static_cast<std::size_t>(std::find(path.begin(), path.end(), ref) - path.begin());
  int answer = -1;
  if (prep == "before" && pos > 0) answer = path[pos - 1];
  if (prep == "after" && pos + 1 < path.size()) answer = path[pos + 1];
  if (!c.expect(answer >= 0, "no room " + prep + " the reference room")) return;
  c.expect(c.ex.gold == init.name_of(answer), "gold '" + c.ex.gold + "' but replay gives '" + init.name_of(answer) + "'");
  c.expect(ends_with(c.ex.prompt, "Where is the " + init.name_of(obj) + " " + prep + " the " + init.name_of(ref) +
                                      "?\nAnswer: "),
           "prompt does not match the question");
}

bool holds(const WorldState& s, const Goal& g) {
  try {
    for (const auto& p : g) {
      if (!evaluate_predicate(s, p)) return false;
    }
    return true;
  } catch (const GoalError&) {
    return false;
  }
}

// Each goal predicate counts once it has held, initially or after some step.
void check_activity(Checker& c, const PlanEpisode& e, const std::map<std::string, const Activity*>& library) {
  const auto gold_it = library.find(e.activity.name);
  if (!c.expect(gold_it != library.end(), "activity '" + e.activity.name + "' is not in the library")) return;
  const auto& goal = gold_it->second->goal;
  std::vector<bool> met(goal.size(), false);
  auto mark = [&](const WorldState& s) {
    for (std::size_t i = 0; i < goal.size(); ++i) {
      if (!met[i]) met[i] = holds(s, Goal({goal.predicates()[i]}));
    }
  };
  WorldState s = e.initial_state;
  mark(s);
  for (const auto& step : e.steps) {
    if (!c.expect(is_admissible(s, step), "plan step is not admissible on replay")) return;
    apply_action_in_place(s, step);
    mark(s);
  }
  c.expect(std::all_of(met.begin(), met.end(), [](bool m) { return m; }),
           "goal of '" + e.activity.name + "' was never fully reached during the plan");
  c.expect(c.ex.gold == e.activity.name, "gold '" + c.ex.gold + "' is not the plan's activity");
  const bool index_ok = c.ex.gold_index >= 0 && static_cast<std::size_t>(c.ex.gold_index) < c.ex.choices.size();
  if (!c.expect(index_ok, "gold_index out of range")) return;
  c.expect(c.ex.choices[static_cast<std::size_t>(c.ex.gold_index)] == c.ex.gold, "choices[gold_index] is not gold");
  for (std::size_t i = 0; i < c.ex.choices.size(); ++i) {
    if (static_cast<int>(i) == c.ex.gold_index) continue;
    const auto it = library.find(c.ex.choices[i]);
    if (!c.expect(it != library.end(), "distractor '" + c.ex.choices[i] + "' is not in the library")) continue;
    c.expect(!holds(s, it->second->goal), "distractor '" + c.ex.choices[i] + "' also holds after the plan");
  }
}

}  // namespace

int OracleReport::total() const {
  int n = 0;
  for (const auto& [task, count] : checked) n += count;
  return n;
}

OracleReport verify_eval_gold(std::span<const EvalExample> examples, std::span<const PlanEpisode> plans,
                              std::span<const ExplorationTrace> traces, std::span<const Activity> library) {
  std::map<std::string, const PlanEpisode*> plan_by_id;
  for (const auto& p : plans) plan_by_id[p.id] = &p;
  std::map<std::string, const ExplorationTrace*> trace_by_id;
  for (const auto& t : traces) trace_by_id[t.id] = &t;
  std::map<std::string, const Activity*> by_name;
  for (const auto& a : library) by_name[a.name] = &a;

  OracleReport report;
  for (const auto& ex : examples) {
    Checker c{report, ex};
    const bool trace_task = ex.task == EvalTask::CountingQa || ex.task == EvalTask::ObjectPathTrackingEval ||
                            ex.task == EvalTask::ObjectLocationQa;
    const bool plan_task = ex.task == EvalTask::ActivityRecognitionQa || ex.task == EvalTask::ActivityInferenceQa;
    if (!trace_task && !plan_task) continue;
    ++report.checked[std::string(eval_task_name(ex.task))];
    try {
      if (trace_task) {
        const auto it = trace_by_id.find(ex.meta.source);
        if (!c.expect(it != trace_by_id.end(), "source trace '" + ex.meta.source + "' not found")) continue;
        if (ex.task == EvalTask::CountingQa) check_counting(c, *it->second);
        if (ex.task == EvalTask::ObjectPathTrackingEval) check_path(c, *it->second);
        if (ex.task == EvalTask::ObjectLocationQa) check_location(c, *it->second);
      } else {
        const auto it = plan_by_id.find(ex.meta.source);
        if (!c.expect(it != plan_by_id.end(), "source plan '" + ex.meta.source + "' not found")) continue;
        check_activity(c, *it->second, by_name);
      }
    } catch (const std::exception& err) {
      c.fail(std::string("replay failed: ") + err.what());
    }
  }
  return report;
}

}  // namespace embexp
