#include "embexp/goals.hpp"

#include <algorithm>
#include <array>
#include <set>

#include <nlohmann/json.hpp>

#include "embexp/util.hpp"

namespace embexp {
namespace {

struct KindInfo {
  std::string_view name;
  int arity;
  bool agent_first;
};

constexpr std::array<KindInfo, 10> kKinds{{
    {"ON", 2, false},
    {"IN", 2, false},
    {"OPEN", 1, false},
    {"CLOSED", 1, false},
    {"SWITCHED_ON", 1, false},
    {"SWITCHED_OFF", 1, false},
    {"HOLDS", 2, true},
    {"SITTING", 2, true},
    {"LYING", 2, true},
    {"CLEAN", 1, false},
}};

const KindInfo& kind_info(PredicateKind k) { return kKinds.at(static_cast<std::size_t>(k)); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

Term parse_term(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw GoalError("empty predicate argument");
  if (text == "agent") return Term::any_agent();
  if (text.front() == '#' || text.front() == '@') {
    int id = 0;
    for (char c : text.substr(1)) {
      if (c < '0' || c > '9') throw GoalError("bad id argument '" + std::string(text) + "'");
      id = id * 10 + (c - '0');
    }
    if (text.size() == 1) throw GoalError("bad id argument '" + std::string(text) + "'");
    return text.front() == '#' ? Term::object(id) : Term::agent(id);
  }
  return Term::of_class(std::string(text));
}

// Instances matched by an object term.
template <typename Fn>
bool any_object(const WorldState& s, const Term& t, Fn&& fn) {
  if (t.kind == Term::Kind::ObjectId) return fn(s.object(t.id));
  const int cls = s.catalog->find(t.class_name);
  for (const auto& o : s.objects) {
    if (o.class_index == cls && fn(o)) return true;
  }
  return false;
}

template <typename Fn>
bool any_agent(const WorldState& s, const Term& t, Fn&& fn) {
  if (t.kind == Term::Kind::AgentId) return fn(s.agent(t.id));
  return std::any_of(s.agents.begin(), s.agents.end(), fn);
}

bool term_matches(const WorldState& s, const Term& t, int object) {
  if (t.kind == Term::Kind::ObjectId) return t.id == object;
  return s.objects[static_cast<std::size_t>(object)].class_index == s.catalog->find(t.class_name);
}

}  // namespace

std::string_view predicate_kind_name(PredicateKind k) { return kind_info(k).name; }

int predicate_arity(PredicateKind k) { return kind_info(k).arity; }

std::string Term::to_string() const {
  switch (kind) {
    case Kind::ClassName: return class_name;
    case Kind::ObjectId: return "#" + std::to_string(id);
    case Kind::AnyAgent: return "agent";
    case Kind::AgentId: return "@" + std::to_string(id);
  }
  return {};
}

std::string Predicate::to_string() const {
  std::string out(predicate_kind_name(kind));
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i > 0) out += ", ";
    out += args[i].to_string();
  }
  out += ')';
  return out;
}

Predicate parse_predicate(std::string_view text) {
  text = trim(text);
  const auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') {
    throw GoalError("malformed predicate '" + std::string(text) + "'");
  }
  const auto name = trim(text.substr(0, open));
  Predicate p;
  auto it = std::find_if(kKinds.begin(), kKinds.end(), [&](const KindInfo& k) { return k.name == name; });
  if (it == kKinds.end()) throw GoalError("unknown predicate '" + std::string(name) + "'");
  p.kind = static_cast<PredicateKind>(it - kKinds.begin());

  auto body = text.substr(open + 1, text.size() - open - 2);
  while (true) {
    const auto comma = body.find(',');
    p.args.push_back(parse_term(body.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  if (static_cast<int>(p.args.size()) != it->arity) {
    throw GoalError(std::string(name) + " takes " + std::to_string(it->arity) + " argument(s)");
  }
  for (std::size_t i = 0; i < p.args.size(); ++i) {
    const bool want_agent = it->agent_first && i == 0;
    if (p.args[i].is_agent() != want_agent) {
      throw GoalError("argument " + std::to_string(i + 1) + " of " + std::string(name) +
                      (want_agent ? " must be an agent" : " must be an object"));
    }
  }
  return p;
}

std::vector<std::string> predicate_classes(const Predicate& p) {
  std::vector<std::string> out;
  for (const auto& t : p.args) {
    if (t.kind == Term::Kind::ClassName) out.push_back(t.class_name);
  }
  return out;
}

Goal::Goal(std::vector<Predicate> predicates) : predicates_(std::move(predicates)) {
  std::sort(predicates_.begin(), predicates_.end());
  predicates_.erase(std::unique(predicates_.begin(), predicates_.end()), predicates_.end());
}

bool Goal::contains(const Predicate& p) const {
  return std::binary_search(predicates_.begin(), predicates_.end(), p);
}

Goal Goal::minus(const Goal& other) const {
  std::vector<Predicate> out;
  std::set_difference(predicates_.begin(), predicates_.end(), other.predicates_.begin(),
                      other.predicates_.end(), std::back_inserter(out));
  Goal g;
  g.predicates_ = std::move(out);
  return g;
}

std::string Goal::to_string() const {
  std::vector<std::string> parts;
  for (const auto& p : predicates_) parts.push_back(p.to_string());
  return join(parts, ";");
}

void check_resolvable(const WorldState& state, const Predicate& p) {
  if (static_cast<int>(p.args.size()) != predicate_arity(p.kind)) {
    throw GoalError("wrong arity in " + p.to_string());
  }
  for (const auto& t : p.args) {
    switch (t.kind) {
      case Term::Kind::ClassName:
        if (state.first_instance(t.class_name) < 0) {
          throw GoalError("no '" + t.class_name + "' in the scene for " + p.to_string());
        }
        break;
      case Term::Kind::ObjectId:
        if (!state.is_object(t.id)) throw GoalError("unknown object id in " + p.to_string());
        break;
      case Term::Kind::AnyAgent:
        if (state.agents.empty()) throw GoalError("no agent in the scene for " + p.to_string());
        break;
      case Term::Kind::AgentId:
        if (!state.is_agent(t.id)) throw GoalError("unknown agent id in " + p.to_string());
        break;
    }
  }
}

bool evaluate_predicate(const WorldState& s, const Predicate& p) {
  check_resolvable(s, p);
  const auto& a = p.args[0];
  auto flag = [&](StateFlag f) {
    return any_object(s, a, [&](const ObjectInstance& o) { return o.has(f); });
  };
  auto related = [&](Relation rel) {
    return any_object(s, a, [&](const ObjectInstance& o) {
      return o.support && o.support->kind == rel && term_matches(s, p.args[1], o.support->holder);
    });
  };
  switch (p.kind) {
    case PredicateKind::On: return related(Relation::On);
    case PredicateKind::In: return related(Relation::In);
    case PredicateKind::Open: return flag(StateFlag::Open);
    case PredicateKind::Closed: return flag(StateFlag::Closed);
    case PredicateKind::SwitchedOn: return flag(StateFlag::SwitchedOn);
    case PredicateKind::SwitchedOff: return flag(StateFlag::SwitchedOff);
    case PredicateKind::Clean: return flag(StateFlag::Clean);
    case PredicateKind::Holds:
      return any_agent(s, a, [&](const Agent& ag) {
        return std::any_of(ag.holding.begin(), ag.holding.end(),
                           [&](int h) { return term_matches(s, p.args[1], h); });
      });
    case PredicateKind::Sitting:
      return any_agent(s, a, [&](const Agent& ag) {
        return ag.posture == Posture::Sitting && term_matches(s, p.args[1], ag.posture_target);
      });
    case PredicateKind::Lying:
      return any_agent(s, a, [&](const Agent& ag) {
        return (ag.posture == Posture::Lying || ag.posture == Posture::Sleeping) &&
               term_matches(s, p.args[1], ag.posture_target);
      });
  }
  return false;
}

Goal satisfied_subset(const WorldState& state, const Goal& g) {
  std::vector<Predicate> out;
  for (const auto& p : g) {
    if (evaluate_predicate(state, p)) out.push_back(p);
  }
  return Goal(std::move(out));
}

std::vector<Activity> parse_activity_library(std::string_view text, const Catalog& catalog,
                                             const LibraryRequirements& req,
                                             std::string_view source) {
  std::vector<Activity> out;
  std::set<std::string> names;
  std::set<std::string> rooms;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    const auto line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.empty()) continue;

    const std::string where = std::string(source) + ":" + std::to_string(line_no) + ": ";
    Activity act;
    try {
      const auto doc = nlohmann::json::parse(line);
      act.name = doc.at("name").get<std::string>();
      act.room = doc.value("room", std::string{});
      act.relevant_classes = doc.at("relevant").get<std::vector<std::string>>();
      act.description = doc.value("description", std::string{});
      std::vector<Predicate> preds;
      for (const auto& p : doc.at("goal")) preds.push_back(parse_predicate(p.get<std::string>()));
      const std::size_t listed = preds.size();
      act.goal = Goal(std::move(preds));
      if (act.goal.empty()) throw GoalError("empty goal");
      if (act.goal.size() != listed) throw GoalError("duplicate goal predicate");
    } catch (const nlohmann::json::exception& e) {
      throw GoalError(where + e.what());
    } catch (const GoalError& e) {
      throw GoalError(where + e.what());
    }

    if (!names.insert(act.name).second) {
      throw GoalError(where + "duplicate activity name '" + act.name + "'");
    }
    for (const auto& cls : act.relevant_classes) {
      if (catalog.find(cls) < 0) throw GoalError(where + "unknown class '" + cls + "'");
    }
    for (const auto& p : act.goal) {
      for (const auto& cls : predicate_classes(p)) {
        if (catalog.find(cls) < 0) throw GoalError(where + "unknown class '" + cls + "'");
        if (std::find(act.relevant_classes.begin(), act.relevant_classes.end(), cls) ==
            act.relevant_classes.end()) {
          throw GoalError(where + "goal class '" + cls + "' missing from relevant classes");
        }
      }
      for (const auto& t : p.args) {
        if (t.kind == Term::Kind::ObjectId || t.kind == Term::Kind::AgentId) {
          throw GoalError(where + "library goals must use class names");
        }
      }
    }
    if (!act.room.empty()) {
      const int r = catalog.find(act.room);
      if (r < 0 || !catalog.at(r).is_room()) throw GoalError(where + "unknown room '" + act.room + "'");
      rooms.insert(act.room);
    }
    out.push_back(std::move(act));
  }

  if (out.size() < req.min_activities) {
    throw GoalError(std::string(source) + ": " + std::to_string(out.size()) +
                    " activities, need at least " + std::to_string(req.min_activities));
  }
  if (rooms.size() < req.min_rooms) {
    throw GoalError(std::string(source) + ": activities span " + std::to_string(rooms.size()) +
                    " rooms, need at least " + std::to_string(req.min_rooms));
  }
  return out;
}

std::vector<Activity> load_activity_library(const std::string& path, const Catalog& catalog,
                                            const LibraryRequirements& req) {
  return parse_activity_library(read_text_file(path), catalog, req, path);
}

const Activity& find_activity(const std::vector<Activity>& library, std::string_view name) {
  for (const auto& a : library) {
    if (a.name == name) return a;
  }
  throw GoalError("unknown activity '" + std::string(name) + "'");
}

}  // namespace embexp
