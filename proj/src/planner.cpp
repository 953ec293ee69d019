#include "embexp/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "embexp/util.hpp"

namespace embexp {
namespace {

double to_double(const Rational& r) { return boost::rational_cast<double>(r); }

struct Search {
  const PlannerConfig& cfg;
  const std::vector<bool>& relevant;
  Rng& rng;
  SearchStats& stats;

  void expand(SearchNode& node) {
    node.actions = planner_candidates(node.state, 0, relevant);
    node.children.resize(node.actions.size());
    node.expanded = true;
  }

  std::unique_ptr<SearchNode> make_child(const SearchNode& parent, const ActionStep& step) {
    auto child = std::make_unique<SearchNode>();
    child->state = parent.state;
    apply_action_in_place(child->state, step);
    const auto sr = step_reward(parent.remaining, child->state, cfg);
    child->remaining = sr.remaining;
    child->reward = to_double(sr.reward);
    child->incoming = step;
    ++stats.nodes;
    return child;
  }

  double rollout(const SearchNode& leaf, int budget) {
    if (leaf.terminal() || budget <= 0) return 0.0;
    WorldState state = leaf.state;
    Goal remaining = leaf.remaining;
    double total = 0.0;
    for (int d = 0; d < budget && !remaining.empty(); ++d) {
      const auto options = planner_candidates(state, 0, relevant);
      if (options.empty()) break;
      apply_action_in_place(state, rng.pick(options));
      const auto sr = step_reward(remaining, state, cfg);
      total += to_double(sr.reward);
      remaining = sr.remaining;
    }
    return total;
  }

  void simulate(SearchNode& root, int budget) {
    std::vector<SearchNode*> path{&root};
    SearchNode* node = &root;
    int depth = 0;
    while (!node->terminal() && depth < budget) {
      if (!node->expanded) expand(*node);
      if (node->actions.empty()) break;
      const auto idx = uct_select_index(*node, cfg.uct_c);
      auto& slot = node->children[idx];
      const bool fresh = slot == nullptr;
      if (fresh) slot = make_child(*node, node->actions[idx]);
      node = slot.get();
      path.push_back(node);
      ++depth;
      if (fresh) break;
    }
    stats.max_tree_depth = std::max(stats.max_tree_depth, depth);
    double ret = rollout(*node, std::min(cfg.rollout_depth, budget - depth));
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      ret += (*it)->reward;
      ++(*it)->visits;
      (*it)->total_value += ret;
    }
    ++stats.simulations;
  }
};

std::string sentence_for_room(const std::vector<std::string>& items, const std::string& room) {
  return "The " + join_with_and(items) + (items.size() > 1 ? " are" : " is") + " in the " + room +
         ".";
}

// Sentences about flags that differ from a freshly placed object.
void state_sentences(const WorldState& s, int id, std::vector<std::string>& out) {
  const auto& o = s.object(id);
  const auto& name = s.name_of(id);
  if (o.has(StateFlag::Open)) out.push_back("The " + name + " is open.");
  if (o.has(StateFlag::SwitchedOn)) out.push_back("The " + name + " is on.");
  if (o.has(StateFlag::Dirty)) out.push_back("The " + name + " is dirty.");
}

std::string confusing_fact(const WorldState& s, int id) {
  const auto& o = s.object(id);
  const auto& cls = s.class_of(id);
  const std::string subject = "The " + cls.name + " is ";
  if (cls.has(Property::Switchable)) return subject + (o.has(StateFlag::SwitchedOn) ? "on." : "off.");
  if (cls.has(Property::Openable)) return subject + (o.has(StateFlag::Open) ? "open." : "closed.");
  return subject + "in the " + s.name_of(effective_room(s, id)) + ".";
}

}  // namespace

std::string rational_to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

Rational parse_rational(std::string_view text) {
  auto bad = [&] { return std::invalid_argument("not a rational number: '" + std::string(text) + "'"); };
  auto parse_int = [&](std::string_view digits) {
    if (digits.empty()) throw bad();
    std::int64_t v = 0;
    for (char c : digits) {
      if (c < '0' || c > '9') throw bad();
      v = v * 10 + (c - '0');
    }
    return v;
  };
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  Rational out;
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto den = parse_int(text.substr(slash + 1));
    if (den == 0) throw bad();
    out = Rational(parse_int(text.substr(0, slash)), den);
  } else if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    const auto frac = text.substr(dot + 1);
    if (frac.size() > 12) throw bad();
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    const auto whole = dot == 0 ? 0 : parse_int(text.substr(0, dot));
    out = Rational(whole * scale + (frac.empty() ? 0 : parse_int(frac)), scale);
  } else {
    out = Rational(parse_int(text));
  }
  return negative ? -out : out;
}

void PlannerConfig::validate() const {
  if (!(reward_satisfy > 0)) throw std::invalid_argument("reward_satisfy must be positive");
  if (!(step_penalty < 0)) throw std::invalid_argument("step_penalty must be negative");
  if (max_depth < 1) throw std::invalid_argument("max_depth must be at least 1");
  if (rollout_depth < 0) throw std::invalid_argument("rollout_depth must be non-negative");
  if (simulations_per_step < 1) throw std::invalid_argument("simulations_per_step must be at least 1");
  if (!(uct_c >= 0.0)) throw std::invalid_argument("uct_c must be non-negative");
}

StepReward step_reward(const Goal& prev_remaining, const WorldState& new_state,
                       const PlannerConfig& cfg) {
  StepReward out;
  out.newly_satisfied = satisfied_subset(new_state, prev_remaining);
  out.remaining = prev_remaining.minus(out.newly_satisfied);
  out.reward = cfg.step_penalty;
  if (!out.newly_satisfied.empty()) {
    const auto n = static_cast<std::int64_t>(cfg.bonus_per_predicate ? out.newly_satisfied.size() : 1);
    out.reward += cfg.reward_satisfy * n;
  }
  return out;
}

std::size_t uct_select_index(const SearchNode& node, double uct_c) {
  if (node.actions.empty()) throw std::logic_error("uct_select on a node without children");
  for (std::size_t i = 0; i < node.actions.size(); ++i) {
    if (i >= node.children.size() || !node.children[i] || node.children[i]->visits == 0) return i;
  }
  const double log_n = std::log(static_cast<double>(std::max(node.visits, 1)));
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    const auto& c = *node.children[i];
    const double n = c.visits;
    const double score = c.total_value / n + uct_c * std::sqrt(log_n / n);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

ActionStep uct_select(const SearchNode& node, const PlannerConfig& cfg) {
  return node.actions[uct_select_index(node, cfg.uct_c)];
}

std::vector<bool> relevance_mask(const Catalog& catalog, const Activity& activity) {
  std::vector<bool> mask(catalog.size(), false);
  for (const auto& cls : activity.relevant_classes) {
    if (const int i = catalog.find(cls); i >= 0) mask[static_cast<std::size_t>(i)] = true;
  }
  for (const auto& p : activity.goal) {
    for (const auto& cls : predicate_classes(p)) {
      if (const int i = catalog.find(cls); i >= 0) mask[static_cast<std::size_t>(i)] = true;
    }
  }
  return mask;
}

std::vector<ActionStep> planner_candidates(const WorldState& state, int agent,
                                           const std::vector<bool>& relevant) {
  std::vector<char> rel(state.objects.size(), 0);
  for (const auto& o : state.objects) {
    if (!state.is_room(o.id) && relevant[static_cast<std::size_t>(o.class_index)]) rel[static_cast<std::size_t>(o.id)] = 1;
  }
  for (const auto& o : state.objects) {
    if (rel[static_cast<std::size_t>(o.id)] && o.support) rel[static_cast<std::size_t>(o.support->holder)] = 1;
  }

  std::vector<ActionStep> out;
  auto consider = [&](Verb v, int x = -1, int y = -1) {
    const auto step = make_step(agent, v, x, y);
    if (is_admissible(state, step)) out.push_back(step);
  };
  consider(Verb::StandUp);
  for (int r : state.rooms) consider(Verb::Walk, r);

  const auto& me = state.agent(agent);
  for (const auto& o : state.objects) {
    if (!rel[static_cast<std::size_t>(o.id)]) continue;
    // Cheap pre-filter: only objects in the agent's room can be acted on.
    if (o.location != me.location) continue;
    const bool grabbable = state.class_of(o.id).has(Property::Grabbable);
    for (Verb v : {Verb::Grab, Verb::Open, Verb::Close, Verb::SwitchOn, Verb::SwitchOff,
                   Verb::Sit, Verb::Lie, Verb::Drop}) {
      consider(v, o.id);
    }
    consider(grabbable ? Verb::Wash : Verb::Wipe, o.id);
  }
  for (int held : me.holding) {
    for (const auto& t : state.objects) {
      if (!rel[static_cast<std::size_t>(t.id)] || t.location != me.location || t.id == held) continue;
      consider(Verb::Put, held, t.id);
      consider(Verb::PutIn, held, t.id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Rational PlanEpisode::total_reward() const {
  Rational sum;
  for (const auto& r : per_step_reward) sum += r;
  return sum;
}

PlanEpisode plan(const WorldState& state, const Activity& activity, const PlannerConfig& cfg) {
  cfg.validate();
  if (state.agents.empty()) throw PlanningError("scene has no agent");
  for (const auto& p : activity.goal) {
    try {
      check_resolvable(state, p);
    } catch (const GoalError& e) {
      throw PlanningError("activity '" + activity.name + "': unresolvable goal: " + e.what());
    }
  }

  PlanEpisode ep;
  ep.activity = activity;
  ep.initial_state = state;
  ep.seed = mix_seed(cfg.seed, fnv1a64(activity.name));
  ep.id = "plan-" + hex64(mix_seed(ep.seed, state_hash(state)));
  ep.initial_condition = render_initial_condition(state, activity, false, ep.seed);

  Goal remaining = activity.goal.minus(satisfied_subset(state, activity.goal));
  const auto mask = relevance_mask(*state.catalog, activity);
  Rng rng(ep.seed);
  Search search{cfg, mask, rng, ep.stats};

  auto root = std::make_unique<SearchNode>();
  root->state = state;
  root->remaining = remaining;

  while (!remaining.empty() && static_cast<int>(ep.steps.size()) < cfg.max_depth) {
    const int budget = cfg.max_depth - static_cast<int>(ep.steps.size());
    for (int i = 0; i < cfg.simulations_per_step; ++i) search.simulate(*root, budget);
    if (root->actions.empty()) {
      if (ep.steps.empty()) {
        throw PlanningError("activity '" + activity.name + "': zero admissible actions");
      }
      break;
    }
    std::size_t best = 0;
    int best_visits = -1;
    for (std::size_t i = 0; i < root->children.size(); ++i) {
      const int v = root->children[i] ? root->children[i]->visits : 0;
      if (v > best_visits) {
        best_visits = v;
        best = i;
      }
    }
    const ActionStep step = root->actions[best];
    auto child = std::move(root->children[best]);
    if (!child) child = search.make_child(*root, step);
    // Recomputed exactly; the tree only stores the floating-point value.
    const auto sr = step_reward(remaining, child->state, cfg);
    ep.steps.push_back(step);
    ep.per_step_reward.push_back(sr.reward);
    if (!sr.newly_satisfied.empty()) ++ep.satisfaction_events;
    ep.stats.committed_visits.push_back(best_visits);
    remaining = sr.remaining;
    root = std::move(child);
    root->incoming.reset();
    root->reward = 0.0;
  }

  ep.remaining = remaining;
  ep.success = remaining.empty();
  return ep;
}

std::string render_plan_text(const WorldState& initial, const std::vector<ActionStep>& steps) {
  std::string out;
  for (const auto& step : steps) {
    if (!out.empty()) out += ' ';
    out += render_action_to_text(initial, step);
    out += '.';
  }
  return out;
}

std::string render_initial_condition(const WorldState& state, const Activity& activity,
                                     bool confusing, std::uint64_t seed) {
  std::vector<std::string> rooms;
  std::map<std::string, std::vector<std::string>> by_room;
  std::vector<std::string> names;
  std::vector<int> objects;
  for (const auto& cls : activity.relevant_classes) {
    const int id = state.first_instance(cls);
    if (id < 0) continue;
    if (state.is_room(id)) {
      if (std::find(rooms.begin(), rooms.end(), cls) == rooms.end()) rooms.push_back(cls);
      continue;
    }
    const auto& room = state.name_of(effective_room(state, id));
    if (std::find(rooms.begin(), rooms.end(), room) == rooms.end()) rooms.push_back(room);
    by_room[room].push_back(cls);
    names.push_back(cls);
    objects.push_back(id);
  }

  std::vector<std::string> header = rooms;
  header.insert(header.end(), names.begin(), names.end());
  std::vector<std::string> sentences;
  for (const auto& room : rooms) {
    if (by_room.count(room)) sentences.push_back(sentence_for_room(by_room[room], room));
  }
  for (int id : objects) {
    const auto& o = state.object(id);
    if (o.support) {
      sentences.push_back("The " + state.name_of(id) + " is " +
                          (o.support->kind == Relation::On ? "on" : "in") + " the " +
                          state.name_of(o.support->holder) + ".");
    }
  }
  for (int id : objects) state_sentences(state, id, sentences);

  if (confusing) {
    const auto mask = relevance_mask(*state.catalog, activity);
    std::vector<int> pool;
    for (std::size_t c = 0; c < state.catalog->size(); ++c) {
      if (mask[c] || state.catalog->at(static_cast<int>(c)).is_room()) continue;
      const int id = state.first_instance(state.catalog->at(static_cast<int>(c)).name);
      if (id >= 0) pool.push_back(id);
    }
    Rng rng(mix_seed(seed, 0xc0f));
    rng.shuffle(pool);
    const auto k = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(rng.range(1, 3)));
    for (std::size_t i = 0; i < k; ++i) sentences.push_back(confusing_fact(state, pool[i]));
  }

  std::string out = join(header, ", ") + ".";
  for (const auto& s : sentences) out += " " + s;
  return out;
}

}  // namespace embexp
