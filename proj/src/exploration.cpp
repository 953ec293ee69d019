#include "embexp/exploration.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <set>

namespace embexp {
namespace {

constexpr std::array<std::string_view, 8> kNames{
    "Tom", "Mary", "John", "Sarah", "David", "Emma", "Peter", "Lucy",
};

constexpr std::array<std::string_view, 5> kMotion{
    "went to", "walked into", "travelled to", "moved to", "journeyed to",
};

bool is_move_step(const WorldState& s, const ActionStep& step) {
  if (step.verb == Verb::Walk || step.verb == Verb::Run) return true;
  return step.verb == Verb::Find && s.is_room(step.args[0]);
}

void record_paths(const WorldState& s, std::map<int, std::vector<int>>& paths) {
  for (auto& [id, path] : paths) {
    const int room = effective_room(s, id);
    if (path.back() != room) path.push_back(room);
  }
}

// Past-tense phrasing for verbs that do not change the agent's room.
std::string_view past_tense(Verb v) {
  switch (v) {
    case Verb::Grab: return "grabbed";
    case Verb::Open: return "opened";
    case Verb::Close: return "closed";
    case Verb::SwitchOn: return "turned on";
    case Verb::SwitchOff: return "turned off";
    case Verb::Drink: return "drank";
    case Verb::TurnTo: return "turned to";
    case Verb::LookAt: return "looked at";
    case Verb::Wipe: return "wiped";
    case Verb::PutOn: return "put on";
    case Verb::PutOff: return "took off";
    case Verb::Greet: return "greeted";
    case Verb::Drop: return "dropped";
    case Verb::Touch: return "touched";
    case Verb::Type: return "typed on";
    case Verb::Watch: return "watched";
    case Verb::Move: return "moved";
    case Verb::Wash: return "washed";
    case Verb::Rinse: return "rinsed";
    case Verb::Scrub: return "scrubbed";
    case Verb::Squeeze: return "squeezed";
    case Verb::PlugIn: return "plugged in";
    case Verb::PlugOut: return "unplugged";
    case Verb::Cut: return "cut";
    case Verb::Eat: return "ate";
    case Verb::Sit: return "sat on";
    case Verb::Lie: return "lay on";
    default: return "";
  }
}

}  // namespace

ActionCategory categorize(Verb v) {
  switch (v) {
    case Verb::Walk: return ActionCategory::Walk;
    case Verb::Grab: return ActionCategory::Grab;
    case Verb::Put: return ActionCategory::Put;
    case Verb::PutIn: return ActionCategory::PutIn;
    case Verb::Drop: return ActionCategory::Drop;
    case Verb::Run:
    case Verb::Find: return ActionCategory::OtherMove;
    default: return ActionCategory::Irrelevant;
  }
}

void PolicyBias::validate() const {
  for (double w : {walk, grab, put, put_in, drop, other_move}) {
    if (!(w >= 0.0)) throw std::invalid_argument("policy weights must be non-negative");
  }
  if (!(irrelevant_rate >= 0.0 && irrelevant_rate <= 1.0)) {
    throw std::invalid_argument("irrelevant_rate must lie in [0, 1]");
  }
}

RandomPolicy::RandomPolicy(PolicyBias bias) : bias_(bias) { bias_.validate(); }

RandomPolicy random_policy(const PolicyBias& bias) { return RandomPolicy(bias); }

ActionStep RandomPolicy::sample(const WorldState& state, int agent, Rng& rng) const {
  const auto all = enumerate_admissible_actions(state, agent);
  if (all.empty()) throw std::runtime_error("agent has no admissible action");
  std::array<std::vector<ActionStep>, 7> groups;
  for (const auto& s : all) groups[static_cast<std::size_t>(categorize(s.verb))].push_back(s);

  auto& irrelevant = groups[static_cast<std::size_t>(ActionCategory::Irrelevant)];
  if (!irrelevant.empty() && rng.bernoulli(bias_.irrelevant_rate)) return rng.pick(irrelevant);

  const std::array<double, 6> base{bias_.walk, bias_.grab, bias_.put, bias_.put_in, bias_.drop,
                                   bias_.other_move};
  std::array<double, 6> weights{};
  for (std::size_t i = 0; i < base.size(); ++i) weights[i] = groups[i].empty() ? 0.0 : base[i];
  const auto k = rng.weighted(weights);
  if (k < weights.size()) return rng.pick(groups[k]);
  // Nothing that moves objects is possible (e.g. the agent is seated).
  return rng.pick(irrelevant.empty() ? all : irrelevant);
}

ActionStep RandomPolicy::sample_movement(const WorldState& state, int agent, Rng& rng) const {
  std::vector<ActionStep> moves;
  for (int r : state.rooms) {
    const auto step = make_step(agent, Verb::Walk, r);
    if (is_admissible(state, step)) moves.push_back(step);
  }
  if (moves.empty()) return sample(state, agent, rng);
  return rng.pick(moves);
}

std::string agent_display_name(int agent) {
  const auto i = static_cast<std::size_t>(agent);
  std::string name(kNames[i % kNames.size()]);
  if (i >= kNames.size()) name += " " + std::to_string(i / kNames.size() + 1);
  return name;
}

std::map<int, std::vector<int>> final_locations_of(const WorldState& s) {
  std::map<int, std::vector<int>> out;
  for (const auto& o : s.objects) {
    if (s.is_room(o.id) || !s.class_of(o.id).has(Property::Grabbable)) continue;
    const int where = o.support ? o.support->holder : effective_room(s, o.id);
    out[where].push_back(o.id);
  }
  return out;
}

ExplorationTrace explore(const WorldState& state, int n_agents, int n_steps,
                         const RandomPolicy& policy, std::uint64_t seed) {
  if (n_agents < 1) throw std::invalid_argument("explore: n_agents must be at least 1");
  if (n_steps < 1) throw std::invalid_argument("explore: n_steps must be at least 1");
  if (static_cast<std::size_t>(n_agents) > state.rooms.size()) {
    throw std::invalid_argument("explore: cannot place " + std::to_string(n_agents) +
                                " agents in " + std::to_string(state.rooms.size()) + " rooms");
  }
  if (state.agents.size() > static_cast<std::size_t>(n_agents)) {
    throw std::invalid_argument("explore: scene already has more agents than requested");
  }

  Rng rng(seed);
  WorldState initial = state;
  while (initial.agents.size() < static_cast<std::size_t>(n_agents)) {
    add_agent(initial, initial.rooms[rng.uniform(initial.rooms.size())]);
  }

  WorldState s = initial;
  std::vector<ActionStep> steps;
  for (int t = 0; t < n_steps; ++t) {
    const int agent = t % n_agents;
    const auto step = t < n_agents ? policy.sample_movement(s, agent, rng) : policy.sample(s, agent, rng);
    apply_action_in_place(s, step);
    steps.push_back(step);
  }
  return scripted_trace(initial, std::move(steps), seed);
}

ExplorationTrace scripted_trace(const WorldState& initial, std::vector<ActionStep> steps,
                                std::uint64_t seed) {
  ExplorationTrace trace;
  trace.seed = seed;
  trace.initial_state = initial;
  trace.n_agents = static_cast<int>(initial.agents.size());
  for (int a = 0; a < trace.n_agents; ++a) trace.agent_names.push_back(agent_display_name(a));
  trace.steps = std::move(steps);

  WorldState s = initial;
  for (const auto& o : s.objects) {
    if (!s.is_room(o.id) && s.class_of(o.id).has(Property::Grabbable)) {
      trace.object_paths[o.id] = {effective_room(s, o.id)};
    }
  }
  for (const auto& step : trace.steps) {
    apply_action_in_place(s, step);
    record_paths(s, trace.object_paths);
  }
  trace.final_locations = final_locations_of(s);
  trace.id = "explore-" + hex64(mix_seed(seed, state_hash(initial)));
  return trace;
}

WorldState replay_trace(const ExplorationTrace& trace) {
  WorldState s = trace.initial_state;
  for (const auto& step : trace.steps) apply_action_in_place(s, step);
  return s;
}

std::vector<std::string> narrative_sentences(const ExplorationTrace& trace, std::uint64_t style_seed) {
  std::vector<std::size_t> order(kMotion.size());
  std::iota(order.begin(), order.end(), 0);
  if (style_seed != 0) {
    Rng rng(style_seed);
    rng.shuffle(order);
  }

  WorldState s = trace.initial_state;
  std::set<int> mentioned;
  std::size_t motion = 0;
  auto name = [&](int agent) {
    return agent < static_cast<int>(trace.agent_names.size()) ? trace.agent_names[static_cast<std::size_t>(agent)]
                                                              : agent_display_name(agent);
  };
  // Grabbable objects are introduced with an article, everything else is "the".
  auto noun = [&](int id) {
    const auto& cls = s.name_of(id);
    if (s.class_of(id).has(Property::Grabbable) && mentioned.insert(id).second) {
      return std::string(indefinite_article(cls)) + " " + cls;
    }
    return "the " + cls;
  };

  std::vector<std::string> out;
  for (const auto& step : trace.steps) {
    const std::string who = name(step.agent);
    const int x = step.args[0];
    const int y = step.args[1];
    std::string sentence;
    if (is_move_step(s, step)) {
      const auto phrase = kMotion[order[motion++ % kMotion.size()]];
      sentence = who + " " + std::string(phrase) + " the " + s.name_of(x) + ".";
    } else {
      switch (step.verb) {
        case Verb::Find: {
          const auto what = noun(x);
          sentence = who + " found " + what + " in the " + s.name_of(effective_room(s, x)) + ".";
          break;
        }
        case Verb::Put:
        case Verb::PutIn: {
          const auto what = noun(x);
          sentence = who + " put " + what + (step.verb == Verb::Put ? " on " : " in ") + noun(y) + ".";
          break;
        }
        case Verb::Pour: {
          const auto what = noun(x);
          sentence = who + " poured " + what + " into " + noun(y) + ".";
          break;
        }
        case Verb::StandUp: sentence = who + " stood up."; break;
        case Verb::Sleep: sentence = who + " fell asleep."; break;
        case Verb::WakeUp: sentence = who + " woke up."; break;
        default:
          sentence = who + " " + std::string(past_tense(step.verb)) + " " + noun(x) + ".";
          break;
      }
    }
    out.push_back(std::move(sentence));
    apply_action_in_place(s, step);
  }
  return out;
}

std::string render_trace_to_narrative(const ExplorationTrace& trace, std::uint64_t style_seed) {
  return join(narrative_sentences(trace, style_seed), " ");
}

}  // namespace embexp
