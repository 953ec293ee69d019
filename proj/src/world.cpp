#include "embexp/world.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "embexp/util.hpp"

namespace embexp {
namespace {

constexpr std::array<std::pair<StateFlag, std::string_view>, 6> kFlagNames{{
    {StateFlag::Open, "open"},
    {StateFlag::Closed, "closed"},
    {StateFlag::SwitchedOn, "switched_on"},
    {StateFlag::SwitchedOff, "switched_off"},
    {StateFlag::Clean, "clean"},
    {StateFlag::Dirty, "dirty"},
}};

// Collects violations, or stops at the first one in fast mode.
class Verdict {
 public:
  explicit Verdict(std::vector<std::string>* sink) : sink_(sink) {}

  // Returns false when evaluation should stop.
  bool require(bool condition, const char* message) {
    if (condition) return true;
    failed_ = true;
    if (sink_ == nullptr) return false;
    sink_->emplace_back(message);
    return true;
  }

  bool failed() const { return failed_; }

 private:
  std::vector<std::string>* sink_;
  bool failed_ = false;
};

bool held_by(const WorldState& s, int object, int agent) {
  const auto& o = s.object(object);
  return o.holder && *o.holder == agent;
}

// Loose in the agent's room: not held by anybody and not a room itself.
bool in_room(const WorldState& s, int object, int agent) {
  const auto& o = s.object(object);
  return !o.holder && !s.is_room(object) && o.location == s.agent(agent).location;
}

bool reachable(const WorldState& s, int object, int agent) {
  return held_by(s, object, agent) || in_room(s, object, agent);
}

bool is_movement(Verb v) { return v == Verb::Walk || v == Verb::Run || v == Verb::Find; }

bool posture_allows(Posture p, Verb v) {
  switch (p) {
    case Posture::Sleeping:
      return v == Verb::WakeUp;
    case Posture::Lying:
      switch (v) {
        case Verb::StandUp: case Verb::Sleep: case Verb::TurnTo: case Verb::LookAt:
        case Verb::Watch: case Verb::Greet: case Verb::Touch: case Verb::Drink:
        case Verb::Eat:
          return true;
        default:
          return false;
      }
    case Posture::Sitting:
      return !(is_movement(v) || v == Verb::Sit || v == Verb::Lie || v == Verb::Sleep ||
               v == Verb::WakeUp);
    case Posture::Standing:
      return !(v == Verb::StandUp || v == Verb::Sleep || v == Verb::WakeUp);
  }
  return false;
}

const char* posture_violation(Posture p, Verb v) {
  switch (p) {
    case Posture::Sleeping: return "agent is asleep";
    case Posture::Lying: return "agent is lying down";
    case Posture::Sitting: return "agent is sitting";
    case Posture::Standing:
      if (v == Verb::StandUp) return "agent is already standing";
      if (v == Verb::Sleep) return "agent is not lying down";
      return "agent is not asleep";
  }
  return "posture";
}

// Shared rule table. Steps are assumed well formed.
void evaluate_rules(const WorldState& s, const ActionStep& step, Verdict& v) {
  const int a = step.agent;
  const Agent& agent = s.agent(a);
  const int x = step.args[0];
  const int y = step.args[1];

  if (!v.require(posture_allows(agent.posture, step.verb),
                 posture_violation(agent.posture, step.verb))) {
    return;
  }

  auto cls = [&](int id) -> const ObjectClass& { return s.class_of(id); };
  auto not_room = [&](int id) { return v.require(!s.is_room(id), "target is a room"); };
  auto near = [&](int id) { return v.require(reachable(s, id, a), "not co-located"); };

  switch (step.verb) {
    case Verb::Walk:
    case Verb::Run:
      if (!v.require(s.is_room(x), "target is not a room")) return;
      v.require(agent.location != x, "already in that room");
      return;
    case Verb::Find: {
      const int room = s.is_room(x) ? x : s.object(x).location;
      v.require(agent.location != room, "target is already in this room");
      return;
    }
    case Verb::Sit:
      if (!not_room(x)) return;
      if (!v.require(cls(x).has(Property::Sittable), "not sittable")) return;
      v.require(in_room(s, x, a), "not co-located");
      return;
    case Verb::Lie:
      if (!not_room(x)) return;
      if (!v.require(cls(x).has(Property::Lieable), "not lieable")) return;
      v.require(in_room(s, x, a), "not co-located");
      return;
    case Verb::StandUp:
    case Verb::Sleep:
    case Verb::WakeUp:
      return;  // posture gate covers these
    case Verb::Grab: {
      if (!not_room(x)) return;
      if (!v.require(cls(x).has(Property::Grabbable), "not grabbable")) return;
      const auto& o = s.object(x);
      if (!v.require(!o.holder, "already held")) return;
      if (!v.require(in_room(s, x, a), "not co-located")) return;
      if (!v.require(agent.holding.size() < Agent::kHandCapacity, "hands are full")) return;
      if (o.support && o.support->kind == Relation::In) {
        const auto& holder = s.object(o.support->holder);
        v.require(!(cls(holder.id).has(Property::Openable) && holder.has(StateFlag::Closed)),
                  "inside a closed container");
      }
      return;
    }
    case Verb::Drop:
    case Verb::PutOn:
    case Verb::PutOff:
      if (!not_room(x)) return;
      if (step.verb != Verb::Drop &&
          !v.require(cls(x).affords(step.verb), "not wearable")) {
        return;
      }
      v.require(held_by(s, x, a), "agent does not hold the object");
      return;
    case Verb::Open:
    case Verb::Close:
      if (!not_room(x)) return;
      if (!v.require(cls(x).has(Property::Openable), "not openable")) return;
      if (!near(x)) return;
      if (step.verb == Verb::Open) {
        v.require(s.object(x).has(StateFlag::Closed), "already open");
      } else {
        v.require(s.object(x).has(StateFlag::Open), "already closed");
      }
      return;
    case Verb::SwitchOn:
    case Verb::SwitchOff:
      if (!not_room(x)) return;
      if (!v.require(cls(x).has(Property::Switchable), "not switchable")) return;
      if (!near(x)) return;
      if (step.verb == Verb::SwitchOn) {
        v.require(s.object(x).has(StateFlag::SwitchedOff), "already on");
      } else {
        v.require(s.object(x).has(StateFlag::SwitchedOn), "already off");
      }
      return;
    case Verb::Put:
    case Verb::PutIn: {
      if (!not_room(x) || !not_room(y)) return;
      if (!v.require(x != y, "object cannot hold itself")) return;
      if (!v.require(held_by(s, x, a), "agent does not hold the object")) return;
      if (step.verb == Verb::Put) {
        if (!v.require(cls(y).has(Property::Surface), "target is not a surface")) return;
        v.require(in_room(s, y, a), "not co-located");
      } else {
        if (!v.require(cls(y).has(Property::Container), "target is not a container")) return;
        if (!v.require(in_room(s, y, a), "not co-located")) return;
        v.require(!(cls(y).has(Property::Openable) && s.object(y).has(StateFlag::Closed)),
                  "container is closed");
      }
      return;
    }
    case Verb::Pour:
      if (!not_room(x) || !not_room(y)) return;
      if (!v.require(x != y, "cannot pour into itself")) return;
      if (!v.require(cls(x).has(Property::Drinkable), "not pourable")) return;
      if (!v.require(held_by(s, x, a), "agent does not hold the object")) return;
      if (!v.require(cls(y).affords(Verb::Pour), "target cannot receive a pour")) return;
      near(y);
      return;
    case Verb::Drink:
      if (!not_room(x)) return;
      if (!v.require(cls(x).has(Property::Drinkable), "not drinkable")) return;
      near(x);
      return;
    case Verb::Eat:
    case Verb::Cut:
      if (!not_room(x)) return;
      if (!v.require(cls(x).has(Property::Eatable), "not eatable")) return;
      near(x);
      return;
    case Verb::Watch:
    case Verb::Type:
    case Verb::Greet:
    case Verb::Squeeze:
      if (!not_room(x)) return;
      if (!v.require(cls(x).affords(step.verb), "object does not afford this action")) return;
      near(x);
      return;
    case Verb::PlugIn:
    case Verb::PlugOut:
      if (!not_room(x)) return;
      if (!v.require(cls(x).has(Property::Switchable), "not switchable")) return;
      near(x);
      return;
    case Verb::Wipe:
      if (!not_room(x)) return;
      if (!v.require(cls(x).cleanable(), "not cleanable")) return;
      near(x);
      return;
    case Verb::Wash:
    case Verb::Rinse:
    case Verb::Scrub:
      if (!not_room(x)) return;
      if (!v.require(cls(x).has(Property::Grabbable), "not washable")) return;
      near(x);
      return;
    case Verb::TurnTo:
    case Verb::LookAt:
    case Verb::Touch:
    case Verb::Move:
      if (!not_room(x)) return;
      near(x);
      return;
  }
}

void release(WorldState& s, int agent, int object) {
  auto& hands = s.agent(agent).holding;
  hands.erase(std::remove(hands.begin(), hands.end(), object), hands.end());
  s.object(object).holder.reset();
}

void mutate(WorldState& s, const ActionStep& step) {
  Agent& agent = s.agent(step.agent);
  const int x = step.args[0];
  const int y = step.args[1];
  switch (step.verb) {
    case Verb::Walk:
    case Verb::Run:
    case Verb::Find: {
      const int room = s.is_room(x) ? x : s.object(x).location;
      agent.location = room;
      agent.facing = -1;
      for (int held : agent.holding) s.object(held).location = room;
      break;
    }
    case Verb::Sit:
      agent.posture = Posture::Sitting;
      agent.posture_target = x;
      break;
    case Verb::Lie:
      agent.posture = Posture::Lying;
      agent.posture_target = x;
      break;
    case Verb::StandUp:
      agent.posture = Posture::Standing;
      agent.posture_target = -1;
      break;
    case Verb::Sleep:
      agent.posture = Posture::Sleeping;
      break;
    case Verb::WakeUp:
      agent.posture = Posture::Lying;
      break;
    case Verb::Grab: {
      auto& o = s.object(x);
      o.support.reset();
      o.holder = step.agent;
      o.location = agent.location;
      agent.holding.push_back(x);
      break;
    }
    case Verb::Drop: {
      release(s, step.agent, x);
      auto& o = s.object(x);
      o.support.reset();
      o.location = agent.location;
      break;
    }
    case Verb::Put:
    case Verb::PutIn: {
      release(s, step.agent, x);
      auto& o = s.object(x);
      o.support = Support{step.verb == Verb::Put ? Relation::On : Relation::In, y};
      o.location = s.object(y).location;
      break;
    }
    case Verb::Open: {
      auto& o = s.object(x);
      o.clear(StateFlag::Closed);
      o.set(StateFlag::Open);
      break;
    }
    case Verb::Close: {
      auto& o = s.object(x);
      o.clear(StateFlag::Open);
      o.set(StateFlag::Closed);
      break;
    }
    case Verb::SwitchOn: {
      auto& o = s.object(x);
      o.clear(StateFlag::SwitchedOff);
      o.set(StateFlag::SwitchedOn);
      break;
    }
    case Verb::SwitchOff: {
      auto& o = s.object(x);
      o.clear(StateFlag::SwitchedOn);
      o.set(StateFlag::SwitchedOff);
      break;
    }
    case Verb::Wipe:
    case Verb::Wash:
    case Verb::Rinse:
    case Verb::Scrub: {
      auto& o = s.object(x);
      o.clear(StateFlag::Dirty);
      o.set(StateFlag::Clean);
      break;
    }
    case Verb::TurnTo:
    case Verb::LookAt:
    case Verb::Watch:
      agent.facing = x;
      break;
    default:
      // Greet, Touch, Type, Move, Drink, Eat, Cut, Pour, Squeeze, PlugIn,
      // PlugOut, PutOn, PutOff leave relations untouched.
      break;
  }
  ++s.step_count;
}

void set_flag_exclusive(ObjectInstance& o, StateFlag on, StateFlag off) {
  o.set(on);
  o.clear(off);
}

void initialise_flags(ObjectInstance& o, const ObjectClass& cls, Rng* rng) {
  auto draw = [&](double p) { return rng != nullptr && rng->bernoulli(p); };
  if (cls.has(Property::Openable)) {
    if (draw(cls.open_probability)) {
      set_flag_exclusive(o, StateFlag::Open, StateFlag::Closed);
    } else {
      set_flag_exclusive(o, StateFlag::Closed, StateFlag::Open);
    }
  }
  if (cls.has(Property::Switchable)) {
    if (draw(cls.on_probability)) {
      set_flag_exclusive(o, StateFlag::SwitchedOn, StateFlag::SwitchedOff);
    } else {
      set_flag_exclusive(o, StateFlag::SwitchedOff, StateFlag::SwitchedOn);
    }
  }
  if (cls.cleanable()) {
    if (draw(cls.dirty_probability)) {
      set_flag_exclusive(o, StateFlag::Dirty, StateFlag::Clean);
    } else {
      set_flag_exclusive(o, StateFlag::Clean, StateFlag::Dirty);
    }
  }
}

std::string describe(const WorldState& s, int id) {
  std::ostringstream os;
  os << (s.is_object(id) ? s.name_of(id) : std::string("?")) << " (" << id << ")";
  return os.str();
}

}  // namespace

std::string_view relation_name(Relation r) { return r == Relation::On ? "ON" : "IN"; }

std::string_view posture_name(Posture p) {
  switch (p) {
    case Posture::Standing: return "standing";
    case Posture::Sitting: return "sitting";
    case Posture::Lying: return "lying";
    case Posture::Sleeping: return "sleeping";
  }
  return "standing";
}

bool Agent::holds(int object) const {
  return std::find(holding.begin(), holding.end(), object) != holding.end();
}

int WorldState::room_named(std::string_view name) const {
  for (int r : rooms) {
    if (name_of(r) == name) return r;
  }
  return -1;
}

int WorldState::first_instance(std::string_view class_name) const {
  const int cls = catalog->find(class_name);
  if (cls < 0) return -1;
  for (const auto& o : objects) {
    if (o.class_index == cls) return o.id;
  }
  return -1;
}

std::string_view scene_size_name(SceneSize s) {
  switch (s) {
    case SceneSize::Small: return "small";
    case SceneSize::Medium: return "medium";
    case SceneSize::Large: return "large";
  }
  return "small";
}

SceneSize parse_scene_size(std::string_view name) {
  if (name == "small") return SceneSize::Small;
  if (name == "medium") return SceneSize::Medium;
  if (name == "large") return SceneSize::Large;
  throw std::invalid_argument("unknown scene size '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Construction

WorldBuilder::WorldBuilder(CatalogPtr catalog) { state_.catalog = std::move(catalog); }

int WorldBuilder::add_room(std::string_view name) {
  const int cls = state_.catalog->require(name);
  if (!state_.catalog->at(cls).is_room()) {
    throw std::invalid_argument("'" + std::string(name) + "' is not a room class");
  }
  const int id = static_cast<int>(state_.objects.size());
  ObjectInstance o;
  o.id = id;
  o.class_index = cls;
  o.location = id;
  state_.objects.push_back(o);
  state_.rooms.push_back(id);
  return id;
}

int WorldBuilder::add_object_impl(std::string_view class_name, int room,
                                  std::optional<Support> support) {
  const int cls = state_.catalog->require(class_name);
  const auto& c = state_.catalog->at(cls);
  if (c.is_room()) throw std::invalid_argument("use add_room for rooms");
  if (!state_.is_room(room)) throw std::invalid_argument("object placed outside a room");
  const int id = static_cast<int>(state_.objects.size());
  ObjectInstance o;
  o.id = id;
  o.class_index = cls;
  o.location = room;
  o.support = support;
  initialise_flags(o, c, nullptr);
  state_.objects.push_back(o);
  return id;
}

int WorldBuilder::add_object(std::string_view class_name, int room) {
  return add_object_impl(class_name, room, std::nullopt);
}

int WorldBuilder::add_object_on(std::string_view class_name, int holder) {
  return add_object_impl(class_name, state_.object(holder).location,
                         Support{Relation::On, holder});
}

int WorldBuilder::add_object_in(std::string_view class_name, int holder) {
  return add_object_impl(class_name, state_.object(holder).location,
                         Support{Relation::In, holder});
}

int WorldBuilder::add_agent(int room) { return embexp::add_agent(state_, room); }

WorldBuilder& WorldBuilder::set_flag(int object, StateFlag flag) {
  auto& o = state_.object(object);
  switch (flag) {
    case StateFlag::Open: set_flag_exclusive(o, StateFlag::Open, StateFlag::Closed); break;
    case StateFlag::Closed: set_flag_exclusive(o, StateFlag::Closed, StateFlag::Open); break;
    case StateFlag::SwitchedOn:
      set_flag_exclusive(o, StateFlag::SwitchedOn, StateFlag::SwitchedOff);
      break;
    case StateFlag::SwitchedOff:
      set_flag_exclusive(o, StateFlag::SwitchedOff, StateFlag::SwitchedOn);
      break;
    case StateFlag::Clean: set_flag_exclusive(o, StateFlag::Clean, StateFlag::Dirty); break;
    case StateFlag::Dirty: set_flag_exclusive(o, StateFlag::Dirty, StateFlag::Clean); break;
  }
  return *this;
}

WorldState WorldBuilder::build() const { return state_; }

int add_agent(WorldState& state, int room) {
  if (!state.is_room(room)) throw std::invalid_argument("agent placed outside a room");
  Agent a;
  a.id = static_cast<int>(state.agents.size());
  a.location = room;
  state.agents.push_back(a);
  return a.id;
}

WorldState sample_scene(const CatalogPtr& catalog, std::uint64_t seed, SceneSize size) {
  Rng rng(mix_seed(seed, 0x5ce4e));
  WorldState s;
  s.catalog = catalog;

  for (const auto& room : catalog->room_names()) {
    const int id = static_cast<int>(s.objects.size());
    ObjectInstance o;
    o.id = id;
    o.class_index = catalog->require(room);
    o.location = id;
    s.objects.push_back(o);
    s.rooms.push_back(id);
  }

  auto push = [&](int cls, int room, std::optional<Support> support) {
    ObjectInstance o;
    o.id = static_cast<int>(s.objects.size());
    o.class_index = cls;
    o.location = room;
    o.support = support;
    initialise_flags(o, catalog->at(cls), &rng);
    s.objects.push_back(o);
  };

  // Fixed furniture: one instance per listed room.
  for (std::size_t c = 0; c < catalog->size(); ++c) {
    const auto& cls = catalog->at(static_cast<int>(c));
    if (cls.is_room() || cls.has(Property::Grabbable)) continue;
    for (const auto& room : cls.rooms) {
      push(static_cast<int>(c), s.room_named(room), std::nullopt);
    }
  }
  const std::size_t furniture_end = s.objects.size();

  // Grabbable objects, optionally duplicated in bigger scenes.
  for (std::size_t c = 0; c < catalog->size(); ++c) {
    const auto& cls = catalog->at(static_cast<int>(c));
    if (!cls.has(Property::Grabbable)) continue;
    int copies = 1;
    if (size == SceneSize::Medium) copies += rng.bernoulli(0.3) ? 1 : 0;
    if (size == SceneSize::Large) copies += static_cast<int>(rng.uniform(3));
    for (int k = 0; k < copies; ++k) {
      const int room = s.room_named(cls.rooms[rng.uniform(cls.rooms.size())]);
      std::vector<Support> options;
      for (std::size_t h = 0; h < furniture_end; ++h) {
        const auto& holder = s.objects[h];
        if (holder.location != room || s.is_room(holder.id)) continue;
        const auto& hname = catalog->at(holder.class_index).name;
        if (std::find(cls.spawn_on.begin(), cls.spawn_on.end(), hname) != cls.spawn_on.end()) {
          options.push_back({Relation::On, holder.id});
        }
        if (std::find(cls.spawn_in.begin(), cls.spawn_in.end(), hname) != cls.spawn_in.end()) {
          options.push_back({Relation::In, holder.id});
        }
      }
      std::optional<Support> support;
      if (!options.empty()) support = options[rng.uniform(options.size())];
      push(static_cast<int>(c), room, support);
    }
  }

  add_agent(s, s.rooms[rng.uniform(s.rooms.size())]);
  return s;
}

// ---------------------------------------------------------------------------
// Rules

ActionRejected::ActionRejected(const ActionStep& step, std::vector<std::string> violations)
    : std::runtime_error("action " + std::string(verb_name(step.verb)) + " rejected: " +
                         join(violations, "; ")),
      violations_(std::move(violations)) {}

void check_well_formed(const WorldState& state, const ActionStep& step) {
  if (static_cast<std::size_t>(step.verb) >= kVerbCount) throw MalformedStep("unknown verb");
  if (!state.is_agent(step.agent)) {
    throw MalformedStep("unknown agent id " + std::to_string(step.agent));
  }
  const int arity = verb_arity(step.verb);
  for (int i = 0; i < 2; ++i) {
    const int arg = step.args[static_cast<std::size_t>(i)];
    if (i < arity) {
      if (!state.is_object(arg)) {
        throw MalformedStep(std::string(verb_name(step.verb)) + ": unknown object id " +
                            std::to_string(arg));
      }
    } else if (arg != -1) {
      throw MalformedStep(std::string(verb_name(step.verb)) + " takes " +
                          std::to_string(arity) + " argument(s)");
    }
  }
}

PreconditionResult check_preconditions(const WorldState& state, const ActionStep& step) {
  check_well_formed(state, step);
  PreconditionResult result;
  Verdict v(&result.violations);
  evaluate_rules(state, step, v);
  result.ok = !v.failed();
  return result;
}

bool is_admissible(const WorldState& state, const ActionStep& step) {
  Verdict v(nullptr);
  evaluate_rules(state, step, v);
  return !v.failed();
}

void apply_action_in_place(WorldState& state, const ActionStep& step) {
  auto check = check_preconditions(state, step);
  if (!check.ok) throw ActionRejected(step, std::move(check.violations));
  mutate(state, step);
}

WorldState apply_action(const WorldState& state, const ActionStep& step) {
  WorldState next = state;
  apply_action_in_place(next, step);
  return next;
}

std::vector<ActionStep> enumerate_admissible_actions(const WorldState& state, int agent) {
  if (!state.is_agent(agent)) {
    throw std::invalid_argument("unknown agent id " + std::to_string(agent));
  }
  std::vector<ActionStep> out;
  auto consider = [&](Verb verb, int x = -1, int y = -1) {
    const ActionStep step = make_step(agent, verb, x, y);
    if (is_admissible(state, step)) out.push_back(step);
  };

  consider(Verb::StandUp);
  consider(Verb::Sleep);
  consider(Verb::WakeUp);

  std::vector<int> near;
  for (const auto& o : state.objects) {
    if (state.is_room(o.id)) {
      consider(Verb::Walk, o.id);
      consider(Verb::Run, o.id);
    }
    consider(Verb::Find, o.id);
    if (reachable(state, o.id, agent)) near.push_back(o.id);
  }

  for (int x : near) {
    for (Verb verb : all_verbs()) {
      if (verb_arity(verb) != 1 || is_movement(verb)) continue;
      consider(verb, x);
    }
  }
  for (int held : state.agent(agent).holding) {
    for (int y : near) {
      consider(Verb::Put, held, y);
      consider(Verb::PutIn, held, y);
      consider(Verb::Pour, held, y);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string render_action_to_text(const WorldState& state, const ActionStep& step) {
  check_well_formed(state, step);
  const int arity = verb_arity(step.verb);
  return fill_action_template(step.verb, arity > 0 ? state.name_of(step.args[0]) : "",
                              arity > 1 ? state.name_of(step.args[1]) : "");
}

std::string render_action_script(const WorldState& state, const ActionStep& step) {
  check_well_formed(state, step);
  std::ostringstream os;
  os << "<char" << step.agent << "> [" << verb_name(step.verb) << "]";
  for (int i = 0; i < step.arity(); ++i) {
    const int id = step.args[static_cast<std::size_t>(i)];
    os << " <" << state.name_of(id) << "> (" << id << ")";
  }
  return os.str();
}

int effective_room(const WorldState& state, int object) {
  const auto& o = state.object(object);
  if (o.holder) return state.agent(*o.holder).location;
  return o.location;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<std::string> validate_state(const WorldState& s) {
  std::vector<std::string> out;
  auto fail = [&](std::string msg) { out.push_back(std::move(msg)); };
  if (!s.catalog) {
    fail("state has no catalog");
    return out;
  }

  for (std::size_t i = 0; i < s.rooms.size(); ++i) {
    if (!s.is_room(s.rooms[i])) fail("room list entry " + std::to_string(s.rooms[i]) + " is not a room");
  }

  std::vector<int> held_count(s.objects.size(), 0);
  for (std::size_t ai = 0; ai < s.agents.size(); ++ai) {
    const Agent& a = s.agents[ai];
    const std::string who = "agent " + std::to_string(ai);
    if (a.id != static_cast<int>(ai)) fail(who + " has mismatched id");
    if (!s.is_room(a.location)) fail(who + " is not in a room");
    if (a.holding.size() > Agent::kHandCapacity) fail(who + " holds more than two objects");
    for (int h : a.holding) {
      if (!s.is_object(h)) {
        fail(who + " holds unknown object " + std::to_string(h));
        continue;
      }
      ++held_count[static_cast<std::size_t>(h)];
      const auto& o = s.object(h);
      if (!s.class_of(h).has(Property::Grabbable)) fail(who + " holds non-grabbable " + describe(s, h));
      if (!o.holder || *o.holder != a.id) fail(describe(s, h) + " does not record " + who + " as holder");
      if (o.location != a.location) fail(describe(s, h) + " is not in its holder's room");
    }
    if (a.posture == Posture::Standing) {
      if (a.posture_target != -1) fail(who + " stands but has a posture target");
    } else {
      const int t = a.posture_target;
      if (!s.is_object(t)) {
        fail(who + " has an invalid posture target");
      } else {
        const auto& c = s.class_of(t);
        const bool fits = a.posture == Posture::Sitting ? c.has(Property::Sittable)
                                                        : c.has(Property::Lieable);
        if (!fits) fail(who + " rests on unsuitable " + describe(s, t));
        if (s.object(t).location != a.location) fail(who + " rests on furniture in another room");
      }
    }
    if (a.facing != -1 && !s.is_object(a.facing)) fail(who + " faces an unknown object");
  }

  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const auto& o = s.objects[i];
    const int id = static_cast<int>(i);
    if (o.id != id) {
      fail("object at index " + std::to_string(i) + " has id " + std::to_string(o.id));
      continue;
    }
    if (o.class_index < 0 || static_cast<std::size_t>(o.class_index) >= s.catalog->size()) {
      fail("object " + std::to_string(id) + " has unknown class");
      continue;
    }
    const auto& cls = s.class_of(id);
    const std::string what = describe(s, id);

    if (cls.is_room()) {
      if (o.location != id) fail(what + " is a room but not its own location");
      if (std::find(s.rooms.begin(), s.rooms.end(), id) == s.rooms.end()) fail(what + " missing from room list");
      if (o.support || o.holder || o.flags != 0) fail(what + " is a room with object state");
      continue;
    }
    if (!s.is_room(o.location)) fail(what + " has no room location");

    auto exclusive = [&](bool applies, StateFlag a, StateFlag b, const char* label) {
      const bool ha = o.has(a);
      const bool hb = o.has(b);
      if (applies && ha == hb) fail(what + " violates " + label + " exclusivity");
      if (!applies && (ha || hb)) fail(what + " carries " + label + " flags it cannot have");
    };
    exclusive(cls.has(Property::Openable), StateFlag::Open, StateFlag::Closed, "open/closed");
    exclusive(cls.has(Property::Switchable), StateFlag::SwitchedOn, StateFlag::SwitchedOff, "on/off");
    exclusive(cls.cleanable(), StateFlag::Clean, StateFlag::Dirty, "clean/dirty");

    if (held_count[i] > 1) fail(what + " is held by more than one agent");
    if (o.holder) {
      if (!s.is_agent(*o.holder)) {
        fail(what + " names an unknown holder agent");
      } else if (!s.agent(*o.holder).holds(id)) {
        fail(what + " names agent " + std::to_string(*o.holder) + " who does not hold it");
      }
      if (o.support) fail(what + " is both held and supported");
    }
    if (o.support) {
      const int h = o.support->holder;
      if (!s.is_object(h) || h == id) {
        fail(what + " is supported by an invalid object");
      } else {
        const auto& hc = s.class_of(h);
        const bool fits = o.support->kind == Relation::On ? hc.has(Property::Surface)
                                                          : hc.has(Property::Container);
        if (!fits) fail(what + " is " + std::string(relation_name(o.support->kind)) + " unsuitable " + describe(s, h));
        if (s.object(h).location != o.location) fail(what + " is not in its holder's room");
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::ordered_json step_to_json(const ActionStep& step) {
  nlohmann::ordered_json j;
  j["agent"] = step.agent;
  j["verb"] = verb_name(step.verb);
  auto args = nlohmann::ordered_json::array();
  for (int i = 0; i < step.arity(); ++i) args.push_back(step.args[static_cast<std::size_t>(i)]);
  j["args"] = std::move(args);
  return j;
}

ActionStep step_from_json(const nlohmann::json& doc) {
  ActionStep step;
  step.agent = doc.at("agent").get<int>();
  const auto name = doc.at("verb").get<std::string>();
  auto verb = parse_verb(name);
  if (!verb) throw MalformedStep("unknown verb '" + name + "'");
  step.verb = *verb;
  const auto args = doc.at("args").get<std::vector<int>>();
  if (static_cast<int>(args.size()) != verb_arity(step.verb)) {
    throw MalformedStep(name + " takes " + std::to_string(verb_arity(step.verb)) + " argument(s)");
  }
  for (std::size_t i = 0; i < args.size(); ++i) step.args[i] = args[i];
  return step;
}

nlohmann::ordered_json state_to_json(const WorldState& s) {
  nlohmann::ordered_json j;
  j["catalog_version"] = s.catalog->version();
  j["step_count"] = s.step_count;
  j["rooms"] = s.rooms;
  auto objects = nlohmann::ordered_json::array();
  for (const auto& o : s.objects) {
    nlohmann::ordered_json oj;
    oj["id"] = o.id;
    oj["class"] = s.catalog->at(o.class_index).name;
    oj["location"] = o.location;
    auto flags = nlohmann::ordered_json::array();
    for (const auto& [flag, name] : kFlagNames) {
      if (o.has(flag)) flags.push_back(name);
    }
    oj["flags"] = std::move(flags);
    if (o.support) {
      oj["support"] = {{"relation", relation_name(o.support->kind)}, {"holder", o.support->holder}};
    } else {
      oj["support"] = nullptr;
    }
    oj["holder"] = o.holder ? nlohmann::ordered_json(*o.holder) : nlohmann::ordered_json(nullptr);
    objects.push_back(std::move(oj));
  }
  j["objects"] = std::move(objects);
  auto agents = nlohmann::ordered_json::array();
  for (const auto& a : s.agents) {
    nlohmann::ordered_json aj;
    aj["id"] = a.id;
    aj["location"] = a.location;
    aj["holding"] = a.holding;
    aj["posture"] = posture_name(a.posture);
    aj["posture_target"] = a.posture_target;
    aj["facing"] = a.facing;
    agents.push_back(std::move(aj));
  }
  j["agents"] = std::move(agents);
  return j;
}

WorldState state_from_json(const nlohmann::json& doc, const CatalogPtr& catalog) {
  WorldState s;
  s.catalog = catalog;
  const auto version = doc.at("catalog_version").get<std::string>();
  if (version != catalog->version()) {
    throw CatalogError("state was written with catalog version " + version + ", have " +
                       catalog->version());
  }
  s.step_count = doc.at("step_count").get<std::uint64_t>();
  s.rooms = doc.at("rooms").get<std::vector<int>>();
  for (const auto& oj : doc.at("objects")) {
    ObjectInstance o;
    o.id = oj.at("id").get<int>();
    o.class_index = catalog->require(oj.at("class").get<std::string>());
    o.location = oj.at("location").get<int>();
    for (const auto& f : oj.at("flags")) {
      const auto name = f.get<std::string>();
      auto it = std::find_if(kFlagNames.begin(), kFlagNames.end(),
                             [&](const auto& p) { return p.second == name; });
      if (it == kFlagNames.end()) throw std::invalid_argument("unknown state flag '" + name + "'");
      o.set(it->first);
    }
    if (!oj.at("support").is_null()) {
      const auto& sj = oj.at("support");
      const auto rel = sj.at("relation").get<std::string>();
      o.support = Support{rel == "ON" ? Relation::On : Relation::In, sj.at("holder").get<int>()};
    }
    if (!oj.at("holder").is_null()) o.holder = oj.at("holder").get<int>();
    s.objects.push_back(o);
  }
  for (const auto& aj : doc.at("agents")) {
    Agent a;
    a.id = aj.at("id").get<int>();
    a.location = aj.at("location").get<int>();
    a.holding = aj.at("holding").get<std::vector<int>>();
    const auto posture = aj.at("posture").get<std::string>();
    if (posture == "standing") a.posture = Posture::Standing;
    else if (posture == "sitting") a.posture = Posture::Sitting;
    else if (posture == "lying") a.posture = Posture::Lying;
    else if (posture == "sleeping") a.posture = Posture::Sleeping;
    else throw std::invalid_argument("unknown posture '" + posture + "'");
    a.posture_target = aj.at("posture_target").get<int>();
    a.facing = aj.at("facing").get<int>();
    s.agents.push_back(std::move(a));
  }
  return s;
}

std::string serialize_state(const WorldState& state) { return state_to_json(state).dump(); }

std::uint64_t state_hash(const WorldState& state) { return fnv1a64(serialize_state(state)); }

}  // namespace embexp
