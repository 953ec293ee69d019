#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "embexp/action.hpp"
#include "embexp/catalog.hpp"

namespace embexp {

enum class StateFlag : std::uint8_t {
  Open = 1 << 0,
  Closed = 1 << 1,
  SwitchedOn = 1 << 2,
  SwitchedOff = 1 << 3,
  Clean = 1 << 4,
  Dirty = 1 << 5,
};

enum class Relation : std::uint8_t { On, In };

std::string_view relation_name(Relation r);

struct Support {
  Relation kind = Relation::On;
  int holder = -1;
  bool operator==(const Support&) const = default;
};

struct ObjectInstance {
  int id = -1;
  int class_index = -1;
  std::uint8_t flags = 0;
  /// Room id. Rooms point at themselves.
  int location = -1;
  std::optional<Support> support;
  /// Agent currently holding the object.
  std::optional<int> holder;

  bool has(StateFlag f) const { return (flags & static_cast<std::uint8_t>(f)) != 0; }
  void set(StateFlag f) { flags |= static_cast<std::uint8_t>(f); }
  void clear(StateFlag f) { flags &= static_cast<std::uint8_t>(~static_cast<std::uint8_t>(f)); }
};

enum class Posture : std::uint8_t { Standing, Sitting, Lying, Sleeping };

std::string_view posture_name(Posture p);

struct Agent {
  static constexpr std::size_t kHandCapacity = 2;

  int id = -1;
  int location = -1;
  std::vector<int> holding;
  Posture posture = Posture::Standing;
  /// Furniture sat or lain on; -1 when standing.
  int posture_target = -1;
  /// Object last turned to, looked at or watched; -1 when none.
  int facing = -1;

  bool holds(int object) const;
};

/// Full symbolic snapshot. Object and agent ids equal their vector index.
/// Plain value type: copying yields an independent state sharing the
/// immutable catalog.
struct WorldState {
  CatalogPtr catalog;
  std::vector<ObjectInstance> objects;
  std::vector<Agent> agents;
  std::vector<int> rooms;
  std::uint64_t step_count = 0;

  const ObjectInstance& object(int id) const { return objects.at(static_cast<std::size_t>(id)); }
  ObjectInstance& object(int id) { return objects.at(static_cast<std::size_t>(id)); }
  const Agent& agent(int id) const { return agents.at(static_cast<std::size_t>(id)); }
  Agent& agent(int id) { return agents.at(static_cast<std::size_t>(id)); }
  const ObjectClass& class_of(int id) const { return catalog->at(object(id).class_index); }
  const std::string& name_of(int id) const { return class_of(id).name; }
  bool is_object(int id) const { return id >= 0 && static_cast<std::size_t>(id) < objects.size(); }
  bool is_agent(int id) const { return id >= 0 && static_cast<std::size_t>(id) < agents.size(); }
  bool is_room(int id) const { return is_object(id) && class_of(id).is_room(); }
  /// First room whose class is `name`, or -1.
  int room_named(std::string_view name) const;
  /// Lowest-id instance of a class, or -1.
  int first_instance(std::string_view class_name) const;
};

enum class SceneSize { Small, Medium, Large };

std::string_view scene_size_name(SceneSize s);
SceneSize parse_scene_size(std::string_view name);

/// Deterministic scene: every catalog room, every class at least once, one
/// standing agent. Equal (seed, size) give bit-identical states.
WorldState sample_scene(const CatalogPtr& catalog, std::uint64_t seed, SceneSize size);

/// Incremental construction of hand-made scenes.
class WorldBuilder {
 public:
  explicit WorldBuilder(CatalogPtr catalog);

  int add_room(std::string_view name);
  int add_object(std::string_view class_name, int room);
  int add_object_on(std::string_view class_name, int holder);
  int add_object_in(std::string_view class_name, int holder);
  int add_agent(int room);
  WorldBuilder& set_flag(int object, StateFlag flag);

  WorldState build() const;
  const WorldState& peek() const { return state_; }

 private:
  int add_object_impl(std::string_view class_name, int room, std::optional<Support> support);

  WorldState state_;
};

/// Adds a standing agent in `room` and returns its id.
int add_agent(WorldState& state, int room);

/// Thrown for steps that are structurally invalid (unknown ids, wrong
/// arity). Distinct from an executable-but-unmet precondition.
class MalformedStep : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PreconditionResult {
  bool ok = true;
  std::vector<std::string> violations;
  explicit operator bool() const { return ok; }
};

class ActionRejected : public std::runtime_error {
 public:
  ActionRejected(const ActionStep& step, std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Throws MalformedStep when the step does not refer to existing ids with
/// the verb's arity.
void check_well_formed(const WorldState& state, const ActionStep& step);

PreconditionResult check_preconditions(const WorldState& state, const ActionStep& step);

/// Fast variant with the same rules and no messages.
bool is_admissible(const WorldState& state, const ActionStep& step);

/// Returns the successor state. Throws ActionRejected on a precondition
/// failure; the input is never modified.
WorldState apply_action(const WorldState& state, const ActionStep& step);

/// In-place variant. Throws before touching the state on failure.
void apply_action_in_place(WorldState& state, const ActionStep& step);

/// Every executable step for `agent`, sorted by (verb, args).
std::vector<ActionStep> enumerate_admissible_actions(const WorldState& state, int agent);

/// Template text with class names substituted, e.g. "Put plate in dishwasher".
std::string render_action_to_text(const WorldState& state, const ActionStep& step);

/// Script form `<char0> [PutIn] <plate> (41) <dishwasher> (12)`.
std::string render_action_script(const WorldState& state, const ActionStep& step);

/// Empty iff every structural invariant holds.
std::vector<std::string> validate_state(const WorldState& state);

/// Canonical structured form with a fixed key order.
nlohmann::ordered_json state_to_json(const WorldState& state);
WorldState state_from_json(const nlohmann::json& doc, const CatalogPtr& catalog);
std::string serialize_state(const WorldState& state);
std::uint64_t state_hash(const WorldState& state);

nlohmann::ordered_json step_to_json(const ActionStep& step);
ActionStep step_from_json(const nlohmann::json& doc);

/// The room an object currently is in (holder agent's room for held objects).
int effective_room(const WorldState& state, int object);

}  // namespace embexp
