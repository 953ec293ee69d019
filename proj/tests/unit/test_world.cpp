#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "embexp/util.hpp"
#include "embexp/world.hpp"
#include "fixtures.hpp"

namespace embexp {
namespace {

using testing::shipped_catalog;

bool has_violation(const PreconditionResult& r, const std::string& msg) {
  return std::find(r.violations.begin(), r.violations.end(), msg) != r.violations.end();
}

struct Kitchen {
  WorldState state;
  int kitchen, living, fridge, dishwasher, table, plate, apple, agent;
};

Kitchen kitchen_scene() {
  WorldBuilder b(shipped_catalog());
  Kitchen k{};
  k.kitchen = b.add_room("kitchen");
  k.living = b.add_room("living room");
  k.fridge = b.add_object("fridge", k.kitchen);
  k.dishwasher = b.add_object("dishwasher", k.kitchen);
  k.table = b.add_object("coffee table", k.living);
  k.plate = b.add_object("plate", k.kitchen);
  k.apple = b.add_object_in("apple", k.fridge);
  k.agent = b.add_agent(k.kitchen);
  k.state = b.build();
  return k;
}

TEST(SampleScene, HasRoomsAndOneAgent) {
  const auto s = sample_scene(shipped_catalog(), 0, SceneSize::Small);
  std::set<std::string> rooms;
  for (int r : s.rooms) rooms.insert(s.name_of(r));
  for (const char* need : {"kitchen", "living room", "bedroom", "bathroom"}) {
    EXPECT_TRUE(rooms.count(need)) << need;
  }
  EXPECT_EQ(s.agents.size(), 1u);
}

TEST(SampleScene, Deterministic) {
  const auto a = sample_scene(shipped_catalog(), 7, SceneSize::Small);
  const auto b = sample_scene(shipped_catalog(), 7, SceneSize::Small);
  EXPECT_EQ(serialize_state(a), serialize_state(b));
  const auto c = sample_scene(shipped_catalog(), 8, SceneSize::Small);
  EXPECT_NE(serialize_state(a), serialize_state(c));
}

TEST(SampleScene, ValidOverManySeeds) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto size = static_cast<SceneSize>(seed % 3);
    const auto s = sample_scene(shipped_catalog(), seed, size);
    const auto v = validate_state(s);
    ASSERT_TRUE(v.empty()) << "seed " << seed << ": " << v.front();
  }
}

TEST(SampleScene, EveryClassPresent) {
  const auto s = sample_scene(shipped_catalog(), 3, SceneSize::Medium);
  for (const auto& cls : shipped_catalog()->classes()) {
    EXPECT_GE(s.first_instance(cls.name), 0) << cls.name;
  }
}

TEST(Preconditions, GrabInOtherRoomIsNotCoLocated) {
  WorldBuilder b(shipped_catalog());
  const int kitchen = b.add_room("kitchen");
  const int bedroom = b.add_room("bedroom");
  const int apple = b.add_object("apple", kitchen);
  const int agent = b.add_agent(bedroom);
  const auto s = b.build();
  const auto r = check_preconditions(s, make_step(agent, Verb::Grab, apple));
  EXPECT_FALSE(r.ok);
  EXPECT_TRUE(has_violation(r, "not co-located"));
}

TEST(Preconditions, OpenAlreadyOpen) {
  WorldBuilder b(shipped_catalog());
  const int kitchen = b.add_room("kitchen");
  const int fridge = b.add_object("fridge", kitchen);
  const int agent = b.add_agent(kitchen);
  b.set_flag(fridge, StateFlag::Open);
  const auto r = check_preconditions(b.build(), make_step(agent, Verb::Open, fridge));
  EXPECT_FALSE(r.ok);
  EXPECT_TRUE(has_violation(r, "already open"));
}

TEST(Preconditions, PutInOpenDishwasher) {
  auto k = kitchen_scene();
  auto s = apply_action(k.state, make_step(k.agent, Verb::Grab, k.plate));
  s = apply_action(s, make_step(k.agent, Verb::Open, k.dishwasher));
  const auto r = check_preconditions(s, make_step(k.agent, Verb::PutIn, k.plate, k.dishwasher));
  EXPECT_TRUE(r.ok) << join(r.violations, "; ");
}

TEST(Preconditions, PutInClosedContainer) {
  auto k = kitchen_scene();
  auto s = apply_action(k.state, make_step(k.agent, Verb::Grab, k.plate));
  const auto r = check_preconditions(s, make_step(k.agent, Verb::PutIn, k.plate, k.dishwasher));
  EXPECT_TRUE(has_violation(r, "container is closed"));
}

TEST(Preconditions, GrabFromClosedContainerRejected) {
  auto k = kitchen_scene();
  const auto r = check_preconditions(k.state, make_step(k.agent, Verb::Grab, k.apple));
  EXPECT_TRUE(has_violation(r, "inside a closed container"));
  auto s = apply_action(k.state, make_step(k.agent, Verb::Open, k.fridge));
  EXPECT_TRUE(check_preconditions(s, make_step(k.agent, Verb::Grab, k.apple)).ok);
}

TEST(Preconditions, HandCapacityIsTwo) {
  WorldBuilder b(shipped_catalog());
  const int kitchen = b.add_room("kitchen");
  const int a = b.add_object("apple", kitchen);
  const int c = b.add_object("cup", kitchen);
  const int d = b.add_object("fork", kitchen);
  const int agent = b.add_agent(kitchen);
  auto s = apply_action(b.build(), make_step(agent, Verb::Grab, a));
  s = apply_action(s, make_step(agent, Verb::Grab, c));
  const auto r = check_preconditions(s, make_step(agent, Verb::Grab, d));
  EXPECT_TRUE(has_violation(r, "hands are full"));
}

TEST(Preconditions, MalformedStepsThrowDistinctError) {
  auto k = kitchen_scene();
  EXPECT_THROW(check_preconditions(k.state, make_step(k.agent, Verb::Grab, 999)), MalformedStep);
  EXPECT_THROW(check_preconditions(k.state, make_step(5, Verb::Grab, k.plate)), MalformedStep);
  EXPECT_THROW(check_preconditions(k.state, make_step(k.agent, Verb::Put, k.plate)), MalformedStep);
  EXPECT_THROW(check_preconditions(k.state, make_step(k.agent, Verb::StandUp, k.plate)),
               MalformedStep);
}

TEST(Apply, GrabThenPutSetsSupport) {
  auto k = kitchen_scene();
  auto s = apply_action(k.state, make_step(k.agent, Verb::Grab, k.plate));
  s = apply_action(s, make_step(k.agent, Verb::Walk, k.living));
  s = apply_action(s, make_step(k.agent, Verb::Put, k.plate, k.table));
  ASSERT_TRUE(s.object(k.plate).support.has_value());
  EXPECT_EQ(*s.object(k.plate).support, (Support{Relation::On, k.table}));
  EXPECT_FALSE(s.object(k.plate).holder.has_value());
  EXPECT_TRUE(s.agent(k.agent).holding.empty());
}

TEST(Apply, HeldObjectMovesWithAgent) {
  auto k = kitchen_scene();
  auto s = apply_action(k.state, make_step(k.agent, Verb::Grab, k.plate));
  s = apply_action(s, make_step(k.agent, Verb::Walk, k.living));
  EXPECT_EQ(s.object(k.plate).location, k.living);
  s = apply_action(s, make_step(k.agent, Verb::Walk, k.kitchen));
  EXPECT_EQ(s.object(k.plate).location, k.kitchen);
}

TEST(Apply, InputNotMutatedAndStepCountIncrements) {
  auto k = kitchen_scene();
  const auto before = serialize_state(k.state);
  const auto s = apply_action(k.state, make_step(k.agent, Verb::Grab, k.plate));
  EXPECT_EQ(serialize_state(k.state), before);
  EXPECT_EQ(s.step_count, k.state.step_count + 1);
}

TEST(Apply, RejectionLeavesStateUnchanged) {
  auto k = kitchen_scene();
  auto s = k.state;
  const auto before = serialize_state(s);
  try {
    apply_action_in_place(s, make_step(k.agent, Verb::Close, k.fridge));
    FAIL() << "expected rejection";
  } catch (const ActionRejected& e) {
    ASSERT_FALSE(e.violations().empty());
    EXPECT_EQ(e.violations().front(), "already closed");
  }
  EXPECT_EQ(serialize_state(s), before);
}

TEST(Apply, DropPlacesInRoomWithoutSupport) {
  auto k = kitchen_scene();
  auto s = apply_action(k.state, make_step(k.agent, Verb::Open, k.fridge));
  s = apply_action(s, make_step(k.agent, Verb::Grab, k.apple));
  s = apply_action(s, make_step(k.agent, Verb::Walk, k.living));
  s = apply_action(s, make_step(k.agent, Verb::Drop, k.apple));
  EXPECT_EQ(s.object(k.apple).location, k.living);
  EXPECT_FALSE(s.object(k.apple).support.has_value());
}

TEST(Apply, PostureCycle) {
  WorldBuilder b(shipped_catalog());
  const int bedroom = b.add_room("bedroom");
  const int bed = b.add_object("bed", bedroom);
  const int agent = b.add_agent(bedroom);
  auto s = apply_action(b.build(), make_step(agent, Verb::Lie, bed));
  EXPECT_EQ(s.agent(agent).posture, Posture::Lying);
  s = apply_action(s, make_step(agent, Verb::Sleep));
  EXPECT_EQ(s.agent(agent).posture, Posture::Sleeping);
  EXPECT_FALSE(is_admissible(s, make_step(agent, Verb::StandUp)));
  s = apply_action(s, make_step(agent, Verb::WakeUp));
  s = apply_action(s, make_step(agent, Verb::StandUp));
  EXPECT_EQ(s.agent(agent).posture, Posture::Standing);
  EXPECT_EQ(s.agent(agent).posture_target, -1);
  EXPECT_TRUE(validate_state(s).empty());
}

TEST(Apply, WipeSetsClean) {
  WorldBuilder b(shipped_catalog());
  const int living = b.add_room("living room");
  const int table = b.add_object("coffee table", living);
  const int agent = b.add_agent(living);
  b.set_flag(table, StateFlag::Dirty);
  const auto s = apply_action(b.build(), make_step(agent, Verb::Wipe, table));
  EXPECT_TRUE(s.object(table).has(StateFlag::Clean));
  EXPECT_FALSE(s.object(table).has(StateFlag::Dirty));
}

TEST(Enumerate, AloneInEmptyRoomCanWalkEverywhere) {
  WorldBuilder b(shipped_catalog());
  std::vector<int> rooms;
  for (const auto& r : shipped_catalog()->room_names()) rooms.push_back(b.add_room(r));
  const int agent = b.add_agent(rooms[0]);
  const auto acts = enumerate_admissible_actions(b.build(), agent);
  for (std::size_t i = 1; i < rooms.size(); ++i) {
    EXPECT_NE(std::find(acts.begin(), acts.end(), make_step(agent, Verb::Walk, rooms[i])),
              acts.end());
  }
  EXPECT_EQ(std::find(acts.begin(), acts.end(), make_step(agent, Verb::Walk, rooms[0])),
            acts.end());
}

TEST(Enumerate, UnknownAgentThrows) {
  auto k = kitchen_scene();
  EXPECT_THROW(enumerate_admissible_actions(k.state, 3), std::invalid_argument);
}

// Brute force: every (verb, args) combination checked through the
// message-collecting path.
std::vector<ActionStep> brute_force(const WorldState& s, int agent) {
  std::vector<ActionStep> out;
  const int n = static_cast<int>(s.objects.size());
  for (Verb v : all_verbs()) {
    const int arity = verb_arity(v);
    if (arity == 0) {
      if (check_preconditions(s, make_step(agent, v)).ok) out.push_back(make_step(agent, v));
    } else if (arity == 1) {
      for (int x = 0; x < n; ++x) {
        if (check_preconditions(s, make_step(agent, v, x)).ok) out.push_back(make_step(agent, v, x));
      }
    } else {
      for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
          const auto st = make_step(agent, v, x, y);
          if (check_preconditions(s, st).ok) out.push_back(st);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

TEST(Enumerate, MatchesBruteForceAlongRandomWalks) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    auto s = sample_scene(shipped_catalog(), seed, SceneSize::Small);
    Rng rng(seed);
    for (int step = 0; step < 40; ++step) {
      const auto fast = enumerate_admissible_actions(s, 0);
      ASSERT_EQ(fast, brute_force(s, 0)) << "seed " << seed << " step " << step;
      ASSERT_FALSE(fast.empty());
      apply_action_in_place(s, rng.pick(fast));
    }
  }
}

TEST(Fuzz, ClosureConservationDeterminism) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto s = sample_scene(shipped_catalog(), seed, static_cast<SceneSize>(seed % 3));
    add_agent(s, s.rooms[seed % s.rooms.size()]);
    const auto n_objects = s.objects.size();
    auto replay = s;
    Rng rng(mix_seed(seed, 99));
    std::vector<ActionStep> steps;
    for (int i = 0; i < 500; ++i) {
      const int agent = i % 2;
      const auto acts = enumerate_admissible_actions(s, agent);
      ASSERT_FALSE(acts.empty());
      const auto step = rng.pick(acts);
      ASSERT_TRUE(check_preconditions(s, step).ok);
      apply_action_in_place(s, step);
      steps.push_back(step);
      const auto v = validate_state(s);
      ASSERT_TRUE(v.empty()) << "seed " << seed << " step " << i << " "
                             << render_action_script(s, step) << ": " << v.front();
      ASSERT_EQ(s.objects.size(), n_objects);
    }
    for (const auto& st : steps) replay = apply_action(replay, st);
    EXPECT_EQ(serialize_state(replay), serialize_state(s));
  }
}

TEST(Validate, ObjectHeldByTwoAgents) {
  auto k = kitchen_scene();
  auto s = apply_action(k.state, make_step(k.agent, Verb::Grab, k.plate));
  const int other = add_agent(s, k.kitchen);
  s.agent(other).holding.push_back(k.plate);
  EXPECT_FALSE(validate_state(s).empty());
}

TEST(Validate, HeldAndSupported) {
  auto k = kitchen_scene();
  auto s = apply_action(k.state, make_step(k.agent, Verb::Grab, k.plate));
  s.object(k.plate).support = Support{Relation::In, k.dishwasher};
  EXPECT_FALSE(validate_state(s).empty());
}

TEST(Validate, BothOpenAndClosed) {
  auto k = kitchen_scene();
  k.state.object(k.fridge).set(StateFlag::Open);
  EXPECT_FALSE(validate_state(k.state).empty());
}

TEST(Render, VerbTemplates) {
  auto k = kitchen_scene();
  WorldBuilder b(shipped_catalog());
  const int living = b.add_room("living room");
  const int sofa = b.add_object("sofa", living);
  const int kitchen = b.add_room("kitchen");
  const int milk = b.add_object("milk", kitchen);
  const int cup = b.add_object("cup", kitchen);
  b.add_agent(living);
  const auto s = b.build();
  EXPECT_EQ(render_action_to_text(s, make_step(0, Verb::Sit, sofa)), "Sit on sofa");
  EXPECT_EQ(render_action_to_text(k.state, make_step(0, Verb::PutIn, k.plate, k.dishwasher)),
            "Put plate in dishwasher");
  EXPECT_EQ(render_action_to_text(s, make_step(0, Verb::Pour, milk, cup)), "Pour milk into cup");
  EXPECT_EQ(render_action_script(k.state, make_step(0, Verb::PutIn, k.plate, k.dishwasher)),
            "<char0> [PutIn] <plate> (" + std::to_string(k.plate) + ") <dishwasher> (" +
                std::to_string(k.dishwasher) + ")");
}

TEST(Render, TotalOverAllVerbs) {
  auto k = kitchen_scene();
  for (Verb v : all_verbs()) {
    const int arity = verb_arity(v);
    const auto step = make_step(0, v, arity > 0 ? k.plate : -1, arity > 1 ? k.dishwasher : -1);
    const auto text = render_action_to_text(k.state, step);
    EXPECT_FALSE(text.empty());
    EXPECT_EQ(text.find('{'), std::string::npos) << verb_name(v);
  }
}

TEST(Serialize, RoundTrip) {
  auto s = sample_scene(shipped_catalog(), 11, SceneSize::Large);
  const auto acts = enumerate_admissible_actions(s, 0);
  s = apply_action(s, acts.front());
  const auto text = serialize_state(s);
  const auto back = state_from_json(nlohmann::json::parse(text), shipped_catalog());
  EXPECT_EQ(serialize_state(back), text);
  EXPECT_EQ(state_hash(back), state_hash(s));
}

TEST(Serialize, StepRoundTrip) {
  const auto st = make_step(1, Verb::Put, 4, 9);
  EXPECT_EQ(step_from_json(step_to_json(st)), st);
  EXPECT_THROW(step_from_json(nlohmann::json::parse(R"({"agent":0,"verb":"Put","args":[1]})")),
               MalformedStep);
}

}  // namespace
}  // namespace embexp
