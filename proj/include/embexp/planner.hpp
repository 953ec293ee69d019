#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "embexp/goals.hpp"
#include "embexp/world.hpp"

namespace embexp {

/// Rewards are kept exact so reward bookkeeping can be checked with equality.
using Rational = boost::rational<std::int64_t>;

std::string rational_to_string(const Rational& r);
Rational parse_rational(std::string_view text);

struct PlannerConfig {
  Rational reward_satisfy{2};
  Rational step_penalty{-1, 10};
  double uct_c = 1.0;
  int max_depth = 30;
  int rollout_depth = 10;
  int simulations_per_step = 200;
  std::uint64_t seed = 0;
  /// +reward_satisfy for every newly satisfied predicate instead of once per step.
  bool bonus_per_predicate = false;

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

struct StepReward {
  Rational reward;
  Goal newly_satisfied;
  Goal remaining;
};

StepReward step_reward(const Goal& prev_remaining, const WorldState& new_state,
                       const PlannerConfig& cfg);

struct SearchNode {
  WorldState state;
  Goal remaining;
  std::optional<ActionStep> incoming;
  /// Reward collected by the incoming step.
  double reward = 0.0;
  int visits = 0;
  double total_value = 0.0;
  bool expanded = false;
  /// Candidate steps, in deterministic order; children[i] belongs to actions[i]
  /// and stays null until first visited.
  std::vector<ActionStep> actions;
  std::vector<std::unique_ptr<SearchNode>> children;

  bool terminal() const { return remaining.empty(); }
};

/// Index into node.actions chosen by UCT. Unvisited children come first;
/// ties go to the earliest action.
std::size_t uct_select_index(const SearchNode& node, double uct_c);
ActionStep uct_select(const SearchNode& node, const PlannerConfig& cfg);

/// Steps the planner searches over: walking between rooms plus effectful
/// actions whose object arguments all belong to `relevant` classes or hold
/// one of them.
std::vector<ActionStep> planner_candidates(const WorldState& state, int agent,
                                           const std::vector<bool>& relevant);

/// Class-index mask of an activity's relevant classes and goal classes.
std::vector<bool> relevance_mask(const Catalog& catalog, const Activity& activity);

struct SearchStats {
  std::uint64_t simulations = 0;
  std::uint64_t nodes = 0;
  int max_tree_depth = 0;
  /// Visits of the committed child at each step.
  std::vector<int> committed_visits;
};

struct PlanEpisode {
  std::string id;
  Activity activity;
  WorldState initial_state;
  std::string initial_condition;
  std::vector<ActionStep> steps;
  std::vector<Rational> per_step_reward;
  int satisfaction_events = 0;
  bool success = false;
  Goal remaining;
  SearchStats stats;
  std::uint64_t seed = 0;

  Rational total_reward() const;
};

class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs MCTS from `state` until the activity goal is met or max_depth steps
/// are committed. Agent 0 acts.
PlanEpisode plan(const WorldState& state, const Activity& activity, const PlannerConfig& cfg);

/// "Walk to living room. Sit on sofa. Watch TV."
std::string render_plan_text(const WorldState& initial, const std::vector<ActionStep>& steps);

/// Relevant objects' rooms, locations and non-default states. With
/// `confusing`, 1-3 true statements about unrelated objects are appended.
std::string render_initial_condition(const WorldState& state, const Activity& activity,
                                     bool confusing, std::uint64_t seed);

}  // namespace embexp
