#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "embexp/util.hpp"
#include "embexp/world.hpp"

namespace embexp {

enum class ActionCategory : std::uint8_t { Walk, Grab, Put, PutIn, Drop, OtherMove, Irrelevant };

ActionCategory categorize(Verb v);

/// Sampling weights for the exploration policy. `irrelevant_rate` is the
/// probability of drawing a step that moves nothing (switching, wiping,
/// watching, ...) whenever one is available.
struct PolicyBias {
  double walk = 3.0;
  double grab = 3.0;
  double put = 2.0;
  double put_in = 1.0;
  double drop = 0.5;
  double other_move = 0.5;  // Run, Find
  double irrelevant_rate = 0.25;

  static PolicyBias walk_only() { return {1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}; }
  void validate() const;
};

class RandomPolicy {
 public:
  explicit RandomPolicy(PolicyBias bias = {});

  /// Samples an admissible step for `agent`. Throws when none exists.
  ActionStep sample(const WorldState& state, int agent, Rng& rng) const;
  /// Restricts the draw to movement steps (Walk, Run, Find of a room).
  ActionStep sample_movement(const WorldState& state, int agent, Rng& rng) const;

  const PolicyBias& bias() const { return bias_; }

 private:
  PolicyBias bias_;
};

RandomPolicy random_policy(const PolicyBias& bias);

struct ExplorationTrace {
  std::string id;
  WorldState initial_state;  // agents already placed
  int n_agents = 1;
  std::vector<ActionStep> steps;
  /// Grabbable object id -> rooms visited, consecutive repeats removed.
  std::map<int, std::vector<int>> object_paths;
  /// Room, surface or container id -> grabbable objects resting there.
  std::map<int, std::vector<int>> final_locations;
  std::vector<std::string> agent_names;
  std::uint64_t seed = 0;
};

/// Display name for an agent: Tom, Mary, then further names.
std::string agent_display_name(int agent);

/// Room or holder where each grabbable object rests in `state`. Held objects
/// count as being in their holder's room.
std::map<int, std::vector<int>> final_locations_of(const WorldState& state);

/// Adds agents to `state`, then runs `n_steps` round-robin policy steps. The
/// first step of every agent is a move so narratives state where each agent is.
ExplorationTrace explore(const WorldState& state, int n_agents, int n_steps,
                         const RandomPolicy& policy, std::uint64_t seed);

/// Builds a trace from a fixed step list by replaying it; paths and final
/// locations are derived exactly as explore() derives them.
ExplorationTrace scripted_trace(const WorldState& initial, std::vector<ActionStep> steps,
                                std::uint64_t seed = 0);

/// Replays the trace from its initial state. Throws ActionRejected if a step
/// is no longer admissible.
WorldState replay_trace(const ExplorationTrace& trace);

/// One past-tense sentence per step. `style_seed` permutes the motion verbs;
/// seed 0 keeps the order went/walked/travelled/moved/journeyed.
std::string render_trace_to_narrative(const ExplorationTrace& trace, std::uint64_t style_seed);
std::vector<std::string> narrative_sentences(const ExplorationTrace& trace, std::uint64_t style_seed);

}  // namespace embexp
