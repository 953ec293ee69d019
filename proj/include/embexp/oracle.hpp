#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "embexp/compiler.hpp"

namespace embexp {

/// Re-derives gold answers of simulation-backed eval records by replaying the
/// source plan or trace step by step, without the compiler's fact extraction.
///
/// counting_qa            count of objects whose last placement targeted the
///                        asked holder and that still rest there
/// object_path_tracking   rooms the object occupied, consecutive repeats removed
/// object_location_qa     neighbour of the reference room in that sequence
/// activity_recognition,  plan replays admissibly and every gold predicate
/// activity_inference     holds at some point of the replay; no distractor's
///                        goal holds at the end
struct OracleMismatch {
  std::string id;
  std::string message;
};

struct OracleReport {
  std::map<std::string, int> checked;
  std::vector<OracleMismatch> mismatches;

  int total() const;
  bool ok() const { return mismatches.empty(); }
};

OracleReport verify_eval_gold(std::span<const EvalExample> examples, std::span<const PlanEpisode> plans,
                              std::span<const ExplorationTrace> traces, std::span<const Activity> library);

}  // namespace embexp
