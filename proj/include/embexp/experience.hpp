#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "embexp/exploration.hpp"
#include "embexp/planner.hpp"

namespace embexp {

class ExperienceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::ordered_json activity_to_json(const Activity& a);
Activity activity_from_json(const nlohmann::json& doc);

/// One experience line: {kind, payload, seed, catalog_version}.
nlohmann::ordered_json plan_record(const PlanEpisode& e);
nlohmann::ordered_json explore_record(const ExplorationTrace& t);

PlanEpisode plan_from_record(const nlohmann::json& doc, const CatalogPtr& catalog);
ExplorationTrace trace_from_record(const nlohmann::json& doc, const CatalogPtr& catalog);

struct ExperienceSet {
  std::vector<PlanEpisode> plans;
  std::vector<ExplorationTrace> traces;
};

std::string experiences_to_jsonl(const ExperienceSet& set);
/// Parses a JSONL stream. Errors carry "source:line: ". Records written
/// against another catalog version are rejected.
ExperienceSet experiences_from_jsonl(std::string_view text, const CatalogPtr& catalog,
                                     std::string_view source = "<experiences>");

}  // namespace embexp
