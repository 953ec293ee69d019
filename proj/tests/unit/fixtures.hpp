#pragma once

#include <string>

#include "embexp/catalog.hpp"
#include "embexp/goals.hpp"
#include "embexp/world.hpp"

namespace embexp::testing {

inline std::string data_path(const std::string& name) {
  return std::string(EMBEXP_DATA_DIR) + "/" + name;
}

inline std::string golden_path(const std::string& name) {
  return std::string(EMBEXP_GOLDEN_DIR) + "/" + name;
}

inline const CatalogPtr& shipped_catalog() {
  static const CatalogPtr cat = load_catalog(data_path("catalog.json"));
  return cat;
}

inline const std::vector<Activity>& shipped_library() {
  static const std::vector<Activity> lib =
      load_activity_library(data_path("activities.jsonl"), *shipped_catalog());
  return lib;
}

}  // namespace embexp::testing
