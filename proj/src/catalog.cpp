#include "embexp/catalog.hpp"

#include <array>

#include <nlohmann/json.hpp>

#include "embexp/util.hpp"

namespace embexp {
namespace {

constexpr std::array<std::string_view, kPropertyCount> kPropertyNames{
    "grabbable", "surface", "container", "switchable", "openable",
    "sittable",  "lieable", "drinkable", "eatable",    "room",
};

// Verbs a catalog entry may list under "verbs".
constexpr std::array<Verb, 7> kAffordanceVerbs{
    Verb::Watch, Verb::Type, Verb::Greet, Verb::PutOn,
    Verb::PutOff, Verb::Pour, Verb::Squeeze,
};

std::vector<std::string> string_list(const nlohmann::json& entry, const char* key) {
  if (!entry.contains(key)) return {};
  return entry.at(key).get<std::vector<std::string>>();
}

}  // namespace

std::string_view property_name(Property p) {
  return kPropertyNames.at(static_cast<std::size_t>(p));
}

std::optional<Property> parse_property(std::string_view name) {
  for (std::size_t i = 0; i < kPropertyNames.size(); ++i) {
    if (kPropertyNames[i] == name) return static_cast<Property>(i);
  }
  return std::nullopt;
}

int Catalog::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? -1 : it->second;
}

int Catalog::require(std::string_view name) const {
  const int i = find(name);
  if (i < 0) throw CatalogError("unknown object class '" + std::string(name) + "'");
  return i;
}

Catalog Catalog::parse(std::string_view json_text, std::string_view source) {
  const std::string where(source);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CatalogError(where + ": " + e.what());
  }

  Catalog cat;
  try {
    cat.version_ = doc.at("version").get<std::string>();
    cat.rooms_ = doc.at("rooms").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw CatalogError(where + ": " + e.what());
  }

  auto add = [&](ObjectClass cls) {
    if (cat.index_.contains(cls.name)) {
      throw CatalogError(where + ": duplicate class name '" + cls.name + "'");
    }
    cat.index_.emplace(cls.name, static_cast<int>(cat.classes_.size()));
    cat.classes_.push_back(std::move(cls));
  };

  for (const auto& room : cat.rooms_) {
    ObjectClass cls;
    cls.name = room;
    cls.properties.set(static_cast<std::size_t>(Property::Room));
    cls.rooms = {room};
    add(std::move(cls));
  }

  for (const auto& entry : doc.at("classes")) {
    ObjectClass cls;
    try {
      cls.name = entry.at("name").get<std::string>();
      for (const auto& p : string_list(entry, "properties")) {
        auto prop = parse_property(p);
        if (!prop) throw CatalogError("unknown property '" + p + "'");
        if (*prop == Property::Room) {
          throw CatalogError("'room' is reserved for the rooms list");
        }
        cls.properties.set(static_cast<std::size_t>(*prop));
      }
      for (const auto& v : string_list(entry, "verbs")) {
        auto verb = parse_verb(v);
        if (!verb || std::find(kAffordanceVerbs.begin(), kAffordanceVerbs.end(), *verb) ==
                         kAffordanceVerbs.end()) {
          throw CatalogError("verb '" + v + "' cannot be listed as an affordance");
        }
        cls.extra_verbs.set(static_cast<std::size_t>(*verb));
      }
      cls.rooms = string_list(entry, "rooms");
      cls.spawn_on = string_list(entry, "on");
      cls.spawn_in = string_list(entry, "in");
      cls.on_probability = entry.value("on_probability", 0.0);
      cls.open_probability = entry.value("open_probability", 0.0);
      cls.dirty_probability = entry.value("dirty_probability", 0.0);
    } catch (const nlohmann::json::exception& e) {
      throw CatalogError(where + ": class entry: " + e.what());
    } catch (const CatalogError& e) {
      throw CatalogError(where + ": class '" + cls.name + "': " + e.what());
    }
    if (cls.rooms.empty()) {
      throw CatalogError(where + ": class '" + cls.name + "' lists no rooms");
    }
    if (cls.has(Property::Grabbable) &&
        (cls.has(Property::Surface) || cls.has(Property::Container))) {
      throw CatalogError(where + ": class '" + cls.name +
                         "' cannot be both grabbable and a holder");
    }
    add(std::move(cls));
  }

  // Cross references resolve once every class is known.
  for (const auto& cls : cat.classes_) {
    for (const auto& room : cls.rooms) {
      const int r = cat.find(room);
      if (r < 0 || !cat.classes_[static_cast<std::size_t>(r)].is_room()) {
        throw CatalogError(where + ": class '" + cls.name + "' references unknown room '" +
                           room + "'");
      }
    }
    for (const auto& holder : cls.spawn_on) {
      const int h = cat.find(holder);
      if (h < 0 || !cat.classes_[static_cast<std::size_t>(h)].has(Property::Surface)) {
        throw CatalogError(where + ": class '" + cls.name + "' spawns on non-surface '" +
                           holder + "'");
      }
    }
    for (const auto& holder : cls.spawn_in) {
      const int h = cat.find(holder);
      if (h < 0 || !cat.classes_[static_cast<std::size_t>(h)].has(Property::Container)) {
        throw CatalogError(where + ": class '" + cls.name + "' spawns in non-container '" +
                           holder + "'");
      }
    }
  }
  return cat;
}

Catalog Catalog::load(const std::string& path) {
  return parse(read_text_file(path), path);
}

CatalogPtr load_catalog(const std::string& path) {
  return std::make_shared<const Catalog>(Catalog::load(path));
}

}  // namespace embexp
