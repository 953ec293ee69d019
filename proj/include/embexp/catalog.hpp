#pragma once

#include <bitset>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "embexp/action.hpp"

namespace embexp {

enum class Property : std::uint8_t {
  Grabbable, Surface, Container, Switchable, Openable,
  Sittable, Lieable, Drinkable, Eatable, Room,
};

inline constexpr std::size_t kPropertyCount = 10;

std::string_view property_name(Property p);
std::optional<Property> parse_property(std::string_view name);

struct ObjectClass {
  std::string name;
  std::bitset<kPropertyCount> properties;
  /// Verbs this class affords beyond what its properties imply
  /// (Watch, Type, Greet, PutOn, PutOff, Pour as a target, Squeeze).
  std::bitset<kVerbCount> extra_verbs;
  /// Rooms where instances appear. Fixed classes get one instance per room,
  /// grabbable classes are placed in one of them.
  std::vector<std::string> rooms;
  /// Holder classes a grabbable instance may start ON / IN.
  std::vector<std::string> spawn_on;
  std::vector<std::string> spawn_in;
  double on_probability = 0.0;
  double open_probability = 0.0;
  double dirty_probability = 0.0;

  bool has(Property p) const { return properties.test(static_cast<std::size_t>(p)); }
  bool affords(Verb v) const { return extra_verbs.test(static_cast<std::size_t>(v)); }
  bool is_room() const { return has(Property::Room); }
  /// Objects that carry a clean/dirty flag.
  bool cleanable() const { return has(Property::Grabbable) || has(Property::Surface); }
};

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Object classes and room layout, loaded from a versioned JSON file.
/// Room names become classes with the single `room` property.
class Catalog {
 public:
  static Catalog parse(std::string_view json_text, std::string_view source = "<catalog>");
  static Catalog load(const std::string& path);

  const std::string& version() const { return version_; }
  const std::vector<std::string>& room_names() const { return rooms_; }
  const std::vector<ObjectClass>& classes() const { return classes_; }
  const ObjectClass& at(int index) const { return classes_.at(static_cast<std::size_t>(index)); }
  /// Index of a class by name, or -1.
  int find(std::string_view name) const;
  int require(std::string_view name) const;
  std::size_t size() const { return classes_.size(); }

 private:
  std::string version_;
  std::vector<std::string> rooms_;
  std::vector<ObjectClass> classes_;
  std::unordered_map<std::string, int> index_;
};

using CatalogPtr = std::shared_ptr<const Catalog>;

CatalogPtr load_catalog(const std::string& path);

}  // namespace embexp
