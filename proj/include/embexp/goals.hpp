#pragma once

#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "embexp/world.hpp"

namespace embexp {

enum class PredicateKind : std::uint8_t {
  On, In, Open, Closed, SwitchedOn, SwitchedOff, Holds, Sitting, Lying, Clean,
};

std::string_view predicate_kind_name(PredicateKind k);
int predicate_arity(PredicateKind k);

class GoalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A predicate argument. Class names and the literal `agent` are
/// existentially bound against the scene; ids name one instance.
struct Term {
  enum class Kind : std::uint8_t { ClassName, ObjectId, AnyAgent, AgentId };

  Kind kind = Kind::ClassName;
  std::string class_name;
  int id = -1;

  static Term of_class(std::string name) { return {Kind::ClassName, std::move(name), -1}; }
  static Term object(int id) { return {Kind::ObjectId, {}, id}; }
  static Term any_agent() { return {Kind::AnyAgent, {}, -1}; }
  static Term agent(int id) { return {Kind::AgentId, {}, id}; }

  bool is_agent() const { return kind == Kind::AnyAgent || kind == Kind::AgentId; }
  std::string to_string() const;
  auto operator<=>(const Term&) const = default;
};

struct Predicate {
  PredicateKind kind = PredicateKind::On;
  std::vector<Term> args;

  std::string to_string() const;
  auto operator<=>(const Predicate&) const = default;
};

/// Parses "ON(fork, table)", "SITTING(agent, sofa)", "OPEN(#12)", "HOLDS(@0, cup)".
Predicate parse_predicate(std::string_view text);

/// Object classes a predicate mentions (agent terms excluded).
std::vector<std::string> predicate_classes(const Predicate& p);

/// Sorted set of predicates without duplicates.
class Goal {
 public:
  Goal() = default;
  explicit Goal(std::vector<Predicate> predicates);

  const std::vector<Predicate>& predicates() const { return predicates_; }
  std::size_t size() const { return predicates_.size(); }
  bool empty() const { return predicates_.empty(); }
  bool contains(const Predicate& p) const;
  /// Set difference this \ other.
  Goal minus(const Goal& other) const;
  std::string to_string() const;  // "ON(fork, table);ON(plate, table)"
  auto begin() const { return predicates_.begin(); }
  auto end() const { return predicates_.end(); }
  bool operator==(const Goal&) const = default;

 private:
  std::vector<Predicate> predicates_;
};

struct Activity {
  std::string name;
  std::string room;
  Goal goal;
  /// Classes relevant to carrying the activity out, in file order.
  std::vector<std::string> relevant_classes;
  std::string description;
};

/// Checks every argument of `p` refers to something present in the state.
void check_resolvable(const WorldState& state, const Predicate& p);

/// Existential evaluation. Throws GoalError for unresolvable arguments.
bool evaluate_predicate(const WorldState& state, const Predicate& p);

/// Predicates of `g` that hold in `state`.
Goal satisfied_subset(const WorldState& state, const Goal& g);

struct LibraryRequirements {
  std::size_t min_activities = 50;
  std::size_t min_rooms = 5;
};

/// Reads an activity library (one JSON record per line). Errors carry the
/// 1-based line number.
std::vector<Activity> parse_activity_library(std::string_view text, const Catalog& catalog,
                                             const LibraryRequirements& req = {},
                                             std::string_view source = "<library>");
std::vector<Activity> load_activity_library(const std::string& path, const Catalog& catalog,
                                            const LibraryRequirements& req = {});

const Activity& find_activity(const std::vector<Activity>& library, std::string_view name);

}  // namespace embexp
