#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace embexp {

/// The 36 atomic actions of the household simulator, in table order.
enum class Verb : std::uint8_t {
  Find, Walk, Run, Sit, StandUp, Grab, Open, Close, Put, PutIn,
  SwitchOn, SwitchOff, Drink, TurnTo, LookAt, Wipe, PutOn, PutOff, Greet, Drop,
  Touch, Lie, Pour, Type, Watch, Move, Wash, Rinse, Scrub, Squeeze,
  PlugIn, PlugOut, Cut, Eat, Sleep, WakeUp,
};

inline constexpr std::size_t kVerbCount = 36;

constexpr std::array<Verb, kVerbCount> all_verbs() {
  std::array<Verb, kVerbCount> out{};
  for (std::size_t i = 0; i < kVerbCount; ++i) out[i] = static_cast<Verb>(i);
  return out;
}

std::string_view verb_name(Verb v);
std::optional<Verb> parse_verb(std::string_view name);
int verb_arity(Verb v);

/// One executable step `<char{agent}> [Verb] <arg1> (id1) <arg2> (id2)`.
/// Unused argument slots hold -1. Ordering is (agent, verb, args), which is
/// the deterministic enumeration order used throughout.
struct ActionStep {
  int agent = 0;
  Verb verb = Verb::Walk;
  std::array<int, 2> args{-1, -1};

  int arity() const { return verb_arity(verb); }
  auto operator<=>(const ActionStep&) const = default;
};

ActionStep make_step(int agent, Verb verb, int arg0 = -1, int arg1 = -1);

/// Fills the natural-language template for a verb with already resolved
/// object names: ("Put", "plate", "table") -> "Put plate on table".
std::string fill_action_template(Verb verb, std::string_view first = {},
                                 std::string_view second = {});

}  // namespace embexp
