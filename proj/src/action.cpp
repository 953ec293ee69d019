#include "embexp/action.hpp"

#include <stdexcept>

namespace embexp {
namespace {

struct VerbInfo {
  std::string_view name;
  int arity;
  // Template with {0} / {1} placeholders for the object names.
  std::string_view text;
};

constexpr std::array<VerbInfo, kVerbCount> kVerbs{{
    {"Find", 1, "Find {0}"},
    {"Walk", 1, "Walk to {0}"},
    {"Run", 1, "Run to {0}"},
    {"Sit", 1, "Sit on {0}"},
    {"StandUp", 0, "Stand up"},
    {"Grab", 1, "Grab {0}"},
    {"Open", 1, "Open {0}"},
    {"Close", 1, "Close {0}"},
    {"Put", 2, "Put {0} on {1}"},
    {"PutIn", 2, "Put {0} in {1}"},
    {"SwitchOn", 1, "Switch on {0}"},
    {"SwitchOff", 1, "Switch off {0}"},
    {"Drink", 1, "Drink {0}"},
    {"TurnTo", 1, "Turn to {0}"},
    {"LookAt", 1, "Look at {0}"},
    {"Wipe", 1, "Wipe {0}"},
    {"PutOn", 1, "Put on {0}"},
    {"PutOff", 1, "Put off {0}"},
    {"Greet", 1, "Greet {0}"},
    {"Drop", 1, "Drop {0}"},
    {"Touch", 1, "Touch {0}"},
    {"Lie", 1, "Lie on {0}"},
    {"Pour", 2, "Pour {0} into {1}"},
    {"Type", 1, "Type {0}"},
    {"Watch", 1, "Watch {0}"},
    {"Move", 1, "Move {0}"},
    {"Wash", 1, "Wash {0}"},
    {"Rinse", 1, "Rinse {0}"},
    {"Scrub", 1, "Scrub {0}"},
    {"Squeeze", 1, "Squeeze {0}"},
    {"PlugIn", 1, "Plug in {0}"},
    {"PlugOut", 1, "Plug out {0}"},
    {"Cut", 1, "Cut {0}"},
    {"Eat", 1, "Eat {0}"},
    {"Sleep", 0, "Sleep"},
    {"WakeUp", 0, "Wake up"},
}};

const VerbInfo& info(Verb v) {
  const auto i = static_cast<std::size_t>(v);
  if (i >= kVerbCount) throw std::out_of_range("unknown verb");
  return kVerbs[i];
}

}  // namespace

std::string_view verb_name(Verb v) { return info(v).name; }

int verb_arity(Verb v) { return info(v).arity; }

std::optional<Verb> parse_verb(std::string_view name) {
  for (std::size_t i = 0; i < kVerbCount; ++i) {
    if (kVerbs[i].name == name) return static_cast<Verb>(i);
  }
  return std::nullopt;
}

ActionStep make_step(int agent, Verb verb, int arg0, int arg1) {
  return ActionStep{agent, verb, {arg0, arg1}};
}

std::string fill_action_template(Verb verb, std::string_view first,
                                 std::string_view second) {
  std::string out;
  const std::string_view text = info(verb).text;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '{' && i + 2 < text.size() && text[i + 2] == '}') {
      out += text[i + 1] == '0' ? first : second;
      i += 2;
    } else {
      out += text[i];
    }
  }
  return out;
}

}  // namespace embexp
