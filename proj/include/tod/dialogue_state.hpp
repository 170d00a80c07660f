#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tod/domain.hpp"
#include "tod/slot_map.hpp"

namespace tod {

struct Turn {
  std::string speaker;  // "user" | "system"
  std::string text;
  std::string delex;  // empty when no delexicalized form is known
};

struct DialogueState {
  std::string dialogue_id;
  std::vector<Turn> turns;
  std::optional<Intent> last_intent;
  std::map<std::string, SlotMap> history_slots;
  bool ended = false;

  std::string last_tool() const {
    return last_intent ? to_tool(*last_intent) : "none";
  }
};

}  // namespace tod
