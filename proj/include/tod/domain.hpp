#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "tod/error.hpp"

namespace tod {

inline constexpr std::array<const char*, 9> kDomains = {
    "restaurant", "hotel", "train", "attraction", "taxi",
    "hospital",   "police", "bus",  "other"};

bool is_domain(const std::string& name);

enum class Action { find, book, end };

struct Intent {
  std::string domain;
  Action action = Action::find;

  bool operator==(const Intent& other) const {
    return domain == other.domain && action == other.action;
  }
};

// The 12 tools offered to the Intent Classification Agent, in catalog order.
const std::vector<std::pair<std::string, std::string>>& tool_catalog();
bool is_tool(const std::string& name);
bool domain_has_book(const std::string& domain);

Result<Intent> to_intent(const std::string& action_name);
std::string to_tool(const Intent& intent);

}  // namespace tod
