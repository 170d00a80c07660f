#include "tod/domain.hpp"

#include "tod/util.hpp"

namespace tod {

bool is_domain(const std::string& name) {
  for (const char* d : kDomains) {
    if (name == d) return true;
  }
  return false;
}

const std::vector<std::pair<std::string, std::string>>& tool_catalog() {
  static const std::vector<std::pair<std::string, std::string>> catalog = {
      {"find_hotel", "search for a hotel to stay in"},
      {"book_hotel", "book a hotel to stay in"},
      {"find_train", "search for trains that take you places"},
      {"book_train", "book train tickets"},
      {"find_attraction", "search for places to see for leisure"},
      {"find_restaurant", "search for places to wine and dine"},
      {"book_restaurant", "book a table at a restaurant"},
      {"find_hospital", "search for a medical facility or a doctor"},
      {"find_taxi", "find or book taxis to travel between places"},
      {"find_bus", "search for a bus"},
      {"find_police", "search for police station"},
      {"other",
       "This tool is used to handle problems that cannot be addressed by any "
       "other tools."},
  };
  return catalog;
}

bool is_tool(const std::string& name) {
  for (const auto& [tool, desc] : tool_catalog()) {
    if (tool == name) return true;
  }
  return false;
}

bool domain_has_book(const std::string& domain) {
  return domain == "restaurant" || domain == "hotel" || domain == "train";
}

Result<Intent> to_intent(const std::string& action_name) {
  if (action_name == "other") return Intent{"other", Action::end};
  if (!is_tool(action_name)) {
    return TodError(ErrorKind::UnknownAction, action_name);
  }
  if (util::starts_with(action_name, "find_")) {
    return Intent{action_name.substr(5), Action::find};
  }
  if (util::starts_with(action_name, "book_")) {
    return Intent{action_name.substr(5), Action::book};
  }
  return TodError(ErrorKind::UnknownAction, action_name);
}

std::string to_tool(const Intent& intent) {
  switch (intent.action) {
    case Action::find: return "find_" + intent.domain;
    case Action::book: return "book_" + intent.domain;
    case Action::end: return "other";
  }
  return "other";
}

}  // namespace tod
