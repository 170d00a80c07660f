#include "tod/intent_agent.hpp"

#include <optional>

#include "tod/util.hpp"

namespace tod {

std::string IntentAgent::render_slot_line(const SlotSpec& spec) {
  std::string line = spec.name + ": " + spec.description + ".";
  if (spec.closed()) {
    line += " only allowed values: [" + util::join(spec.values, ", ") + "]";
  }
  return line;
}

std::string IntentAgent::build_prompt(const IntentPromptInputs& inputs) const {
  std::string tool_apis;
  for (const auto& [tool, desc] : tool_catalog()) {
    if (!tool_apis.empty()) tool_apis += "\n";
    tool_apis += tool + ": " + desc;
  }

  std::string task_logic;
  if (inputs.last_tool != "none") {
    Result<Intent> intent = to_intent(inputs.last_tool);
    if (!intent.ok()) {
      throw TodError(ErrorKind::UnknownLastTool, inputs.last_tool);
    }
    if (intent.value().action != Action::end) {
      const DomainSchema& schema = schemas_->at(intent.value().domain);
      task_logic = "If last query is " + inputs.last_tool +
                   ", the user can use the same tool for the following types of query:\n";
      for (const auto& spec : schema.informable) {
        task_logic += "  - " + render_slot_line(spec) + "\n";
      }
    }
  }

  return PromptTemplates::render(templates_->intent(),
                                 {{"tool_apis", tool_apis},
                                  {"task_logic", task_logic},
                                  {"last_tool", inputs.last_tool},
                                  {"question", inputs.question}});
}

namespace {

// First line starting with `label` (case-sensitive, anchored at line start);
// the value is the rest of the line, trimmed.
std::optional<std::string> find_labeled(const std::vector<std::string>& lines,
                                        const std::string& label, size_t* count = nullptr) {
  std::optional<std::string> found;
  for (const auto& raw : lines) {
    const std::string line = util::trim(raw);
    if (util::starts_with(line, label)) {
      if (!found) found = util::trim(line.substr(label.size()));
      if (count) ++*count;
    }
  }
  return found;
}

}  // namespace

Result<IntentCompletion> IntentAgent::parse_completion(const std::string& text) {
  if (util::trim(text).empty()) {
    return TodError(ErrorKind::EmptyCompletion, "intent completion is empty");
  }
  const std::vector<std::string> lines = util::split(text, '\n');
  IntentCompletion out;
  size_t action_count = 0;
  auto action = find_labeled(lines, "Action:", &action_count);
  if (!action) return TodError(ErrorKind::MissingField, "Action");
  out.action = *action;
  if (action_count > 1) {
    out.warnings.push_back("multiple Action lines; first taken");
  }
  if (!is_tool(out.action)) {
    return TodError(ErrorKind::UnknownAction, out.action);
  }
  out.last_tool = find_labeled(lines, "Last Tool:").value_or("");
  out.question_echo = find_labeled(lines, "Question:").value_or("");
  return out;
}

std::string IntentAgent::format_completion(const std::string& last_tool,
                                           const std::string& question,
                                           const std::string& action) {
  return "Last Tool: " + last_tool + "\nQuestion: " + question + "\nAction: " + action +
         "\nFinish!";
}

}  // namespace tod
