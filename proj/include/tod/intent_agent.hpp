#pragma once

#include <string>
#include <vector>

#include "tod/domain.hpp"
#include "tod/error.hpp"
#include "tod/prompts.hpp"
#include "tod/schema.hpp"

namespace tod {

struct IntentPromptInputs {
  std::string question;
  std::string last_tool = "none";
};

struct IntentCompletion {
  std::string last_tool;
  std::string question_echo;
  std::string action;
  std::vector<std::string> warnings;
};

class IntentAgent {
 public:
  IntentAgent(const SchemaSet* schemas, const PromptTemplates* templates)
      : schemas_(schemas), templates_(templates) {}

  std::string build_prompt(const IntentPromptInputs& inputs) const;

  // Total over arbitrary text: returns a completion or a typed error.
  static Result<IntentCompletion> parse_completion(const std::string& text);

  // "Last Tool: ...\nQuestion: ...\nAction: ...\nFinish!" - the gold-target
  // rendering used for SFT data and the oracle backend.
  static std::string format_completion(const std::string& last_tool,
                                       const std::string& question,
                                       const std::string& action);

  // "  - name: description. only allowed values: [...]" body lines shared
  // with the slot prompt rendering.
  static std::string render_slot_line(const SlotSpec& spec);

 private:
  const SchemaSet* schemas_;
  const PromptTemplates* templates_;
};

}  // namespace tod
