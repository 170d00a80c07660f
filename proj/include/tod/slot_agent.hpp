#pragma once

#include <string>
#include <vector>

#include "tod/error.hpp"
#include "tod/prompts.hpp"
#include "tod/schema.hpp"
#include "tod/slot_map.hpp"

namespace tod {

struct SlotPromptInputs {
  std::string question;
  std::string domain;
  const SlotMap* history = nullptr;  // active domain's inherited slots
};

struct SlotResult {
  std::string action_echo;
  SlotMap parameters;                     // qualified names, normalized values
  std::vector<std::string> information;   // requestable attribute names
  std::vector<std::string> dropped;       // slots the completion explicitly emptied
  std::vector<std::string> warnings;
};

class SlotAgent {
 public:
  SlotAgent(const SchemaSet* schemas, const PromptTemplates* templates)
      : schemas_(schemas), templates_(templates) {}

  std::string build_prompt(const SlotPromptInputs& inputs) const;

  Result<SlotResult> parse_completion(const std::string& text,
                                      const std::string& domain) const;

  // Gold-target rendering used for SFT data and the oracle backend.
  static std::string format_completion(const std::string& question,
                                       const std::string& domain,
                                       const SlotMap& parameters,
                                       const std::vector<std::string>& information);

 private:
  const SchemaSet* schemas_;
  const PromptTemplates* templates_;
};

}  // namespace tod
