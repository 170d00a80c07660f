#pragma once

#include <string>
#include <vector>

#include "tod/db_engine.hpp"
#include "tod/dialogue_state.hpp"
#include "tod/error.hpp"
#include "tod/prompts.hpp"

namespace tod {

inline constexpr const char* kClosingResponse = "You are welcome. Goodbye!";

struct ResponsePromptInputs {
  std::string question;
  const Observation* observation = nullptr;
  std::vector<Turn> history;  // bounded window of prior turns, oldest first
  int max_words = 25;
};

struct ValidatedResponse {
  std::string text;
  bool contains_count = false;
  std::vector<std::string> placeholders;
  int word_count = 0;
  bool over_limit = false;
};

class ResponseAgent {
 public:
  explicit ResponseAgent(const PromptTemplates* templates) : templates_(templates) {}

  std::string build_prompt(const ResponsePromptInputs& inputs) const;

  // Diagnostics only; never rewrites the text.
  static ValidatedResponse validate(const std::string& text, const Observation& observation,
                                    int max_words = 25);

  // [name] tokens with names over [a-z0-9_ ].
  static std::vector<std::string> extract_placeholders(const std::string& text);

 private:
  const PromptTemplates* templates_;
};

}  // namespace tod
