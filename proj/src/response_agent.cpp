#include "tod/response_agent.hpp"

#include <cctype>

#include "tod/util.hpp"

namespace tod {

std::string ResponseAgent::build_prompt(const ResponsePromptInputs& inputs) const {
  std::string history_section;
  if (!inputs.history.empty()) {
    history_section = "\n## History Conversation\n\n";
    for (const auto& turn : inputs.history) {
      history_section += turn.speaker + ": " + turn.text + "\n";
    }
  }
  const std::string observation =
      inputs.observation ? inputs.observation->render() : "";
  return PromptTemplates::render(templates_->response(),
                                 {{"question", inputs.question},
                                  {"history_section", history_section},
                                  {"observation", observation},
                                  {"max_words", std::to_string(inputs.max_words)}});
}

std::vector<std::string> ResponseAgent::extract_placeholders(const std::string& text) {
  std::vector<std::string> out;
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '[') continue;
    size_t j = i + 1;
    std::string name;
    bool valid = j < text.size();
    while (j < text.size() && text[j] != ']') {
      const char c = text[j];
      if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == ' ') {
        name.push_back(c);
        ++j;
      } else {
        valid = false;
        break;
      }
    }
    if (valid && j < text.size() && !name.empty()) {
      out.push_back(name);
      i = j;
    }
  }
  return out;
}

ValidatedResponse ResponseAgent::validate(const std::string& text,
                                          const Observation& observation, int max_words) {
  if (util::trim(text).empty()) {
    throw TodError(ErrorKind::EmptyCompletion, "response completion is empty");
  }
  ValidatedResponse out;
  out.text = text;
  out.placeholders = extract_placeholders(text);

  const std::string count = std::to_string(observation.option_count);
  size_t pos = text.find(count);
  while (pos != std::string::npos && !out.contains_count) {
    const bool left_ok =
        pos == 0 || !std::isdigit(static_cast<unsigned char>(text[pos - 1]));
    const size_t end = pos + count.size();
    const bool right_ok =
        end >= text.size() || !std::isdigit(static_cast<unsigned char>(text[end]));
    out.contains_count = left_ok && right_ok;
    pos = text.find(count, pos + 1);
  }

  bool in_word = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++out.word_count;
    }
  }
  out.over_limit = out.word_count > max_words;
  return out;
}

}  // namespace tod
