#pragma once

#include <map>
#include <string>

namespace tod {

// The three agent prompt skeletons, stored as versioned text assets with
// {{name}} placeholders.
class PromptTemplates {
 public:
  static PromptTemplates load(const std::string& data_path);
  static const PromptTemplates& bundled();

  const std::string& intent() const { return intent_; }
  const std::string& slot() const { return slot_; }
  const std::string& response() const { return response_; }

  static std::string render(const std::string& tmpl,
                            const std::map<std::string, std::string>& fields);

 private:
  std::string intent_;
  std::string slot_;
  std::string response_;
};

}  // namespace tod
