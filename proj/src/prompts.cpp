#include "tod/prompts.hpp"

#include "tod/util.hpp"

namespace tod {

PromptTemplates PromptTemplates::load(const std::string& data_path) {
  PromptTemplates t;
  t.intent_ = util::read_file(data_path + "/prompts/intent.txt");
  t.slot_ = util::read_file(data_path + "/prompts/slot.txt");
  t.response_ = util::read_file(data_path + "/prompts/response.txt");
  return t;
}

const PromptTemplates& PromptTemplates::bundled() {
  static const PromptTemplates t = PromptTemplates::load(util::data_dir());
  return t;
}

std::string PromptTemplates::render(const std::string& tmpl,
                                    const std::map<std::string, std::string>& fields) {
  std::string out = tmpl;
  for (const auto& [name, value] : fields) {
    out = util::replace_all(out, "{{" + name + "}}", value);
  }
  return out;
}

}  // namespace tod
