#include "tod/slot_agent.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "tod/intent_agent.hpp"
#include "tod/util.hpp"

namespace tod {

std::string SlotAgent::build_prompt(const SlotPromptInputs& inputs) const {
  if (!schemas_->has(inputs.domain) || inputs.domain == "other") {
    throw TodError(ErrorKind::SchemaDomainMismatch, inputs.domain);
  }
  const DomainSchema& schema = schemas_->at(inputs.domain);

  std::string tool_parameters;
  for (const auto& spec : schema.informable) {
    if (!tool_parameters.empty()) tool_parameters += "\n";
    tool_parameters += IntentAgent::render_slot_line(spec);
  }

  std::string tool_information;
  for (const auto& attr : schema.requestable) {
    if (!tool_information.empty()) tool_information += "\n";
    tool_information += attr.name + ": " + attr.description + ".";
  }

  static const SlotMap kEmpty;
  const SlotMap& history = inputs.history ? *inputs.history : kEmpty;
  const std::string history_blocks =
      inputs.domain + ":\n" + history.render_json(inputs.domain);

  return PromptTemplates::render(templates_->slot(),
                                 {{"domain", inputs.domain},
                                  {"tool_parameters", tool_parameters},
                                  {"tool_information", tool_information},
                                  {"history_blocks", history_blocks},
                                  {"question", inputs.question}});
}

namespace {

// Substring from the first `open` at/after `from` through its balanced close,
// spanning lines; JSON string literals are respected.
std::optional<std::string> extract_balanced(const std::string& text, size_t from,
                                            char open, char close) {
  size_t start = text.find(open, from);
  if (start == std::string::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  for (size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == open) {
      ++depth;
    } else if (c == close) {
      if (--depth == 0) return text.substr(start, i - start + 1);
    }
  }
  return std::nullopt;
}

std::optional<size_t> find_label(const std::string& text, const std::string& label) {
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t hit = text.find(label, pos);
    if (hit == std::string::npos) return std::nullopt;
    size_t line_start = text.rfind('\n', hit);
    line_start = (line_start == std::string::npos) ? 0 : line_start + 1;
    bool only_ws_before = true;
    for (size_t i = line_start; i < hit; ++i) {
      if (!std::isspace(static_cast<unsigned char>(text[i]))) {
        only_ws_before = false;
        break;
      }
    }
    if (only_ws_before) return hit + label.size();
    pos = hit + label.size();
  }
  return std::nullopt;
}

std::vector<std::string> json_values_as_strings(const json& value) {
  std::vector<std::string> out;
  if (value.is_array()) {
    for (const auto& v : value) {
      out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
  } else if (value.is_string()) {
    out.push_back(value.get<std::string>());
  } else if (!value.is_null()) {
    out.push_back(value.dump());
  }
  std::erase_if(out, [](const std::string& s) { return util::trim(s).empty(); });
  return out;
}

}  // namespace

Result<SlotResult> SlotAgent::parse_completion(const std::string& text,
                                               const std::string& domain) const {
  if (util::trim(text).empty()) {
    return TodError(ErrorKind::EmptyCompletion, "slot completion is empty");
  }
  if (!schemas_->has(domain)) {
    return TodError(ErrorKind::SchemaDomainMismatch, domain);
  }
  const DomainSchema& schema = schemas_->at(domain);
  SlotResult out;

  for (const auto& raw : util::split(text, '\n')) {
    const std::string line = util::trim(raw);
    if (util::starts_with(line, "Action:")) {
      out.action_echo = util::trim(line.substr(7));
      break;
    }
  }

  auto params_at = find_label(text, "Parameters:");
  if (!params_at) return TodError(ErrorKind::MissingField, "Parameters");
  auto params_text = extract_balanced(text, *params_at, '{', '}');
  if (!params_text) {
    return TodError(ErrorKind::ParametersNotJson, "no JSON object after Parameters:");
  }
  json params;
  try {
    params = json::parse(*params_text);
  } catch (const json::exception& e) {
    return TodError(ErrorKind::ParametersNotJson, e.what());
  }
  if (!params.is_object()) {
    return TodError(ErrorKind::ParametersNotJson, "Parameters is not a JSON object");
  }

  for (const auto& [key, value] : params.items()) {
    const std::string qualified = qualify_slot(domain, util::lower(util::trim(key)));
    const SlotSpec* spec = schema.find_informable(qualified);
    if (spec == nullptr) {
      out.warnings.push_back("unknown slot dropped: " + qualified);
      continue;
    }
    std::vector<std::string> values = json_values_as_strings(value);
    if (values.empty()) {
      // An explicit null/empty value is the completion's signal to discard a
      // previously held slot.
      out.dropped.push_back(spec->name);
      continue;
    }
    std::vector<std::string> kept;
    for (const auto& v : values) {
      try {
        kept.push_back(schemas_->normalize_value(*spec, v));
      } catch (const TodError& e) {
        out.warnings.push_back(std::string("value rejected: ") + e.what());
      }
    }
    if (kept.empty()) {
      out.warnings.push_back("all values rejected for slot: " + spec->name);
      continue;
    }
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    out.parameters.set(spec->name, std::move(kept));
  }

  auto info_at = find_label(text, "Information:");
  if (!info_at) return TodError(ErrorKind::MissingField, "Information");
  auto info_text = extract_balanced(text, *info_at, '[', ']');
  if (!info_text) {
    return TodError(ErrorKind::InformationNotList, "no JSON list after Information:");
  }
  json info;
  try {
    info = json::parse(*info_text);
  } catch (const json::exception& e) {
    return TodError(ErrorKind::InformationNotList, e.what());
  }
  if (!info.is_array()) {
    return TodError(ErrorKind::InformationNotList, "Information is not a list");
  }
  for (const auto& item : info) {
    if (!item.is_string()) {
      out.warnings.push_back("non-string Information entry dropped: " + item.dump());
      continue;
    }
    std::string attr = util::collapse_ws(util::lower(util::trim(item.get<std::string>())));
    if (util::starts_with(attr, domain + "-")) attr = short_slot(attr);
    if (!schema.is_requestable(attr)) {
      out.warnings.push_back("unknown information attribute dropped: " + attr);
      continue;
    }
    if (out.parameters.contains(qualify_slot(domain, attr))) {
      out.warnings.push_back("information attribute shadowed by parameter: " + attr);
      continue;
    }
    if (std::find(out.information.begin(), out.information.end(), attr) ==
        out.information.end()) {
      out.information.push_back(attr);
    }
  }

  return out;
}

std::string SlotAgent::format_completion(const std::string& question,
                                         const std::string& domain,
                                         const SlotMap& parameters,
                                         const std::vector<std::string>& information) {
  std::string info = "[";
  for (size_t i = 0; i < information.size(); ++i) {
    if (i) info += ", ";
    info += json(information[i]).dump();
  }
  info += "]";
  return "Question: " + question + "\nAction: " + domain +
         "\nParameters: " + parameters.render_json(domain) + "\nInformation: " + info +
         "\nFinish!";
}

}  // namespace tod
