#include "tod/slot_map.hpp"

#include <algorithm>

namespace tod {

std::string qualify_slot(const std::string& domain, const std::string& name) {
  if (domain.empty()) return name;
  const std::string prefix = domain + "-";
  if (util::starts_with(name, prefix)) return name;
  return prefix + name;
}

std::string short_slot(const std::string& qualified) {
  size_t dash = qualified.find('-');
  if (dash == std::string::npos) return qualified;
  return qualified.substr(dash + 1);
}

const std::vector<std::string>* SlotMap::find(const std::string& name) const {
  for (const auto& [k, v] : entries_) {
    if (k == name) return &v;
  }
  return nullptr;
}

void SlotMap::set(const std::string& name, std::vector<std::string> values) {
  for (auto& [k, v] : entries_) {
    if (k == name) {
      v = std::move(values);
      return;
    }
  }
  entries_.emplace_back(name, std::move(values));
}

void SlotMap::erase(const std::string& name) {
  entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                [&](const Entry& e) { return e.first == name; }),
                 entries_.end());
}

static void append_json_string(std::string& out, const std::string& s) {
  out += json(s).dump();
}

std::string SlotMap::render_json(const std::string& strip_domain) const {
  std::string out = "{";
  bool first = true;
  for (const auto& [name, values] : entries_) {
    if (!first) out += ", ";
    first = false;
    const std::string key =
        strip_domain.empty() ? name
                             : (util::starts_with(name, strip_domain + "-")
                                    ? short_slot(name)
                                    : name);
    append_json_string(out, key);
    out += ": [";
    for (size_t i = 0; i < values.size(); ++i) {
      if (i) out += ", ";
      append_json_string(out, values[i]);
    }
    out += "]";
  }
  out += "}";
  return out;
}

json SlotMap::to_json() const {
  json obj = json::object();
  for (const auto& [name, values] : entries_) obj[name] = values;
  return obj;
}

SlotMap SlotMap::from_json(const json& object, const std::string& qualify_domain) {
  SlotMap out;
  for (const auto& [key, value] : object.items()) {
    const std::string name = qualify_slot(qualify_domain, key);
    std::vector<std::string> values;
    if (value.is_array()) {
      for (const auto& v : value) {
        values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      }
    } else if (value.is_string()) {
      values.push_back(value.get<std::string>());
    } else if (!value.is_null()) {
      values.push_back(value.dump());
    }
    out.set(name, std::move(values));
  }
  return out;
}

SlotMap merge_history(const SlotMap& current, const SlotMap& history,
                      const std::vector<std::string>& dropped) {
  SlotMap merged;
  for (const auto& [name, values] : history) {
    const std::vector<std::string>* cur = current.find(name);
    merged.set(name, cur ? *cur : values);
  }
  for (const auto& [name, values] : current) {
    if (!merged.contains(name)) merged.set(name, values);
  }
  for (const auto& name : dropped) merged.erase(name);
  return merged;
}

}  // namespace tod
