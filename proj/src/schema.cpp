#include "tod/schema.hpp"

#include <algorithm>

#include "tod/util.hpp"

namespace tod {

const SlotSpec* DomainSchema::find_informable(const std::string& name) const {
  const std::string qualified = qualify_slot(domain, name);
  for (const auto& spec : informable) {
    if (spec.name == qualified) return &spec;
  }
  return nullptr;
}

bool DomainSchema::is_requestable(const std::string& attr) const {
  for (const auto& spec : requestable) {
    if (spec.name == attr) return true;
  }
  return false;
}

bool DomainSchema::is_booking_slot(const std::string& name) const {
  const SlotSpec* spec = find_informable(name);
  return spec != nullptr && spec->booking;
}

SchemaSet SchemaSet::load(const std::string& data_path) {
  SchemaSet set;
  json schemas;
  try {
    schemas = json::parse(util::read_file(data_path + "/schemas.json"));
  } catch (const json::exception& e) {
    throw TodError(ErrorKind::MalformedRecord, std::string("schemas.json: ") + e.what());
  }
  for (const auto& [name, body] : schemas.items()) {
    DomainSchema schema;
    schema.domain = name;
    schema.identity = body.value("identity", "name");
    schema.book = body.value("book", false);
    for (const auto& slot : body.value("informable", json::array())) {
      SlotSpec spec;
      spec.name = slot.at("name").get<std::string>();
      spec.description = slot.value("description", "");
      for (const auto& v : slot.value("values", json::array())) {
        spec.values.push_back(v.get<std::string>());
      }
      spec.booking = slot.value("booking", false);
      spec.time = slot.value("type", "") == "time";
      schema.informable.push_back(std::move(spec));
    }
    for (const auto& attr : body.value("requestable", json::array())) {
      schema.requestable.push_back(
          {attr.at("name").get<std::string>(), attr.value("description", "")});
    }
    for (const auto& attr : body.value("question_attributes", json::array())) {
      schema.question_attributes.push_back(attr.get<std::string>());
    }
    set.domains_[name] = std::move(schema);
  }
  if (set.domains_.empty()) {
    throw TodError(ErrorKind::MalformedRecord, "schemas.json defines no domains");
  }
  const std::string syn_path = data_path + "/synonyms.json";
  if (util::file_exists(syn_path)) {
    json synonyms = json::parse(util::read_file(syn_path));
    for (const auto& [k, v] : synonyms.items()) {
      set.synonyms_[k] = v.get<std::string>();
    }
  }
  return set;
}

const SchemaSet& SchemaSet::bundled() {
  static const SchemaSet set = SchemaSet::load(util::data_dir());
  return set;
}

const DomainSchema& SchemaSet::at(const std::string& domain) const {
  auto it = domains_.find(domain);
  if (it == domains_.end()) {
    throw TodError(ErrorKind::DomainMismatch, "no schema for domain: " + domain);
  }
  return it->second;
}

std::string SchemaSet::normalize(const std::string& raw) const {
  std::string v = util::collapse_ws(util::lower(util::trim(raw)));
  auto it = synonyms_.find(v);
  if (it != synonyms_.end()) v = it->second;
  return util::pad_time(v);
}

std::string SchemaSet::normalize_value(const SlotSpec& spec, const std::string& raw) const {
  const std::string v = normalize(raw);
  if (spec.closed() && v != "dontcare") {
    if (std::find(spec.values.begin(), spec.values.end(), v) == spec.values.end()) {
      throw TodError(ErrorKind::ValueNotInClosedSet, spec.name + "=" + v);
    }
  }
  return v;
}

}  // namespace tod
