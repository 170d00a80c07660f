#pragma once

#include <map>
#include <string>
#include <vector>

#include "tod/error.hpp"
#include "tod/slot_map.hpp"

namespace tod {

struct SlotSpec {
  std::string name;  // qualified, e.g. "restaurant-pricerange"
  std::string description;
  std::vector<std::string> values;  // empty = open vocabulary
  bool booking = false;
  bool time = false;

  std::string short_name() const { return short_slot(name); }
  bool closed() const { return !values.empty(); }
};

struct AttrSpec {
  std::string name;
  std::string description;
};

struct DomainSchema {
  std::string domain;
  std::string identity;
  bool book = false;
  std::vector<SlotSpec> informable;
  std::vector<AttrSpec> requestable;
  std::vector<std::string> question_attributes;

  const SlotSpec* find_informable(const std::string& name) const;
  bool is_requestable(const std::string& attr) const;
  bool is_booking_slot(const std::string& name) const;
};

class SchemaSet {
 public:
  static SchemaSet load(const std::string& data_path);
  static const SchemaSet& bundled();  // loaded once from util::data_dir()

  bool has(const std::string& domain) const { return domains_.count(domain) > 0; }
  const DomainSchema& at(const std::string& domain) const;
  const std::map<std::string, DomainSchema>& domains() const { return domains_; }

  // Lower-case, collapse whitespace, apply the synonym table, zero-pad times.
  std::string normalize(const std::string& raw) const;
  // As normalize, plus closed-set membership enforcement for the slot.
  std::string normalize_value(const SlotSpec& spec, const std::string& raw) const;

 private:
  std::map<std::string, DomainSchema> domains_;
  std::map<std::string, std::string> synonyms_;
};

}  // namespace tod
