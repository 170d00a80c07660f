#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tod/util.hpp"

namespace tod {

// Qualify a possibly-short slot name ("area") against a domain
// ("restaurant" -> "restaurant-area"); already-qualified names pass through.
std::string qualify_slot(const std::string& domain, const std::string& name);
std::string short_slot(const std::string& qualified);

// Ordered slot-name -> value-list mapping. Insertion order is preserved so
// prompt renderings and serializations are byte-stable.
class SlotMap {
 public:
  using Entry = std::pair<std::string, std::vector<std::string>>;

  SlotMap() = default;

  bool empty() const { return entries_.empty(); }
  size_t size() const { return entries_.size(); }
  bool contains(const std::string& name) const { return find(name) != nullptr; }
  const std::vector<std::string>* find(const std::string& name) const;

  // Replaces the value list in place when the slot exists, appends otherwise.
  void set(const std::string& name, std::vector<std::string> values);
  void erase(const std::string& name);
  void clear() { entries_.clear(); }

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>::const_iterator begin() const { return entries_.begin(); }
  std::vector<Entry>::const_iterator end() const { return entries_.end(); }

  bool operator==(const SlotMap& other) const { return entries_ == other.entries_; }

  // {"area": ["centre"], "pricerange": ["expensive"]} - short names, stable
  // spacing, insertion order.
  std::string render_json(const std::string& strip_domain = "") const;

  json to_json() const;
  static SlotMap from_json(const json& object, const std::string& qualify_domain = "");

 private:
  std::vector<Entry> entries_;
};

// History overridden by current (current wins on conflicts), order
// history-first then new, then every slot in `dropped` removed.
SlotMap merge_history(const SlotMap& current, const SlotMap& history,
                      const std::vector<std::string>& dropped);

}  // namespace tod
