#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tod/error.hpp"
#include "tod/schema.hpp"
#include "tod/slot_map.hpp"

namespace tod {

using Entity = json;

struct ValueSummary {
  std::vector<std::string> shown;  // sorted ascending; at most 8
  bool truncated = false;
  int total_distinct = 0;
};

struct Observation {
  std::string domain;
  int option_count = 0;
  std::vector<std::string> question_content;
  std::vector<std::pair<std::string, ValueSummary>> conclusions;
  std::optional<Entity> single;

  // The exact textual block embedded in the response prompt:
  //   <domain> information:
  //   option number: <n>
  //   question content: a, b, c
  //   conclusion informations:
  //    attr: v1, v2, ...
  // A single option renders its attributes under "information:" instead.
  std::string render() const;
  json to_json() const;
};

class Database {
 public:
  static Database load(const std::string& path, const std::string& domain,
                       const SchemaSet& schemas);

  const std::string& domain() const { return domain_; }
  size_t size() const { return entities_.size(); }
  const std::vector<Entity>& entities() const { return entities_; }

  bool match_entity(const Entity& entity, const SlotMap& constraints) const;
  std::vector<const Entity*> query(const SlotMap& constraints) const;
  std::vector<const Entity*> brute_force(const SlotMap& constraints) const;

  Observation build_observation(const std::vector<const Entity*>& results,
                                const SlotMap& filled) const;

  // Builds a database from in-memory records (randomized-property tests).
  static Database from_entities(std::vector<Entity> entities, std::string domain,
                                const SchemaSet& schemas);

 private:
  void build_index();
  bool slot_is_filter(const std::string& short_name) const;
  bool time_ranked(const std::string& attr) const;

  std::string domain_;
  DomainSchema schema_;
  std::vector<Entity> entities_;
  std::map<std::string, std::map<std::string, std::vector<size_t>>> index_;
};

// Deterministic pseudo-entity for the DB-less taxi domain.
Entity taxi_synthesize(const SlotMap& constraints, const json& taxi_db);

class DatabaseSet;

// Runs the query stage for any domain: taxi synthesizes a single entity,
// every other domain queries its database and summarizes the results.
Observation query_and_observe(const DatabaseSet& dbs, const std::string& domain,
                              const SlotMap& constraints);

class DatabaseSet {
 public:
  static DatabaseSet load(const std::string& data_path, const SchemaSet& schemas);
  static const DatabaseSet& bundled();

  bool has(const std::string& domain) const { return dbs_.count(domain) > 0; }
  const Database& at(const std::string& domain) const;
  const json& taxi_catalog() const { return taxi_catalog_; }

 private:
  std::map<std::string, Database> dbs_;
  json taxi_catalog_;
};

}  // namespace tod
