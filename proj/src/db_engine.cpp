#include "tod/db_engine.hpp"

#include <algorithm>
#include <set>

#include "tod/util.hpp"

namespace tod {

namespace {

std::string field_string(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

bool all_dontcare(const std::vector<std::string>& values) {
  if (values.empty()) return true;
  for (const auto& v : values) {
    if (v != "dontcare" && v != "any") return false;
  }
  return true;
}

}  // namespace

std::string Observation::render() const {
  std::string out = domain + " information:\noption number: " + std::to_string(option_count);
  if (option_count == 1 && single) {
    out += "\ninformation:";
    for (const auto& [key, value] : single->items()) {
      if (value.is_array() || value.is_object()) continue;
      out += "\n " + key + ": " + field_string(value);
    }
    return out;
  }
  if (!question_content.empty()) {
    out += "\nquestion content: " + util::join(question_content, ", ");
  }
  if (!conclusions.empty()) {
    out += "\nconclusion informations:";
    for (const auto& [attr, summary] : conclusions) {
      out += "\n " + attr + ": " + util::join(summary.shown, ", ");
    }
  }
  return out;
}

json Observation::to_json() const {
  json obj;
  obj["domain"] = domain;
  obj["option_count"] = option_count;
  obj["question_content"] = question_content;
  json concl = json::object();
  for (const auto& [attr, summary] : conclusions) {
    concl[attr] = {{"shown", summary.shown},
                   {"truncated", summary.truncated},
                   {"total_distinct", summary.total_distinct}};
  }
  obj["conclusions"] = concl;
  if (single) obj["single"] = *single;
  return obj;
}

Database Database::load(const std::string& path, const std::string& domain,
                        const SchemaSet& schemas) {
  json records;
  try {
    records = json::parse(util::read_file(path));
  } catch (const json::exception& e) {
    throw TodError(ErrorKind::MalformedRecord, path + ": " + e.what());
  }
  if (!records.is_array()) {
    throw TodError(ErrorKind::MalformedRecord, path + ": expected a JSON array");
  }
  std::vector<Entity> entities;
  entities.reserve(records.size());
  for (auto& record : records) entities.push_back(std::move(record));
  return from_entities(std::move(entities), domain, schemas);
}

Database Database::from_entities(std::vector<Entity> raw, std::string domain,
                                 const SchemaSet& schemas) {
  Database db;
  db.domain_ = std::move(domain);
  db.schema_ = schemas.at(db.domain_);
  db.entities_.reserve(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    const Entity& record = raw[i];
    if (!record.is_object()) {
      throw TodError(ErrorKind::MalformedRecord,
                     db.domain_ + " record " + std::to_string(i) + " is not an object");
    }
    Entity entity = json::object();
    for (const auto& [key, value] : record.items()) {
      const std::string attr = util::lower(key);
      if (value.is_string()) {
        entity[attr] = schemas.normalize(value.get<std::string>());
      } else {
        entity[attr] = value;
      }
    }
    if (!entity.contains(db.schema_.identity)) {
      throw TodError(ErrorKind::MalformedRecord,
                     db.domain_ + " record " + std::to_string(i) +
                         " lacks identity attribute '" + db.schema_.identity + "'");
    }
    db.entities_.push_back(std::move(entity));
  }
  db.build_index();
  return db;
}

void Database::build_index() {
  index_.clear();
  for (size_t i = 0; i < entities_.size(); ++i) {
    for (const auto& [attr, value] : entities_[i].items()) {
      if (value.is_object()) continue;
      if (value.is_array()) {
        for (const auto& element : value) {
          index_[attr][field_string(element)].push_back(i);
        }
      } else {
        index_[attr][field_string(value)].push_back(i);
      }
    }
  }
}

bool Database::slot_is_filter(const std::string& short_name) const {
  const SlotSpec* spec = schema_.find_informable(short_name);
  if (spec != nullptr && spec->booking) return false;
  return true;
}

bool Database::time_ranked(const std::string& attr) const {
  const SlotSpec* spec = schema_.find_informable(attr);
  return spec != nullptr && spec->time && !spec->booking;
}

bool Database::match_entity(const Entity& entity, const SlotMap& constraints) const {
  for (const auto& [name, values] : constraints) {
    const std::string attr = short_slot(name);
    if (!slot_is_filter(attr)) continue;
    if (all_dontcare(values)) continue;
    auto field = entity.find(attr);
    if (field == entity.end()) return false;
    bool matched = false;
    for (const auto& v : values) {
      if (v == "dontcare" || v == "any") {
        matched = true;
        break;
      }
      if (domain_ == "train" && (attr == "leaveat" || attr == "arriveby")) {
        auto want = util::time_minutes(v);
        auto have = field->is_string() ? util::time_minutes(field->get<std::string>())
                                       : std::nullopt;
        if (want && have) {
          matched = (attr == "leaveat") ? (*have >= *want) : (*have <= *want);
          if (matched) break;
          continue;
        }
      }
      if (field->is_array()) {
        for (const auto& element : *field) {
          if (field_string(element) == v) {
            matched = true;
            break;
          }
        }
      } else {
        matched = field_string(*field) == v;
      }
      if (matched) break;
    }
    if (!matched) return false;
  }
  return true;
}

std::vector<const Entity*> Database::brute_force(const SlotMap& constraints) const {
  std::vector<const Entity*> out;
  for (const auto& entity : entities_) {
    if (match_entity(entity, constraints)) out.push_back(&entity);
  }
  return out;
}

std::vector<const Entity*> Database::query(const SlotMap& constraints) const {
  // Pick the most selective exact-match constraint to seed candidates, then
  // verify each candidate against the full constraint set.
  const std::string* best_attr = nullptr;
  const std::vector<std::string>* best_values = nullptr;
  size_t best_size = entities_.size() + 1;
  for (const auto& [name, values] : constraints) {
    const std::string attr = short_slot(name);
    if (!slot_is_filter(attr)) continue;
    if (all_dontcare(values)) continue;
    bool has_dontcare = false;
    for (const auto& v : values) {
      if (v == "dontcare" || v == "any") has_dontcare = true;
    }
    if (has_dontcare) continue;
    if (domain_ == "train" && (attr == "leaveat" || attr == "arriveby")) continue;
    auto postings = index_.find(attr);
    size_t total = 0;
    if (postings != index_.end()) {
      for (const auto& v : values) {
        auto hit = postings->second.find(v);
        if (hit != postings->second.end()) total += hit->second.size();
      }
    }
    if (total < best_size) {
      best_size = total;
      best_attr = &name;
      best_values = &values;
    }
  }

  std::vector<const Entity*> out;
  if (best_attr == nullptr) {
    return brute_force(constraints);
  }
  std::set<size_t> candidates;
  auto postings = index_.find(short_slot(*best_attr));
  if (postings != index_.end()) {
    for (const auto& v : *best_values) {
      auto hit = postings->second.find(v);
      if (hit == postings->second.end()) continue;
      candidates.insert(hit->second.begin(), hit->second.end());
    }
  }
  for (size_t i : candidates) {
    if (match_entity(entities_[i], constraints)) out.push_back(&entities_[i]);
  }
  return out;
}

Observation Database::build_observation(const std::vector<const Entity*>& results,
                                        const SlotMap& filled) const {
  Observation obs;
  obs.domain = domain_;
  obs.option_count = static_cast<int>(results.size());
  for (const auto& attr : schema_.question_attributes) {
    if (!filled.contains(qualify_slot(domain_, attr))) {
      obs.question_content.push_back(attr);
    }
  }
  if (results.size() == 1) {
    obs.single = *results.front();
    return obs;
  }
  if (results.size() > 1) {
    for (const auto& attr : obs.question_content) {
      if (!time_ranked(attr)) continue;
      std::set<std::string> distinct;
      for (const Entity* entity : results) {
        auto field = entity->find(attr);
        if (field != entity->end() && field->is_string()) {
          distinct.insert(field->get<std::string>());
        }
      }
      if (distinct.empty()) continue;
      std::vector<std::string> sorted(distinct.begin(), distinct.end());
      std::sort(sorted.begin(), sorted.end(), [](const std::string& a, const std::string& b) {
        auto ma = util::time_minutes(a);
        auto mb = util::time_minutes(b);
        if (ma && mb) return *ma < *mb;
        return a < b;
      });
      ValueSummary summary;
      summary.total_distinct = static_cast<int>(sorted.size());
      if (sorted.size() > 8) {
        summary.truncated = true;
        summary.shown.assign(sorted.begin(), sorted.begin() + 4);
        summary.shown.insert(summary.shown.end(), sorted.end() - 4, sorted.end());
      } else {
        summary.shown = sorted;
      }
      obs.conclusions.emplace_back(attr, std::move(summary));
    }
  }
  return obs;
}

Entity taxi_synthesize(const SlotMap& constraints, const json& taxi_db) {
  const std::vector<std::string>* dep = constraints.find("taxi-departure");
  if (dep == nullptr) dep = constraints.find("departure");
  const std::vector<std::string>* dest = constraints.find("taxi-destination");
  if (dest == nullptr) dest = constraints.find("destination");
  if (dep == nullptr || dep->empty() || dest == nullptr || dest->empty()) {
    throw TodError(ErrorKind::MissingRouteEndpoints,
                   "taxi requires departure and destination");
  }
  std::vector<std::string> parts;
  for (const auto& [name, values] : constraints) {
    parts.push_back(short_slot(name) + "=" + util::join(values, "|"));
  }
  std::sort(parts.begin(), parts.end());
  const uint64_t h = util::fnv1a(util::join(parts, ";"));

  const auto& colors = taxi_db.at("taxi_colors");
  const auto& types = taxi_db.at("taxi_types");
  Entity entity = json::object();
  entity["color"] = colors.at(h % colors.size()).get<std::string>();
  entity["type"] = types.at((h / 7) % types.size()).get<std::string>();
  std::string phone;
  uint64_t digits = h;
  for (int i = 0; i < 10; ++i) {
    phone.push_back(static_cast<char>('0' + digits % 10));
    digits = digits / 10 + 0x9e3779b9;
  }
  entity["phone"] = phone;
  entity["departure"] = dep->front();
  entity["destination"] = dest->front();
  for (const char* extra : {"leaveat", "arriveby"}) {
    const std::vector<std::string>* v = constraints.find(qualify_slot("taxi", extra));
    if (v == nullptr) v = constraints.find(extra);
    if (v != nullptr && !v->empty()) entity[extra] = v->front();
  }
  return entity;
}

DatabaseSet DatabaseSet::load(const std::string& data_path, const SchemaSet& schemas) {
  DatabaseSet set;
  for (const char* domain :
       {"restaurant", "hotel", "train", "attraction", "hospital", "police", "bus"}) {
    const std::string path = data_path + "/db/" + domain + "_db.json";
    if (!util::file_exists(path)) continue;
    set.dbs_.emplace(domain, Database::load(path, domain, schemas));
  }
  const std::string taxi_path = data_path + "/db/taxi_db.json";
  if (util::file_exists(taxi_path)) {
    set.taxi_catalog_ = json::parse(util::read_file(taxi_path));
  }
  return set;
}

const DatabaseSet& DatabaseSet::bundled() {
  static const DatabaseSet set = DatabaseSet::load(util::data_dir(), SchemaSet::bundled());
  return set;
}

const Database& DatabaseSet::at(const std::string& domain) const {
  auto it = dbs_.find(domain);
  if (it == dbs_.end()) {
    throw TodError(ErrorKind::DomainMismatch, "no database for domain: " + domain);
  }
  return it->second;
}

Observation query_and_observe(const DatabaseSet& dbs, const std::string& domain,
                              const SlotMap& constraints) {
  if (domain == "taxi") {
    Observation obs;
    obs.domain = domain;
    obs.option_count = 1;
    obs.single = taxi_synthesize(constraints, dbs.taxi_catalog());
    return obs;
  }
  const Database& db = dbs.at(domain);
  return db.build_observation(db.query(constraints), constraints);
}

}  // namespace tod
