#include "doctest.h"

#include <algorithm>
#include <cctype>
#include <random>
#include <set>

#include "test_support.hpp"
#include "tod/db_engine.hpp"

using namespace tod;

namespace {

SlotMap constraints(std::initializer_list<SlotMap::Entry> entries) {
  SlotMap map;
  for (const auto& [name, values] : entries) map.set(name, values);
  return map;
}

Database mini_train_db() {
  std::vector<Entity> entities;
  auto add = [&](const char* id, const char* leave, const char* arrive, const char* day) {
    Entity e = json::object();
    e["trainid"] = id;
    e["leaveat"] = leave;
    e["arriveby"] = arrive;
    e["day"] = day;
    e["departure"] = "norwich";
    e["destination"] = "cambridge";
    entities.push_back(std::move(e));
  };
  add("tr1", "08:00", "09:00", "monday");
  add("tr2", "10:30", "11:30", "monday");
  add("tr3", "14:00", "15:00", "sunday");
  return Database::from_entities(std::move(entities), "train", SchemaSet::bundled());
}

std::set<std::string> ids(const std::vector<const Entity*>& results,
                          const std::string& identity) {
  std::set<std::string> out;
  for (const Entity* e : results) out.insert(e->at(identity).get<std::string>());
  return out;
}

}  // namespace

TEST_CASE("bundled train database answers a route query") {
  const Database& train = DatabaseSet::bundled().at("train");
  CHECK(train.size() == 2828);

  SlotMap filled = constraints({{"train-departure", {"norwich"}},
                                {"train-destination", {"cambridge"}}});
  auto results = train.query(filled);
  CHECK(results.size() == 133);

  Observation obs = train.build_observation(results, filled);
  CHECK(obs.render() ==
        "train information:\n"
        "option number: 133\n"
        "question content: arriveby, leaveat, trainid, day, price\n"
        "conclusion informations:\n"
        " arriveby: 06:35, 07:35, 08:35, 09:35, 21:35, 22:35, 23:35, 24:35\n"
        " leaveat: 05:16, 06:16, 07:16, 08:16, 20:16, 21:16, 22:16, 23:16");

  REQUIRE(obs.conclusions.size() == 2);
  for (const auto& [attr, summary] : obs.conclusions) {
    CHECK(summary.truncated);
    CHECK(summary.shown.size() == 8);
    CHECK(summary.total_distinct > 8);
    CHECK(std::is_sorted(summary.shown.begin(), summary.shown.end(),
                         [](const std::string& a, const std::string& b) {
                           return *util::time_minutes(a) < *util::time_minutes(b);
                         }));
  }
}

TEST_CASE("single result renders scalar attributes") {
  const Database& train = DatabaseSet::bundled().at("train");
  SlotMap filled = constraints({{"train-trainid", {"tr7075"}}});
  auto results = train.query(filled);
  REQUIRE(results.size() == 1);
  Observation obs = train.build_observation(results, filled);
  REQUIRE(obs.single.has_value());
  std::string rendered = obs.render();
  CHECK(rendered.rfind("train information:\noption number: 1\ninformation:", 0) == 0);
  CHECK(rendered.find(" trainid: tr7075") != std::string::npos);
  CHECK(rendered.find("conclusion informations") == std::string::npos);
}

TEST_CASE("match semantics") {
  Database db = mini_train_db();
  const Entity& tr1 = db.entities()[0];

  SUBCASE("train leaveat is a lower bound, arriveby an upper bound") {
    CHECK(db.match_entity(tr1, constraints({{"train-leaveat", {"07:30"}}})));
    CHECK_FALSE(db.match_entity(tr1, constraints({{"train-leaveat", {"08:30"}}})));
    CHECK(db.match_entity(tr1, constraints({{"train-arriveby", {"09:30"}}})));
    CHECK_FALSE(db.match_entity(tr1, constraints({{"train-arriveby", {"08:30"}}})));
  }

  SUBCASE("dontcare and any match everything") {
    CHECK(db.match_entity(tr1, constraints({{"train-day", {"dontcare"}}})));
    CHECK(db.match_entity(tr1, constraints({{"train-day", {"any"}}})));
    CHECK(db.match_entity(tr1, constraints({{"train-day", {"friday", "dontcare"}}})));
  }

  SUBCASE("booking slots never filter") {
    CHECK(db.match_entity(tr1, constraints({{"train-bookpeople", {"99"}}})));
  }

  SUBCASE("a constrained attribute missing from the entity fails") {
    CHECK_FALSE(db.match_entity(tr1, constraints({{"train-price", {"10.10 pounds"}}})));
  }

  SUBCASE("multi-value constraints are any-of") {
    CHECK(db.match_entity(tr1, constraints({{"train-day", {"sunday", "monday"}}})));
    CHECK_FALSE(db.match_entity(tr1, constraints({{"train-day", {"sunday", "friday"}}})));
  }

  SUBCASE("array-valued entity attributes are any-of") {
    Entity e = json::object();
    e["trainid"] = "tr9";
    e["day"] = json::array({"monday", "tuesday"});
    Database arr = Database::from_entities({e}, "train", SchemaSet::bundled());
    CHECK(arr.match_entity(arr.entities()[0], constraints({{"train-day", {"tuesday"}}})));
    CHECK_FALSE(arr.match_entity(arr.entities()[0], constraints({{"train-day", {"friday"}}})));
  }

  SUBCASE("query uses the index but agrees with the scan") {
    auto q = db.query(constraints({{"train-day", {"monday"}}}));
    CHECK(ids(q, "trainid") == std::set<std::string>{"tr1", "tr2"});
    auto lower = db.query(constraints({{"train-leaveat", {"10:00"}}}));
    CHECK(ids(lower, "trainid") == std::set<std::string>{"tr2", "tr3"});
  }
}

TEST_CASE("from_entities validates records") {
  Entity no_identity = json::object();
  no_identity["day"] = "monday";
  try {
    (void)Database::from_entities({no_identity}, "train", SchemaSet::bundled());
    FAIL("expected MalformedRecord");
  } catch (const TodError& e) {
    CHECK(e.kind() == ErrorKind::MalformedRecord);
    CHECK(std::string(e.what()).find("trainid") != std::string::npos);
  }
  CHECK_THROWS_AS(
      (void)Database::from_entities({json("plain string")}, "train", SchemaSet::bundled()),
      TodError);
}

TEST_CASE("from_entities normalizes keys and string values") {
  Entity e = json::object();
  e["Name"] = "The  Golden CURRY";
  e["stars"] = 4;
  Database db = Database::from_entities({e}, "restaurant", SchemaSet::bundled());
  CHECK(db.entities()[0].at("name") == "the golden curry");
  CHECK(db.entities()[0].at("stars") == 4);
}

TEST_CASE("indexed query matches brute force on random constraints") {
  const DatabaseSet& dbs = DatabaseSet::bundled();
  const SchemaSet& schemas = SchemaSet::bundled();
  std::mt19937_64 rng(20250819);
  for (const char* domain : {"restaurant", "hotel", "train", "attraction"}) {
    const Database& db = dbs.at(domain);
    const DomainSchema& schema = schemas.at(domain);
    for (int i = 0; i < 120; ++i) {
      SlotMap filled = tod::test::random_slot_map(schema, rng);
      auto fast = db.query(filled);
      auto slow = db.brute_force(filled);
      REQUIRE(fast.size() == slow.size());
      CHECK(std::set<const Entity*>(fast.begin(), fast.end())
            == std::set<const Entity*>(slow.begin(), slow.end()));

      // Adding a constraint can only narrow the result set.
      SlotMap wider = filled;
      const SlotSpec& extra = schema.informable[rng() % schema.informable.size()];
      if (!wider.contains(extra.name)) {
        wider.set(extra.name, {extra.closed() ? extra.values[rng() % extra.values.size()]
                                              : "value" + std::to_string(rng() % 50)});
        CHECK(db.query(wider).size() <= fast.size());
      }
    }
  }
}

TEST_CASE("taxi synthesis") {
  const json& catalog = DatabaseSet::bundled().taxi_catalog();

  SUBCASE("deterministic and drawn from the catalog") {
    SlotMap c = constraints({{"taxi-departure", {"alpha street"}},
                             {"taxi-destination", {"beta tower"}},
                             {"taxi-leaveat", {"08:15"}}});
    Entity a = taxi_synthesize(c, catalog);
    Entity b = taxi_synthesize(c, catalog);
    CHECK(a == b);
    const auto& colors = catalog.at("taxi_colors");
    const auto& types = catalog.at("taxi_types");
    CHECK(std::find(colors.begin(), colors.end(), a.at("color")) != colors.end());
    CHECK(std::find(types.begin(), types.end(), a.at("type")) != types.end());
    const std::string phone = a.at("phone").get<std::string>();
    CHECK(phone.size() == 10);
    CHECK(std::all_of(phone.begin(), phone.end(),
                      [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }));
    CHECK(a.at("departure") == "alpha street");
    CHECK(a.at("destination") == "beta tower");
    CHECK(a.at("leaveat") == "08:15");
    CHECK_FALSE(a.contains("arriveby"));
  }

  SUBCASE("short and qualified constraint names are interchangeable") {
    Entity a = taxi_synthesize(constraints({{"taxi-departure", {"a"}},
                                            {"taxi-destination", {"b"}}}),
                               catalog);
    Entity b = taxi_synthesize(constraints({{"departure", {"a"}}, {"destination", {"b"}}}),
                               catalog);
    CHECK(a == b);
  }

  SUBCASE("different constraints change the vehicle") {
    Entity a = taxi_synthesize(constraints({{"taxi-departure", {"a"}},
                                            {"taxi-destination", {"b"}}}),
                               catalog);
    Entity b = taxi_synthesize(constraints({{"taxi-departure", {"a"}},
                                            {"taxi-destination", {"c"}}}),
                               catalog);
    CHECK(a.at("phone") != b.at("phone"));
  }

  SUBCASE("route endpoints are required") {
    try {
      (void)taxi_synthesize(constraints({{"taxi-departure", {"a"}}}), catalog);
      FAIL("expected MissingRouteEndpoints");
    } catch (const TodError& e) {
      CHECK(e.kind() == ErrorKind::MissingRouteEndpoints);
    }
  }
}

TEST_CASE("database set") {
  const DatabaseSet& dbs = DatabaseSet::bundled();
  for (const char* domain :
       {"restaurant", "hotel", "train", "attraction", "hospital", "police"}) {
    CHECK(dbs.has(domain));
  }
  CHECK_FALSE(dbs.has("taxi"));
  try {
    (void)dbs.at("taxi");
    FAIL("expected DomainMismatch");
  } catch (const TodError& e) {
    CHECK(e.kind() == ErrorKind::DomainMismatch);
  }
}

TEST_CASE("query_and_observe dispatches by domain") {
  const DatabaseSet& dbs = DatabaseSet::bundled();

  Observation taxi = query_and_observe(
      dbs, "taxi",
      constraints({{"taxi-departure", {"alpha"}}, {"taxi-destination", {"beta"}}}));
  CHECK(taxi.option_count == 1);
  REQUIRE(taxi.single.has_value());
  CHECK(taxi.render().rfind("taxi information:\noption number: 1\ninformation:", 0) == 0);

  SlotMap rc = constraints({{"restaurant-food", {"thai"}}});
  Observation restaurant = query_and_observe(dbs, "restaurant", rc);
  CHECK(restaurant.option_count ==
        static_cast<int>(dbs.at("restaurant").brute_force(rc).size()));

  Observation none = query_and_observe(
      dbs, "restaurant", constraints({{"restaurant-food", {"nonexistent cuisine"}}}));
  CHECK(none.option_count == 0);
  CHECK(none.render().rfind("restaurant information:\noption number: 0", 0) == 0);
}
