#include "doctest.h"

#include <algorithm>
#include <random>

#include "test_support.hpp"
#include "tod/evaluation.hpp"

using namespace tod;

TEST_CASE("metric tokenizer") {
  CHECK(tokenize("Hello, world!") == std::vector<std::string>{"hello", ",", "world", "!"});
  CHECK(tokenize("[train_leaveat]") == std::vector<std::string>{"[", "train_leaveat", "]"});
  CHECK(tokenize("don't") == std::vector<std::string>{"don", "'", "t"});
  CHECK(tokenize("a  b\t\nc") == std::vector<std::string>{"a", "b", "c"});
  CHECK(tokenize("09:16") == std::vector<std::string>{"09", ":", "16"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("   ").empty());
}

TEST_CASE("corpus bleu") {
  const std::vector<std::string> hyps = {"the cat sat on the mat", "there is a dog"};
  const std::vector<std::string> refs = {"the cat is on the mat",
                                         "there is a dog in the park"};

  SUBCASE("frozen reference value") {
    // Hand-checked: p1=9/10, p2=6/8, p3=3/6, p4=1/4, BP=exp(1-21/20).
    CHECK(corpus_bleu(hyps, refs) == doctest::Approx(39.926854936217524).epsilon(1e-9));
  }

  SUBCASE("identical corpora score 100") {
    CHECK(corpus_bleu(refs, refs) == doctest::Approx(100.0));
  }

  SUBCASE("disjoint corpora hit the smoothing floor") {
    CHECK(corpus_bleu({"aaa bbb ccc ddd"}, {"eee fff ggg hhh"}) < 1e-9);
  }

  SUBCASE("empty hypotheses score zero") {
    CHECK(corpus_bleu({"", ""}, {"a b", "c d"}) == 0.0);
  }

  SUBCASE("pair order does not matter") {
    std::vector<std::string> rh = {hyps[1], hyps[0]};
    std::vector<std::string> rr = {refs[1], refs[0]};
    CHECK(corpus_bleu(rh, rr) == doctest::Approx(corpus_bleu(hyps, refs)).epsilon(1e-12));
  }

  SUBCASE("misaligned corpora are rejected") {
    try {
      (void)corpus_bleu({"a"}, {"a", "b"});
      FAIL("expected AlignmentMismatch");
    } catch (const TodError& e) {
      CHECK(e.kind() == ErrorKind::AlignmentMismatch);
    }
  }

  SUBCASE("empty corpora are rejected") {
    try {
      (void)corpus_bleu({}, {});
      FAIL("expected EmptyCorpus");
    } catch (const TodError& e) {
      CHECK(e.kind() == ErrorKind::EmptyCorpus);
    }
  }

  SUBCASE("sentence bleu is the single-pair corpus score") {
    CHECK(sentence_bleu(hyps[0], refs[0])
          == doctest::Approx(corpus_bleu({hyps[0]}, {refs[0]})).epsilon(1e-12));
    CHECK(sentence_bleu("same words here now", "same words here now")
          == doctest::Approx(100.0));
  }
}

TEST_CASE("conditional bigram entropy") {
  CHECK(compute_cbe({"a b a c"}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(compute_cbe({"a a a a"}) == doctest::Approx(0.0));
  CHECK(compute_cbe({"a b c d"}) == doctest::Approx(0.0));
  CHECK(compute_cbe({"a b a c", "a b"})
        == doctest::Approx(0.9182958340544896).epsilon(1e-12));
  // The trailing unpaired token is ignored; one pair carries no entropy.
  CHECK(compute_cbe({"a b c"}) == doctest::Approx(0.0));
  CHECK(compute_cbe({""}) == 0.0);
  CHECK(compute_cbe({"a b a c", "a b"})
        == doctest::Approx(compute_cbe({"a b", "a b a c"})).epsilon(1e-12));
  try {
    (void)compute_cbe({});
    FAIL("expected EmptyCorpus");
  } catch (const TodError& e) {
    CHECK(e.kind() == ErrorKind::EmptyCorpus);
  }
}

TEST_CASE("lexical richness uses set semantics") {
  Richness r = lexical_richness({"The cat. The dog!"});
  CHECK(r.uniq_words == 5);     // the, cat, ., dog, !
  CHECK(r.uniq_trigrams == 4);  // sliding window over six tokens

  Richness doubled = lexical_richness({"The cat. The dog!", "The cat. The dog!"});
  CHECK(doubled.uniq_words == r.uniq_words);
  CHECK(doubled.uniq_trigrams == r.uniq_trigrams);

  Richness empty = lexical_richness({});
  CHECK(empty.uniq_words == 0);
  CHECK(empty.uniq_trigrams == 0);

  // Trigrams never span text boundaries.
  Richness split = lexical_richness({"a b", "c d"});
  CHECK(split.uniq_trigrams == 0);
  CHECK(split.uniq_words == 4);
}

TEST_CASE("combined score rounds half up to one decimal") {
  CHECK(compute_combined(92.4, 82.8, 18.7) == doctest::Approx(106.3).epsilon(1e-12));
  CHECK(compute_combined(90.3, 75.4, 14.8) == doctest::Approx(97.7).epsilon(1e-12));
  CHECK(compute_combined(0, 0, 0) == 0.0);
  CHECK(compute_combined(100, 100, 100) == doctest::Approx(200.0));

  std::mt19937_64 rng(20250819);
  std::uniform_real_distribution<double> uniform(0.0, 100.0);
  for (int i = 0; i < 500; ++i) {
    double inform = uniform(rng), success = uniform(rng), bleu = uniform(rng);
    double combined = compute_combined(inform, success, bleu);
    double exact = (inform + success) / 2.0 + bleu;
    CHECK(std::abs(combined - exact) <= 0.05 + 1e-9);
    CHECK(std::abs(combined * 10.0 - std::round(combined * 10.0)) < 1e-6);
  }
}

TEST_CASE("metrics report serialization") {
  MetricsReport report;
  report.dialogues = 2;
  report.turns = 7;
  report.inform = 100.0;
  report.success = 50.0;
  report.bleu = 18.75;
  report.combined = 93.8;
  report.cbe = 1.25;
  report.uniq_words = 42;
  report.uniq_trigrams = 99;
  report.per_domain["restaurant"] = {2, 2, 1};
  DialogueEval detail;
  detail.dialogue_id = "d1.json";
  detail.informed = true;
  detail.successful = false;
  detail.missed_requests = {"restaurant-phone"};
  report.details.push_back(detail);

  MetricsReport back = MetricsReport::from_json(report.to_json());
  CHECK(back.to_json() == report.to_json());
  CHECK(back.per_domain.at("restaurant").successful == 1);
  CHECK(back.details.at(0).missed_requests
        == std::vector<std::string>{"restaurant-phone"});

  json incomplete = report.to_json();
  incomplete.erase("cbe");
  try {
    (void)MetricsReport::from_json(incomplete);
    FAIL("expected MalformedRecord");
  } catch (const TodError& e) {
    CHECK(e.kind() == ErrorKind::MalformedRecord);
  }

  std::string table = render_table(report);
  CHECK(table.find("inform") != std::string::npos);
  CHECK(table.find("100.0") != std::string::npos);
  CHECK(table.find("18.75") != std::string::npos);
  CHECK(table.find("restaurant") != std::string::npos);
}

TEST_CASE("placeholder map lookups") {
  const PlaceholderMap& map = PlaceholderMap::bundled();

  const PlaceholderInfo* qualified = map.find("restaurant_name");
  REQUIRE(qualified != nullptr);
  CHECK(qualified->domain == "restaurant");
  CHECK(qualified->attribute == "name");

  const PlaceholderInfo* bare = map.find("phone");
  REQUIRE(bare != nullptr);
  CHECK(bare->domain == "*");
  CHECK(bare->attribute == "phone");

  CHECK(map.find("zzz_not_a_placeholder") == nullptr);

  CHECK(map.offer_attributes("train") == std::vector<std::string>{"trainid"});
  CHECK(map.offer_attributes("restaurant") == std::vector<std::string>{"name"});
  CHECK(map.offer_attributes("taxi") == std::vector<std::string>{"*"});
  CHECK(map.offer_attributes("no_such_domain").empty());
}

namespace {

CorpusDialogue restaurant_dialogue(const std::string& id,
                                   const std::string& goal_food = "thai") {
  CorpusDialogue d;
  d.id = id;
  d.services = {"restaurant"};
  GoalDomain goal;
  goal.informable.set("restaurant-food", {goal_food});
  goal.requestable = {"phone"};
  d.goal["restaurant"] = goal;

  Frame frame;
  frame.service = "restaurant";
  frame.active_intent = "find_restaurant";
  frame.slot_values.set("restaurant-food", {goal_food});

  CorpusTurn user1{"USER", "i want " + goal_food + " food", "", {frame}};
  CorpusTurn sys1{"SYSTEM", "how about this place?", "How about [restaurant_name]?", {}};
  frame.requested = {"phone"};
  CorpusTurn user2{"USER", "what is the phone number?", "", {frame}};
  CorpusTurn sys2{"SYSTEM", "the phone is 123", "The phone is [restaurant_phone].", {}};
  d.turns = {user1, sys1, user2, sys2};
  return d;
}

Evaluator make_evaluator() {
  return Evaluator(&SchemaSet::bundled(), &DatabaseSet::bundled(),
                   &PlaceholderMap::bundled());
}

}  // namespace

TEST_CASE("evaluator scores hand-built dialogues") {
  Evaluator evaluator = make_evaluator();

  SUBCASE("offer plus covered request informs and succeeds") {
    Corpus corpus;
    corpus.dialogues.push_back(restaurant_dialogue("d1.json"));
    Predictions predictions;
    predictions["d1.json"] = {"I recommend [restaurant_name].",
                              "The phone is [restaurant_phone]."};
    MetricsReport report = evaluator.evaluate(predictions, corpus);
    CHECK(report.inform == 100.0);
    CHECK(report.success == 100.0);
    CHECK(report.turns == 2);
    CHECK(report.details[0].missed_offers.empty());
    CHECK(report.details[0].missed_requests.empty());
  }

  SUBCASE("bare placeholders are credited through the turn's gold domain") {
    Corpus corpus;
    corpus.dialogues.push_back(restaurant_dialogue("d1.json"));
    Predictions predictions;
    predictions["d1.json"] = {"How about [name]?", "You can call [phone]."};
    MetricsReport report = evaluator.evaluate(predictions, corpus);
    CHECK(report.inform == 100.0);
    CHECK(report.success == 100.0);
  }

  SUBCASE("uncovered request fails success but not inform") {
    Corpus corpus;
    corpus.dialogues.push_back(restaurant_dialogue("d1.json"));
    Predictions predictions;
    predictions["d1.json"] = {"I recommend [restaurant_name].", "Anything else?"};
    MetricsReport report = evaluator.evaluate(predictions, corpus);
    CHECK(report.inform == 100.0);
    CHECK(report.success == 0.0);
    CHECK(report.details[0].missed_requests
          == std::vector<std::string>{"restaurant-phone"});
  }

  SUBCASE("no offer fails inform and forces success down") {
    Corpus corpus;
    corpus.dialogues.push_back(restaurant_dialogue("d1.json"));
    Predictions predictions;
    predictions["d1.json"] = {"We have many options.", "The phone is [restaurant_phone]."};
    MetricsReport report = evaluator.evaluate(predictions, corpus);
    CHECK(report.inform == 0.0);
    CHECK(report.success == 0.0);  // request covered, but success <= inform
    CHECK(report.details[0].missed_offers == std::vector<std::string>{"restaurant"});
  }

  SUBCASE("a goal no database entity satisfies cannot inform") {
    Corpus corpus;
    corpus.dialogues.push_back(restaurant_dialogue("d1.json", "nonexistent cuisine"));
    Predictions predictions;
    predictions["d1.json"] = {"I recommend [restaurant_name].",
                              "The phone is [restaurant_phone]."};
    MetricsReport report = evaluator.evaluate(predictions, corpus);
    CHECK(report.inform == 0.0);
  }

  SUBCASE("taxi goals accept any attributed placeholder as an offer") {
    CorpusDialogue d;
    d.id = "t1.json";
    d.services = {"taxi"};
    GoalDomain goal;
    goal.informable.set("taxi-departure", {"alpha street"});
    goal.requestable = {"phone"};
    d.goal["taxi"] = goal;
    Frame frame;
    frame.service = "taxi";
    frame.active_intent = "find_taxi";
    CorpusTurn user{"USER", "book me a taxi", "", {frame}};
    CorpusTurn sys{"SYSTEM", "done", "Booked! Contact [taxi_phone].", {}};
    d.turns = {user, sys};
    Corpus corpus;
    corpus.dialogues.push_back(d);

    Predictions predictions;
    predictions["t1.json"] = {"A [taxi_type] will come; call [taxi_phone]."};
    MetricsReport report = evaluator.evaluate(predictions, corpus);
    CHECK(report.inform == 100.0);
    CHECK(report.success == 100.0);
  }

  SUBCASE("per-domain tallies follow the goal domains") {
    Corpus corpus;
    corpus.dialogues.push_back(restaurant_dialogue("d1.json"));
    corpus.dialogues.push_back(restaurant_dialogue("d2.json"));
    Predictions predictions;
    predictions["d1.json"] = {"I recommend [restaurant_name].",
                              "The phone is [restaurant_phone]."};
    predictions["d2.json"] = {"I recommend [restaurant_name].", "Anything else?"};
    MetricsReport report = evaluator.evaluate(predictions, corpus);
    CHECK(report.dialogues == 2);
    CHECK(report.turns == 4);
    CHECK(report.inform == 100.0);
    CHECK(report.success == 50.0);
    const DomainMetrics& dm = report.per_domain.at("restaurant");
    CHECK(dm.dialogues == 2);
    CHECK(dm.informed == 2);
    CHECK(dm.successful == 1);
    CHECK(report.combined
          == doctest::Approx(compute_combined(report.inform, report.success, report.bleu)));
  }

  SUBCASE("missing or misaligned predictions are rejected") {
    Corpus corpus;
    corpus.dialogues.push_back(restaurant_dialogue("d1.json"));
    try {
      (void)evaluator.evaluate({}, corpus);
      FAIL("expected MissingPrediction");
    } catch (const TodError& e) {
      CHECK(e.kind() == ErrorKind::MissingPrediction);
    }

    Predictions wrong_count;
    wrong_count["d1.json"] = {"only one response"};
    try {
      (void)evaluator.evaluate(wrong_count, corpus);
      FAIL("expected AlignmentMismatch");
    } catch (const TodError& e) {
      CHECK(e.kind() == ErrorKind::AlignmentMismatch);
    }

    Corpus empty;
    CHECK_THROWS_AS((void)evaluator.evaluate({}, empty), TodError);
  }

  SUBCASE("a user turn without a gold reply is a corpus defect") {
    CorpusDialogue d = restaurant_dialogue("d1.json");
    d.turns.push_back({"USER", "dangling question", "", {}});
    Corpus corpus;
    corpus.dialogues.push_back(d);
    Predictions predictions;
    predictions["d1.json"] = {"a", "b", "c"};
    try {
      (void)evaluator.evaluate(predictions, corpus);
      FAIL("expected AlignmentMismatch");
    } catch (const TodError& e) {
      CHECK(e.kind() == ErrorKind::AlignmentMismatch);
    }
  }
}

TEST_CASE("evaluator reproduces gold references exactly") {
  const Corpus& corpus = tod::test::fixture_corpus();
  Predictions predictions;
  for (const auto& d : corpus.dialogues) {
    std::vector<std::string> responses;
    for (size_t idx : d.user_turn_indices()) {
      const CorpusTurn& gold = d.turns[idx + 1];
      responses.push_back(gold.delex.empty() ? gold.utterance : gold.delex);
    }
    predictions[d.id] = responses;
  }
  MetricsReport report = make_evaluator().evaluate(predictions, corpus);
  CHECK(report.bleu == doctest::Approx(100.0));
  CHECK(report.inform == 100.0);
  CHECK(report.success == 100.0);
  CHECK(report.combined == doctest::Approx(200.0));
  CHECK(report.cbe > 0.5);
  CHECK(report.uniq_words > 100);
  CHECK(report.uniq_trigrams > report.uniq_words);
  CHECK(report.dialogues == 50);
}
