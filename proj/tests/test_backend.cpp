#include "doctest.h"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "httplib.h"
#include "test_support.hpp"
#include "tod/intent_agent.hpp"
#include "tod/llm_backend.hpp"
#include "tod/slot_agent.hpp"

using namespace tod;

TEST_CASE("stage sniffing keys off the prompt opening") {
  CHECK(sniff_stage("You are an agent that helps users choose the right tool") == "intent");
  CHECK(sniff_stage("You are an agent whose goal is to extract slots") == "slot");
  CHECK(sniff_stage("You act as an AI assistant to reponse user's question") == "response");
  CHECK(sniff_stage("Hello there") == "");
  CHECK(sniff_stage("") == "");
}

TEST_CASE("scripted backend") {
  SUBCASE("first matching rule wins; empty predicate matches everything") {
    ScriptedBackend backend;
    backend.add_rule("find_restaurant", "first");
    backend.add_rule("restaurant", "second");
    backend.add_rule("", "fallback");
    CHECK(backend.complete({.prompt = "please find_restaurant now"}) == "first");
    CHECK(backend.complete({.prompt = "a restaurant question"}) == "second");
    CHECK(backend.complete({.prompt = "anything else"}) == "fallback");
  }

  SUBCASE("no matching rule raises NoScriptMatch") {
    ScriptedBackend backend;
    backend.add_rule("never-present", "x");
    try {
      (void)backend.complete({.prompt = "some prompt"});
      FAIL("expected NoScriptMatch");
    } catch (const TodError& e) {
      CHECK(e.kind() == ErrorKind::NoScriptMatch);
    }
  }

  SUBCASE("loads rules from a file") {
    const std::string path = std::filesystem::temp_directory_path() / "tod_script_ok.json";
    util::write_file(path, R"([{"contains": "alpha", "response": "A"},
                               {"response": "B"}])");
    ScriptedBackend backend = ScriptedBackend::from_file(path);
    CHECK(backend.complete({.prompt = "alpha beta"}) == "A");
    CHECK(backend.complete({.prompt = "gamma"}) == "B");
  }

  SUBCASE("rejects malformed script files") {
    const std::string dir = std::filesystem::temp_directory_path();
    const std::string not_array = dir + "/tod_script_obj.json";
    util::write_file(not_array, R"({"response": "A"})");
    CHECK_THROWS_AS((void)ScriptedBackend::from_file(not_array), TodError);

    const std::string no_response = dir + "/tod_script_noresp.json";
    util::write_file(no_response, R"([{"contains": "x"}])");
    CHECK_THROWS_AS((void)ScriptedBackend::from_file(no_response), TodError);

    const std::string bad_json = dir + "/tod_script_bad.json";
    util::write_file(bad_json, "[not json");
    try {
      (void)ScriptedBackend::from_file(bad_json);
      FAIL("expected BadConfig");
    } catch (const TodError& e) {
      CHECK(e.kind() == ErrorKind::BadConfig);
    }
  }
}

TEST_CASE("backend descriptor parsing") {
  SUBCASE("defaults") {
    BackendDescriptor d = BackendDescriptor::from_json(json::object());
    CHECK(d.kind == "oracle");
    CHECK(d.auth_env == "TOD_API_KEY");
    CHECK(d.model_id == "dimf");
    CHECK(d.max_retries == 3);
    CHECK(d.timeout_ms == 30000);
    CHECK(d.inflight_cap == 8);
  }

  SUBCASE("round trip") {
    BackendDescriptor d;
    d.kind = "http";
    d.base_url = "http://127.0.0.1:9/v2";
    d.max_retries = 1;
    d.journal_path = "j.jsonl";
    BackendDescriptor back = BackendDescriptor::from_json(d.to_json());
    CHECK(back.to_json() == d.to_json());
  }

  SUBCASE("rejects bad values") {
    CHECK_THROWS_AS((void)BackendDescriptor::from_json(json::parse(R"({"kind": "magic"})")),
                    TodError);
    CHECK_THROWS_AS(
        (void)BackendDescriptor::from_json(json::parse(R"({"max_retries": -1})")), TodError);
    CHECK_THROWS_AS(
        (void)BackendDescriptor::from_json(json::parse(R"({"timeout_ms": 0})")), TodError);
    CHECK_THROWS_AS(
        (void)BackendDescriptor::from_json(json::parse(R"({"base_url": 7})")), TodError);
    CHECK_THROWS_AS(
        (void)BackendDescriptor::from_json(json::parse(R"({"inflight_cap": "8"})")), TodError);
    CHECK_THROWS_AS((void)BackendDescriptor::from_json(json::array()), TodError);
  }
}

TEST_CASE("make_backend wiring") {
  BackendDescriptor oracle;
  oracle.kind = "oracle";
  try {
    (void)make_backend(oracle, nullptr);
    FAIL("expected BadConfig");
  } catch (const TodError& e) {
    CHECK(e.kind() == ErrorKind::BadConfig);
  }
  CHECK(make_backend(oracle, &tod::test::fixture_corpus())->kind() == "oracle");

  BackendDescriptor scripted;
  scripted.kind = "scripted";
  CHECK(make_backend(scripted)->kind() == "scripted");

  BackendDescriptor http;
  http.kind = "http";
  CHECK_THROWS_AS((void)make_backend(http), TodError);  // no base_url

  http.base_url = "http://127.0.0.1:1";
  http.auth_env = "TOD_SURELY_UNSET_VARIABLE";
  try {
    (void)make_backend(http);
    FAIL("expected BadConfig");
  } catch (const TodError& e) {
    CHECK(e.kind() == ErrorKind::BadConfig);
    CHECK(std::string(e.what()).find("TOD_SURELY_UNSET_VARIABLE") != std::string::npos);
  }

  http.auth_env = "";  // explicit opt-out: no credential required
  CHECK(make_backend(http)->kind() == "http");
}

TEST_CASE("oracle backend replays gold annotations") {
  const Corpus& corpus = tod::test::fixture_corpus();
  OracleBackend backend(&corpus);

  const CorpusDialogue* scripted = nullptr;
  for (const auto& d : corpus.dialogues) {
    if (d.turns[0].active_frame() != nullptr && d.user_turn_count() >= 2) {
      scripted = &d;
      break;
    }
  }
  REQUIRE(scripted != nullptr);

  auto request = [&](const std::string& stage) {
    CompletionRequest r;
    r.dialogue_id = scripted->id;
    r.stage = stage;
    return r;
  };

  auto gold_tool = [](const CorpusTurn& turn) -> std::string {
    const Frame* frame = turn.active_frame();
    if (frame == nullptr || frame->active_intent == "NONE") return "other";
    return frame->active_intent;
  };

  auto user_turns = scripted->user_turn_indices();
  const CorpusTurn& turn0 = scripted->turns[user_turns[0]];
  const Frame* frame0 = turn0.active_frame();

  CHECK(backend.complete(request("intent"))
        == IntentAgent::format_completion("none", turn0.utterance, gold_tool(turn0)));
  CHECK(backend.complete(request("slot"))
        == SlotAgent::format_completion(turn0.utterance, frame0->service,
                                        frame0->slot_values, frame0->requested));
  const CorpusTurn& reply0 = scripted->turns[user_turns[0] + 1];
  CHECK(backend.complete(request("response"))
        == (reply0.delex.empty() ? reply0.utterance : reply0.delex));

  // The second intent call advances the replay and reports the previous tool.
  const CorpusTurn& turn1 = scripted->turns[user_turns[1]];
  CHECK(backend.complete(request("intent"))
        == IntentAgent::format_completion(gold_tool(turn0), turn1.utterance,
                                          gold_tool(turn1)));

  SUBCASE("stage can be inferred from the prompt") {
    OracleBackend fresh(&corpus);
    CompletionRequest r;
    r.dialogue_id = scripted->id;
    r.prompt = "You are an agent that helps users choose the right tool";
    CHECK(fresh.complete(r)
          == IntentAgent::format_completion("none", turn0.utterance, gold_tool(turn0)));
  }

  SUBCASE("unknown dialogue ids and missing ids are errors") {
    CompletionRequest unknown;
    unknown.dialogue_id = "no-such-dialogue.json";
    unknown.stage = "intent";
    try {
      (void)backend.complete(unknown);
      FAIL("expected OracleMissingAnnotation");
    } catch (const TodError& e) {
      CHECK(e.kind() == ErrorKind::OracleMissingAnnotation);
    }
    CompletionRequest anonymous;
    anonymous.stage = "intent";
    CHECK_THROWS_AS((void)backend.complete(anonymous), TodError);
  }

  SUBCASE("slot stage before any intent stage is an error") {
    OracleBackend fresh(&corpus);
    CompletionRequest r = request("slot");
    try {
      (void)fresh.complete(r);
      FAIL("expected OracleMissingAnnotation");
    } catch (const TodError& e) {
      CHECK(e.kind() == ErrorKind::OracleMissingAnnotation);
    }
  }
}

namespace {

struct TestServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;

  TestServer() = default;
  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~TestServer() {
    if (thread.joinable()) {
      server.stop();
      thread.join();
    }
  }

  std::string url(const std::string& path = "") const {
    return "http://127.0.0.1:" + std::to_string(port) + path;
  }
};

std::string chat_body(const std::string& content) {
  json body = {{"choices", json::array({json{{"message", json{{"content", content}}}}})}};
  return body.dump();
}

}  // namespace

TEST_CASE("http backend against a live endpoint") {
  SUBCASE("retries transient failures, sends auth, journals the exchange") {
    TestServer ts;
    std::atomic<int> hits{0};
    std::string seen_auth;
    std::string seen_model;
    ts.server.Post("/v1/chat/completions",
                   [&](const httplib::Request& req, httplib::Response& res) {
                     int n = ++hits;
                     seen_auth = req.get_header_value("Authorization");
                     seen_model = json::parse(req.body).at("model").get<std::string>();
                     if (n <= 2) {
                       res.status = 503;
                       return;
                     }
                     res.set_content(chat_body("It works."), "application/json");
                   });
    ts.start();

    setenv("TOD_TEST_KEY", "sekrit", 1);
    const std::string journal =
        std::filesystem::temp_directory_path() / "tod_backend_journal.jsonl";
    std::filesystem::remove(journal);

    BackendDescriptor d;
    d.kind = "http";
    d.base_url = ts.url();
    d.auth_env = "TOD_TEST_KEY";
    d.max_retries = 3;
    d.journal_path = journal;
    HttpBackend backend(d);

    CompletionRequest r;
    r.prompt = "You are an agent that helps users choose a tool";
    r.dialogue_id = "d1.json";
    CHECK(backend.complete(r) == "It works.");
    CHECK(hits.load() == 3);
    CHECK(seen_auth == "Bearer sekrit");
    CHECK(seen_model == "dimf");

    json record = json::parse(util::read_file(journal).substr(
        0, util::read_file(journal).find('\n')));
    CHECK(record.at("stage") == "intent");
    CHECK(record.at("dialogue_id") == "d1.json");
    CHECK(record.at("attempts") == 3);
    CHECK(record.at("completion") == "It works.");
  }

  SUBCASE("a custom path on the base url is respected") {
    TestServer ts;
    ts.server.Post("/custom/complete", [&](const httplib::Request&, httplib::Response& res) {
      res.set_content(chat_body("custom"), "application/json");
    });
    ts.start();
    BackendDescriptor d;
    d.kind = "http";
    d.base_url = ts.url("/custom/complete");
    d.auth_env = "";
    HttpBackend backend(d);
    CHECK(backend.complete({.prompt = "p"}) == "custom");
  }

  SUBCASE("legacy text completions are accepted") {
    TestServer ts;
    ts.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                     res.set_content(R"({"choices": [{"text": "alt"}]})", "application/json");
                   });
    ts.start();
    BackendDescriptor d;
    d.kind = "http";
    d.base_url = ts.url();
    d.auth_env = "";
    HttpBackend backend(d);
    CHECK(backend.complete({.prompt = "p"}) == "alt");
  }

  SUBCASE("non-retryable statuses surface as HttpStatus") {
    TestServer ts;
    ts.start();  // no handler registered: 404
    BackendDescriptor d;
    d.kind = "http";
    d.base_url = ts.url();
    d.auth_env = "";
    d.max_retries = 0;
    HttpBackend backend(d);
    try {
      (void)backend.complete({.prompt = "p"});
      FAIL("expected HttpStatus");
    } catch (const TodError& e) {
      CHECK(e.kind() == ErrorKind::HttpStatus);
    }
  }

  SUBCASE("invalid payloads surface as BackendError / EmptyCompletion") {
    TestServer ts;
    ts.server.Post("/bad-json", [&](const httplib::Request&, httplib::Response& res) {
      res.set_content("not json", "application/json");
    });
    ts.server.Post("/no-content", [&](const httplib::Request&, httplib::Response& res) {
      res.set_content("{}", "application/json");
    });
    ts.start();

    BackendDescriptor d;
    d.kind = "http";
    d.auth_env = "";
    d.max_retries = 0;

    d.base_url = ts.url("/bad-json");
    try {
      (void)HttpBackend(d).complete({.prompt = "p"});
      FAIL("expected BackendError");
    } catch (const TodError& e) {
      CHECK(e.kind() == ErrorKind::BackendError);
    }

    d.base_url = ts.url("/no-content");
    try {
      (void)HttpBackend(d).complete({.prompt = "p"});
      FAIL("expected EmptyCompletion");
    } catch (const TodError& e) {
      CHECK(e.kind() == ErrorKind::EmptyCompletion);
    }
  }

  SUBCASE("exhausted retries on a dead endpoint surface as BackendError") {
    int dead_port;
    {
      TestServer ts;
      ts.start();
      dead_port = ts.port;
    }  // server torn down; the port is now closed
    BackendDescriptor d;
    d.kind = "http";
    d.base_url = "http://127.0.0.1:" + std::to_string(dead_port);
    d.auth_env = "";
    d.max_retries = 1;
    d.timeout_ms = 2000;
    HttpBackend backend(d);
    try {
      (void)backend.complete({.prompt = "p"});
      FAIL("expected BackendError");
    } catch (const TodError& e) {
      CHECK(e.kind() == ErrorKind::BackendError);
      CHECK(std::string(e.what()).find("2 attempts") != std::string::npos);
    }
  }
}
