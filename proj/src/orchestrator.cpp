#include "tod/orchestrator.hpp"

#include <atomic>
#include <thread>

#include "tod/util.hpp"

namespace tod {

namespace {

json stage_json(const StageTrace& stage) {
  if (!stage.ran) return json();
  json obj = json::object();
  obj["prompt"] = stage.prompt;
  obj["completion"] = stage.completion;
  return obj;
}

}  // namespace

json TurnTrace::to_json() const {
  json obj = json::object();
  obj["turn_index"] = turn_index;
  obj["question"] = question;
  obj["skipped"] = skipped;
  obj["intent"] = stage_json(intent);
  obj["action"] = action;
  obj["last_tool"] = last_tool;
  obj["slot"] = stage_json(slot);
  obj["merged_slots"] = merged_slots.to_json();
  obj["information"] = information;
  obj["observation"] = observation;
  obj["option_count"] = option_count;
  obj["response"] = stage_json(response);
  obj["final_response"] = final_response;
  obj["warnings"] = warnings;
  if (!error_stage.empty()) {
    obj["error"] = json{{"stage", error_stage}, {"message", error_message}};
  } else {
    obj["error"] = json();
  }
  return obj;
}

TurnTrace TurnTrace::from_json(const json& obj) {
  if (!obj.is_object())
    throw TodError(ErrorKind::MalformedRecord, "turn trace must be a JSON object");
  TurnTrace trace;
  auto read_stage = [&obj](const char* key, StageTrace* stage) {
    if (!obj.contains(key) || obj[key].is_null()) return;
    const json& s = obj[key];
    stage->ran = true;
    if (s.contains("prompt") && s["prompt"].is_string())
      stage->prompt = s["prompt"].get<std::string>();
    if (s.contains("completion") && s["completion"].is_string())
      stage->completion = s["completion"].get<std::string>();
  };
  auto str = [&obj](const char* key, std::string* out) {
    if (obj.contains(key) && obj[key].is_string()) *out = obj[key].get<std::string>();
  };
  if (obj.contains("turn_index") && obj["turn_index"].is_number_integer())
    trace.turn_index = obj["turn_index"].get<int>();
  str("question", &trace.question);
  if (obj.contains("skipped") && obj["skipped"].is_boolean())
    trace.skipped = obj["skipped"].get<bool>();
  read_stage("intent", &trace.intent);
  str("action", &trace.action);
  str("last_tool", &trace.last_tool);
  read_stage("slot", &trace.slot);
  if (obj.contains("merged_slots") && obj["merged_slots"].is_object())
    trace.merged_slots = SlotMap::from_json(obj["merged_slots"]);
  if (obj.contains("information") && obj["information"].is_array())
    for (const auto& item : obj["information"])
      if (item.is_string()) trace.information.push_back(item.get<std::string>());
  if (obj.contains("observation")) trace.observation = obj["observation"];
  if (obj.contains("option_count") && obj["option_count"].is_number_integer())
    trace.option_count = obj["option_count"].get<int>();
  read_stage("response", &trace.response);
  str("final_response", &trace.final_response);
  if (obj.contains("warnings") && obj["warnings"].is_array())
    for (const auto& item : obj["warnings"])
      if (item.is_string()) trace.warnings.push_back(item.get<std::string>());
  if (obj.contains("error") && obj["error"].is_object()) {
    const json& err = obj["error"];
    if (err.contains("stage") && err["stage"].is_string())
      trace.error_stage = err["stage"].get<std::string>();
    if (err.contains("message") && err["message"].is_string())
      trace.error_message = err["message"].get<std::string>();
  }
  return trace;
}

Transcript Transcript::from_json(const json& obj) {
  if (!obj.is_object() || !obj.contains("dialogue_id") || !obj["dialogue_id"].is_string()
      || !obj.contains("turns") || !obj["turns"].is_array())
    throw TodError(ErrorKind::MalformedRecord,
                   "transcript needs \"dialogue_id\" and \"turns\"");
  Transcript transcript;
  transcript.dialogue_id = obj["dialogue_id"].get<std::string>();
  for (const auto& turn : obj["turns"]) transcript.turns.push_back(TurnTrace::from_json(turn));
  return transcript;
}

std::vector<std::string> Transcript::responses() const {
  std::vector<std::string> out;
  out.reserve(turns.size());
  for (const auto& turn : turns) out.push_back(turn.final_response);
  return out;
}

json Transcript::to_json() const {
  json obj = json::object();
  obj["dialogue_id"] = dialogue_id;
  json arr = json::array();
  for (const auto& turn : turns) arr.push_back(turn.to_json());
  obj["turns"] = arr;
  return obj;
}

Engine::Engine(const SchemaSet* schemas, const DatabaseSet* dbs,
               const PromptTemplates* templates, EngineOptions options)
    : schemas_(schemas),
      dbs_(dbs),
      intent_agent_(schemas, templates),
      slot_agent_(schemas, templates),
      response_agent_(templates),
      options_(options) {}

Observation Engine::query_domain(const std::string& domain, const SlotMap& constraints) const {
  return query_and_observe(*dbs_, domain, constraints);
}

TurnTrace Engine::run_turn(DialogueState& state, const std::string& question,
                           Backend& backend) const {
  TurnTrace trace;
  trace.turn_index = static_cast<int>(state.turns.size()) / 2;
  trace.question = question;

  if (state.ended) {
    trace.skipped = true;
    return trace;
  }

  auto fail = [&](const char* stage, const TodError& e) {
    trace.error_stage = stage;
    trace.error_message = e.what();
    state.turns.push_back({"user", question, ""});
    state.turns.push_back({"system", "", ""});
    return trace;
  };

  CompletionRequest request;
  request.dialogue_id = state.dialogue_id;
  request.max_tokens = options_.max_tokens;
  request.temperature = options_.temperature;

  // Stage 1: intent classification.
  Intent intent;
  try {
    trace.last_tool = state.last_tool();
    trace.intent.prompt = intent_agent_.build_prompt({question, trace.last_tool});
    request.prompt = trace.intent.prompt;
    request.stage = "intent";
    trace.intent.completion = backend.complete(request);
    trace.intent.ran = true;
    auto parsed = IntentAgent::parse_completion(trace.intent.completion);
    if (!parsed.ok()) throw parsed.error();
    for (const auto& w : parsed.value().warnings) trace.warnings.push_back(w);
    trace.action = parsed.value().action;
    auto resolved = to_intent(trace.action);
    if (!resolved.ok()) throw resolved.error();
    intent = std::move(resolved).take();
  } catch (const TodError& e) {
    return fail("intent", e);
  }
  state.last_intent = intent;

  if (intent.action == Action::end) {
    trace.final_response = kClosingResponse;
    state.ended = true;
    state.turns.push_back({"user", question, ""});
    state.turns.push_back({"system", kClosingResponse, kClosingResponse});
    return trace;
  }

  // Stage 2: slot filling with history inheritance.
  SlotMap merged;
  std::vector<std::string> information;
  try {
    const std::string& domain = intent.domain;
    auto history_it = state.history_slots.find(domain);
    const SlotMap* history = history_it == state.history_slots.end() ? nullptr
                                                                     : &history_it->second;
    trace.slot.prompt = slot_agent_.build_prompt({question, domain, history});
    request.prompt = trace.slot.prompt;
    request.stage = "slot";
    trace.slot.completion = backend.complete(request);
    trace.slot.ran = true;
    auto parsed = slot_agent_.parse_completion(trace.slot.completion, domain);
    if (!parsed.ok()) throw parsed.error();
    const SlotResult& result = parsed.value();
    for (const auto& w : result.warnings) trace.warnings.push_back(w);
    merged = merge_history(result.parameters, history ? *history : SlotMap{}, result.dropped);
    information = result.information;
    state.history_slots[domain] = merged;
  } catch (const TodError& e) {
    return fail("slot", e);
  }
  trace.merged_slots = merged;
  trace.information = information;

  // Stage 3: database query.
  Observation obs;
  try {
    obs = query_domain(intent.domain, merged);
  } catch (const TodError& e) {
    return fail("db", e);
  }
  trace.observation = obs.to_json();
  trace.option_count = obs.option_count;

  // Stage 4: response generation.
  try {
    ResponsePromptInputs inputs;
    inputs.question = question;
    inputs.observation = &obs;
    inputs.max_words = options_.max_words;
    size_t window = static_cast<size_t>(options_.history_window) * 2;
    size_t start = state.turns.size() > window ? state.turns.size() - window : 0;
    inputs.history.assign(state.turns.begin() + static_cast<long>(start), state.turns.end());
    trace.response.prompt = response_agent_.build_prompt(inputs);
    request.prompt = trace.response.prompt;
    request.stage = "response";
    trace.response.completion = backend.complete(request);
    trace.response.ran = true;
    ValidatedResponse validated =
        ResponseAgent::validate(trace.response.completion, obs, options_.max_words);
    trace.final_response = validated.text;
    if (validated.over_limit)
      trace.warnings.push_back("response exceeds the word budget ("
                               + std::to_string(validated.word_count) + " words)");
  } catch (const TodError& e) {
    return fail("response", e);
  }

  state.turns.push_back({"user", question, ""});
  state.turns.push_back({"system", trace.final_response, trace.final_response});
  return trace;
}

Transcript Engine::run_dialogue(const CorpusDialogue& dialogue, Backend& backend) const {
  Transcript transcript;
  transcript.dialogue_id = dialogue.id;

  DialogueState state;
  state.dialogue_id = dialogue.id;

  auto user_turns = dialogue.user_turn_indices();
  for (size_t i = 0; i < user_turns.size(); ++i) {
    if (options_.use_gold_last_intent) {
      if (i == 0) {
        state.last_intent.reset();
      } else {
        const Frame* prev = dialogue.turns[user_turns[i - 1]].active_frame();
        Intent gold{"other", Action::end};
        if (prev != nullptr) {
          auto resolved = to_intent(prev->active_intent);
          if (resolved.ok()) gold = std::move(resolved).take();
        }
        state.last_intent = gold;
      }
    }
    TurnTrace trace = run_turn(state, dialogue.turns[user_turns[i]].utterance, backend);
    trace.turn_index = static_cast<int>(i);
    transcript.turns.push_back(std::move(trace));
  }
  return transcript;
}

RunResult Engine::run_corpus(const Corpus& corpus, Backend& backend, int parallelism) const {
  RunResult result;
  size_t n = corpus.dialogues.size();
  std::vector<Transcript> transcripts(n);
  std::vector<std::string> errors(n);

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= n) return;
      const CorpusDialogue& dialogue = corpus.dialogues[i];
      try {
        std::unique_ptr<Backend> session = backend.for_dialogue(dialogue.id);
        Backend& scoped = session ? *session : backend;
        transcripts[i] = run_dialogue(dialogue, scoped);
      } catch (const TodError& e) {
        transcripts[i].dialogue_id = dialogue.id;
        errors[i] = e.what();
      } catch (const std::exception& e) {
        transcripts[i].dialogue_id = dialogue.id;
        errors[i] = e.what();
      }
    }
  };

  int threads = parallelism < 1 ? 1 : parallelism;
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      result.failures.emplace_back(corpus.dialogues[i].id, errors[i]);
      continue;
    }
    result.predictions[corpus.dialogues[i].id] = transcripts[i].responses();
    result.transcripts.push_back(std::move(transcripts[i]));
  }
  return result;
}

}  // namespace tod
