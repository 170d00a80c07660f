#include "tod/llm_backend.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "tod/intent_agent.hpp"
#include "tod/slot_agent.hpp"
#include "tod/util.hpp"

namespace tod {

std::string sniff_stage(const std::string& prompt) {
  if (util::starts_with(prompt, "You are an agent that helps users choose")) return "intent";
  if (util::starts_with(prompt, "You are an agent whose goal is to extract")) return "slot";
  if (util::starts_with(prompt, "You act as an AI assistant")) return "response";
  return "";
}

json BackendDescriptor::to_json() const {
  json obj = json::object();
  obj["kind"] = kind;
  obj["base_url"] = base_url;
  obj["auth_env"] = auth_env;
  obj["model_id"] = model_id;
  obj["script_path"] = script_path;
  obj["max_retries"] = max_retries;
  obj["timeout_ms"] = timeout_ms;
  obj["inflight_cap"] = inflight_cap;
  obj["journal_path"] = journal_path;
  return obj;
}

BackendDescriptor BackendDescriptor::from_json(const json& obj) {
  BackendDescriptor d;
  if (!obj.is_object()) throw TodError(ErrorKind::BadConfig, "backend config must be an object");
  auto str = [&](const char* key, std::string* out) {
    if (obj.contains(key)) {
      if (!obj[key].is_string())
        throw TodError(ErrorKind::BadConfig, std::string("backend.") + key + " must be a string");
      *out = obj[key].get<std::string>();
    }
  };
  auto num = [&](const char* key, int* out) {
    if (obj.contains(key)) {
      if (!obj[key].is_number_integer())
        throw TodError(ErrorKind::BadConfig, std::string("backend.") + key + " must be an integer");
      *out = obj[key].get<int>();
    }
  };
  str("kind", &d.kind);
  str("base_url", &d.base_url);
  str("auth_env", &d.auth_env);
  str("model_id", &d.model_id);
  str("script_path", &d.script_path);
  str("journal_path", &d.journal_path);
  num("max_retries", &d.max_retries);
  num("timeout_ms", &d.timeout_ms);
  num("inflight_cap", &d.inflight_cap);
  if (d.kind != "http" && d.kind != "scripted" && d.kind != "oracle")
    throw TodError(ErrorKind::BadConfig, "unknown backend kind: " + d.kind);
  if (d.max_retries < 0 || d.timeout_ms <= 0 || d.inflight_cap <= 0)
    throw TodError(ErrorKind::BadConfig, "backend retry/timeout/inflight settings must be positive");
  return d;
}

// ---------------------------------------------------------------------------
// Scripted

ScriptedBackend ScriptedBackend::from_file(const std::string& path) {
  ScriptedBackend backend;
  json doc;
  try {
    doc = json::parse(util::read_file(path));
  } catch (const json::parse_error& e) {
    throw TodError(ErrorKind::BadConfig, "script file " + path + ": " + e.what());
  }
  if (!doc.is_array()) throw TodError(ErrorKind::BadConfig, "script file must be a JSON array");
  for (const auto& rule : doc) {
    if (!rule.is_object() || !rule.contains("response") || !rule["response"].is_string())
      throw TodError(ErrorKind::BadConfig, "script rule needs a string \"response\"");
    std::string contains;
    if (rule.contains("contains")) {
      if (!rule["contains"].is_string())
        throw TodError(ErrorKind::BadConfig, "script rule \"contains\" must be a string");
      contains = rule["contains"].get<std::string>();
    }
    backend.add_rule(contains, rule["response"].get<std::string>());
  }
  return backend;
}

void ScriptedBackend::add_rule(std::string contains, std::string response) {
  rules_.emplace_back(std::move(contains), std::move(response));
}

std::string ScriptedBackend::complete(const CompletionRequest& request) {
  for (const auto& [contains, response] : rules_) {
    if (contains.empty() || request.prompt.find(contains) != std::string::npos) return response;
  }
  throw TodError(ErrorKind::NoScriptMatch,
                 "no scripted rule matches the prompt (stage "
                 + (request.stage.empty() ? sniff_stage(request.prompt) : request.stage) + ")");
}

// ---------------------------------------------------------------------------
// Oracle

namespace {

// Replays one dialogue's gold annotations in pipeline order: each intent call
// advances to the next user turn; slot/response calls answer for that turn.
class OracleSession : public Backend {
 public:
  explicit OracleSession(const CorpusDialogue* dialogue)
      : dialogue_(dialogue), user_turns_(dialogue->user_turn_indices()) {}

  std::string complete(const CompletionRequest& request) override {
    std::string stage = request.stage.empty() ? sniff_stage(request.prompt) : request.stage;
    if (stage == "intent") return serve_intent();
    if (stage == "slot") return serve_slot();
    if (stage == "response") return serve_response();
    throw TodError(ErrorKind::OracleMissingAnnotation,
                   "cannot infer pipeline stage for oracle completion");
  }

  std::string kind() const override { return "oracle"; }

 private:
  const CorpusTurn& user_turn(size_t i) const { return dialogue_->turns[user_turns_[i]]; }

  static std::string gold_tool(const CorpusTurn& turn) {
    const Frame* frame = turn.active_frame();
    if (frame == nullptr || frame->active_intent == "NONE") return "other";
    return frame->active_intent;
  }

  std::string serve_intent() {
    if (next_ >= user_turns_.size())
      throw TodError(ErrorKind::OracleMissingAnnotation,
                     dialogue_->id + ": no gold turn left for intent stage");
    current_ = next_++;
    std::string last_tool = current_ == 0 ? "none" : gold_tool(user_turn(current_ - 1));
    const CorpusTurn& turn = user_turn(current_);
    return IntentAgent::format_completion(last_tool, turn.utterance, gold_tool(turn));
  }

  std::string serve_slot() {
    const Frame* frame = current_turn_frame("slot");
    return SlotAgent::format_completion(user_turn(current_).utterance, frame->service,
                                        frame->slot_values, frame->requested);
  }

  std::string serve_response() {
    current_turn_frame("response");
    size_t turn_index = user_turns_[current_] + 1;
    if (turn_index >= dialogue_->turns.size()
        || dialogue_->turns[turn_index].speaker != "SYSTEM")
      throw TodError(ErrorKind::OracleMissingAnnotation,
                     dialogue_->id + ": user turn has no following system turn");
    const CorpusTurn& system_turn = dialogue_->turns[turn_index];
    return system_turn.delex.empty() ? system_turn.utterance : system_turn.delex;
  }

  const Frame* current_turn_frame(const char* stage) {
    if (current_ >= user_turns_.size())
      throw TodError(ErrorKind::OracleMissingAnnotation,
                     dialogue_->id + std::string(": ") + stage + " stage before any intent stage");
    const Frame* frame = user_turn(current_).active_frame();
    if (frame == nullptr)
      throw TodError(ErrorKind::OracleMissingAnnotation,
                     dialogue_->id + ": gold turn has no active frame for " + stage + " stage");
    return frame;
  }

  const CorpusDialogue* dialogue_;
  std::vector<size_t> user_turns_;
  size_t next_ = 0;
  size_t current_ = static_cast<size_t>(-1);
};

}  // namespace

std::unique_ptr<Backend> OracleBackend::for_dialogue(const std::string& dialogue_id) {
  const CorpusDialogue* dialogue = corpus_->find(dialogue_id);
  if (dialogue == nullptr)
    throw TodError(ErrorKind::OracleMissingAnnotation,
                   "dialogue " + dialogue_id + " not present in the gold corpus");
  return std::make_unique<OracleSession>(dialogue);
}

std::string OracleBackend::complete(const CompletionRequest& request) {
  if (request.dialogue_id.empty())
    throw TodError(ErrorKind::OracleMissingAnnotation,
                   "oracle backend needs a dialogue id on every request");
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = sessions_.find(request.dialogue_id);
  if (it == sessions_.end())
    it = sessions_.emplace(request.dialogue_id, for_dialogue(request.dialogue_id)).first;
  return it->second->complete(request);
}

// ---------------------------------------------------------------------------
// Http

struct HttpBackend::Impl {
  BackendDescriptor descriptor;
  std::string host;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string bearer;

  std::mutex journal_mutex;
  std::ofstream journal;

  std::mutex inflight_mutex;
  std::condition_variable inflight_cv;
  int inflight = 0;
};

HttpBackend::HttpBackend(BackendDescriptor descriptor) : impl_(new Impl) {
  impl_->descriptor = std::move(descriptor);
  const BackendDescriptor& d = impl_->descriptor;
  if (d.base_url.empty())
    throw TodError(ErrorKind::BadConfig, "http backend requires base_url");
  auto scheme_end = d.base_url.find("://");
  if (scheme_end == std::string::npos)
    throw TodError(ErrorKind::BadConfig, "base_url must start with http:// or https://");
  auto path_start = d.base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    impl_->host = d.base_url;
  } else {
    impl_->host = d.base_url.substr(0, path_start);
    std::string rest = d.base_url.substr(path_start);
    if (rest != "/") impl_->path = rest;
  }
  if (!d.auth_env.empty()) {
    const char* key = std::getenv(d.auth_env.c_str());
    if (key == nullptr || *key == '\0')
      throw TodError(ErrorKind::BadConfig,
                     "http backend requires the " + d.auth_env
                     + " environment variable (set it or clear auth_env)");
    impl_->bearer = key;
  }
  if (!d.journal_path.empty()) {
    impl_->journal.open(d.journal_path, std::ios::app);
    if (!impl_->journal)
      throw TodError(ErrorKind::Io, "cannot open journal for append: " + d.journal_path);
  }
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::complete(const CompletionRequest& request) {
  Impl& impl = *impl_;
  const BackendDescriptor& d = impl.descriptor;

  {
    std::unique_lock<std::mutex> lock(impl.inflight_mutex);
    impl.inflight_cv.wait(lock, [&] { return impl.inflight < d.inflight_cap; });
    ++impl.inflight;
  }
  struct Release {
    Impl& impl;
    ~Release() {
      {
        std::lock_guard<std::mutex> lock(impl.inflight_mutex);
        --impl.inflight;
      }
      impl.inflight_cv.notify_one();
    }
  } release{impl};

  json body = json::object();
  body["model"] = request.model_id.empty() ? d.model_id : request.model_id;
  body["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  std::string payload = body.dump();

  httplib::Headers headers;
  if (!impl.bearer.empty()) headers.emplace("Authorization", "Bearer " + impl.bearer);

  auto started = std::chrono::steady_clock::now();
  std::string failure;
  int attempts = 0;
  for (int attempt = 0; attempt <= d.max_retries; ++attempt) {
    attempts = attempt + 1;
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));

    httplib::Client client(impl.host);
    client.set_connection_timeout(0, d.timeout_ms * 1000LL);
    client.set_read_timeout(d.timeout_ms / 1000, (d.timeout_ms % 1000) * 1000);
    client.set_write_timeout(d.timeout_ms / 1000, (d.timeout_ms % 1000) * 1000);

    auto res = client.Post(impl.path, headers, payload, "application/json");
    if (!res) {
      failure = "transport error: " + httplib::to_string(res.error());
      continue;  // connection refused / timeout / reset are retryable
    }
    if (res->status == 429 || res->status >= 500) {
      failure = "status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw TodError(ErrorKind::HttpStatus,
                     "completion endpoint returned status " + std::to_string(res->status)
                     + ": " + res->body.substr(0, 200));

    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw TodError(ErrorKind::BackendError,
                     std::string("completion endpoint returned invalid JSON: ") + e.what());
    }
    std::string content;
    if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
      const json& choice = reply["choices"][0];
      if (choice.contains("message") && choice["message"].is_object()
          && choice["message"].contains("content") && choice["message"]["content"].is_string())
        content = choice["message"]["content"].get<std::string>();
      else if (choice.contains("text") && choice["text"].is_string())
        content = choice["text"].get<std::string>();
    }
    if (content.empty())
      throw TodError(ErrorKind::EmptyCompletion,
                     "completion endpoint returned no message content");

    if (impl.journal.is_open()) {
      auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - started)
                         .count();
      json record = json::object();
      record["stage"] = request.stage.empty() ? sniff_stage(request.prompt) : request.stage;
      record["dialogue_id"] = request.dialogue_id;
      record["attempts"] = attempts;
      record["latency_ms"] = elapsed;
      record["prompt"] = request.prompt;
      record["completion"] = content;
      std::lock_guard<std::mutex> lock(impl.journal_mutex);
      impl.journal << record.dump() << "\n";
      impl.journal.flush();
    }
    return content;
  }
  throw TodError(ErrorKind::BackendError,
                 "completion request failed after " + std::to_string(attempts)
                 + " attempts (" + failure + ")");
}

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor,
                                      const Corpus* corpus) {
  if (descriptor.kind == "http") return std::make_unique<HttpBackend>(descriptor);
  if (descriptor.kind == "scripted") {
    auto backend = std::make_unique<ScriptedBackend>();
    if (!descriptor.script_path.empty())
      *backend = ScriptedBackend::from_file(descriptor.script_path);
    return backend;
  }
  if (descriptor.kind == "oracle") {
    if (corpus == nullptr)
      throw TodError(ErrorKind::BadConfig, "oracle backend requires a gold corpus");
    return std::make_unique<OracleBackend>(corpus);
  }
  throw TodError(ErrorKind::BadConfig, "unknown backend kind: " + descriptor.kind);
}

}  // namespace tod
