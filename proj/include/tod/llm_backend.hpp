#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "tod/corpus.hpp"
#include "tod/error.hpp"

namespace tod {

struct CompletionRequest {
  std::string prompt;
  int max_tokens = 256;
  double temperature = 0.0;
  std::string model_id;
  std::string dialogue_id;  // oracle scoping + journaling
  std::string stage;        // "intent" | "slot" | "response" (journaling + oracle)
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string complete(const CompletionRequest& request) = 0;

  // A per-dialogue session view; nullptr means the backend is stateless and
  // the shared instance can be used directly.
  virtual std::unique_ptr<Backend> for_dialogue(const std::string& dialogue_id) {
    (void)dialogue_id;
    return nullptr;
  }

  virtual std::string kind() const = 0;
};

struct BackendDescriptor {
  std::string kind = "oracle";  // http | scripted | oracle
  std::string base_url;
  std::string auth_env = "TOD_API_KEY";
  std::string model_id = "dimf";
  std::string script_path;
  int max_retries = 3;
  int timeout_ms = 30000;
  int inflight_cap = 8;
  std::string journal_path;

  json to_json() const;
  static BackendDescriptor from_json(const json& obj);
};

class ScriptedBackend : public Backend {
 public:
  ScriptedBackend() = default;
  static ScriptedBackend from_file(const std::string& path);

  // First rule whose `contains` is a substring of the prompt wins; an empty
  // predicate matches everything.
  void add_rule(std::string contains, std::string response);

  std::string complete(const CompletionRequest& request) override;
  std::string kind() const override { return "scripted"; }

 private:
  std::vector<std::pair<std::string, std::string>> rules_;
};

// Answers each pipeline stage with the gold annotation from the corpus,
// giving a framework-only upper-bound run.
class OracleBackend : public Backend {
 public:
  explicit OracleBackend(const Corpus* corpus) : corpus_(corpus) {}

  std::string complete(const CompletionRequest& request) override;
  std::unique_ptr<Backend> for_dialogue(const std::string& dialogue_id) override;
  std::string kind() const override { return "oracle"; }

 private:
  friend class OracleSession;
  const Corpus* corpus_;
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<Backend>> sessions_;
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendDescriptor descriptor);
  ~HttpBackend() override;

  std::string complete(const CompletionRequest& request) override;
  std::string kind() const override { return "http"; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor,
                                      const Corpus* corpus = nullptr);

// Infers the pipeline stage from a rendered prompt's opening line.
std::string sniff_stage(const std::string& prompt);

}  // namespace tod
