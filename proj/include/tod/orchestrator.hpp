#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tod/corpus.hpp"
#include "tod/db_engine.hpp"
#include "tod/dialogue_state.hpp"
#include "tod/intent_agent.hpp"
#include "tod/llm_backend.hpp"
#include "tod/response_agent.hpp"
#include "tod/slot_agent.hpp"

namespace tod {

struct StageTrace {
  std::string prompt;
  std::string completion;
  bool ran = false;
};

struct TurnTrace {
  int turn_index = 0;
  std::string question;
  bool skipped = false;  // dialogue already closed; emitted to keep alignment

  StageTrace intent;
  std::string action;     // parsed tool name
  std::string last_tool;  // conditioning value used for the intent prompt

  StageTrace slot;
  SlotMap merged_slots;
  std::vector<std::string> information;

  json observation;  // Observation::to_json(); null when the stage did not run
  int option_count = 0;

  StageTrace response;
  std::string final_response;

  std::vector<std::string> warnings;
  std::string error_stage;    // empty when the turn completed
  std::string error_message;

  json to_json() const;
  static TurnTrace from_json(const json& obj);
};

struct Transcript {
  std::string dialogue_id;
  std::vector<TurnTrace> turns;

  std::vector<std::string> responses() const;
  json to_json() const;
  static Transcript from_json(const json& obj);
};

using Predictions = std::map<std::string, std::vector<std::string>>;

struct RunResult {
  Predictions predictions;
  std::vector<Transcript> transcripts;
  std::vector<std::pair<std::string, std::string>> failures;  // dialogue_id, message
};

struct EngineOptions {
  bool use_gold_last_intent = false;  // condition Last Tool on gold annotations
  int history_window = 3;             // prior user/system exchanges shown to the responder
  int max_words = 25;
  int max_tokens = 256;
  double temperature = 0.0;
};

class Engine {
 public:
  Engine(const SchemaSet* schemas, const DatabaseSet* dbs, const PromptTemplates* templates,
         EngineOptions options = {});

  TurnTrace run_turn(DialogueState& state, const std::string& question, Backend& backend) const;

  Transcript run_dialogue(const CorpusDialogue& dialogue, Backend& backend) const;

  RunResult run_corpus(const Corpus& corpus, Backend& backend, int parallelism = 1) const;

  const EngineOptions& options() const { return options_; }

 private:
  Observation query_domain(const std::string& domain, const SlotMap& constraints) const;

  const SchemaSet* schemas_;
  const DatabaseSet* dbs_;
  IntentAgent intent_agent_;
  SlotAgent slot_agent_;
  ResponseAgent response_agent_;
  EngineOptions options_;
};

}  // namespace tod
