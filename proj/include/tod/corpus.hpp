#pragma once

#include <map>
#include <string>
#include <vector>

#include "tod/schema.hpp"
#include "tod/slot_map.hpp"

namespace tod {

struct Frame {
  std::string service;
  std::string active_intent;  // "find_x" / "book_x" / "NONE"
  std::vector<std::string> requested;  // short attribute names
  SlotMap slot_values;                 // qualified names, normalized values
};

struct CorpusTurn {
  std::string speaker;  // "USER" | "SYSTEM"
  std::string utterance;
  std::string delex;  // system turns; empty when not annotated
  std::vector<Frame> frames;

  // First frame whose active_intent is not NONE; nullptr otherwise.
  const Frame* active_frame() const;
};

struct GoalDomain {
  SlotMap informable;
  std::vector<std::string> requestable;
  bool book = false;
};

struct CorpusDialogue {
  std::string id;
  std::vector<std::string> services;
  std::map<std::string, GoalDomain> goal;
  std::vector<CorpusTurn> turns;

  std::vector<size_t> user_turn_indices() const;
  size_t user_turn_count() const { return user_turn_indices().size(); }
};

struct Corpus {
  std::vector<CorpusDialogue> dialogues;

  static Corpus load(const std::string& path, const SchemaSet& schemas);
  const CorpusDialogue* find(const std::string& dialogue_id) const;
};

}  // namespace tod
