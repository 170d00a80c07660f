#include "tod/corpus.hpp"

#include <algorithm>

#include "tod/util.hpp"

namespace tod {

const Frame* CorpusTurn::active_frame() const {
  for (const auto& frame : frames) {
    if (frame.active_intent != "NONE" && !frame.active_intent.empty()) return &frame;
  }
  return nullptr;
}

std::vector<size_t> CorpusDialogue::user_turn_indices() const {
  std::vector<size_t> out;
  for (size_t i = 0; i < turns.size(); ++i) {
    if (turns[i].speaker == "USER") out.push_back(i);
  }
  return out;
}

namespace {

SlotMap normalized_state(const json& slot_values, const std::string& service,
                         const SchemaSet& schemas) {
  SlotMap raw = SlotMap::from_json(slot_values, service);
  SlotMap out;
  const bool known = schemas.has(service);
  for (const auto& [name, values] : raw) {
    std::vector<std::string> normalized;
    for (const auto& v : values) normalized.push_back(schemas.normalize(v));
    if (known) {
      const SlotSpec* spec = schemas.at(service).find_informable(name);
      if (spec != nullptr) {
        out.set(spec->name, std::move(normalized));
        continue;
      }
    }
    out.set(name, std::move(normalized));
  }
  return out;
}

std::vector<std::string> short_requested(const json& requested, const std::string& service) {
  std::vector<std::string> out;
  for (const auto& item : requested) {
    if (!item.is_string()) continue;
    std::string name = item.get<std::string>();
    if (util::starts_with(name, service + "-")) name = short_slot(name);
    out.push_back(util::lower(name));
  }
  return out;
}

void derive_goal(CorpusDialogue& dialogue) {
  std::map<std::string, GoalDomain> goal;
  for (const auto& turn : dialogue.turns) {
    if (turn.speaker != "USER") continue;
    for (const auto& frame : turn.frames) {
      GoalDomain& g = goal[frame.service];
      if (!frame.slot_values.empty()) g.informable = frame.slot_values;
      for (const auto& attr : frame.requested) {
        if (std::find(g.requestable.begin(), g.requestable.end(), attr) ==
            g.requestable.end()) {
          g.requestable.push_back(attr);
        }
      }
      if (util::starts_with(frame.active_intent, "book_")) g.book = true;
    }
  }
  for (auto it = goal.begin(); it != goal.end();) {
    if (it->second.informable.empty() && it->second.requestable.empty() &&
        !it->second.book) {
      it = goal.erase(it);
    } else {
      ++it;
    }
  }
  dialogue.goal = std::move(goal);
}

}  // namespace

Corpus Corpus::load(const std::string& path, const SchemaSet& schemas) {
  json root;
  try {
    root = json::parse(util::read_file(path));
  } catch (const json::exception& e) {
    throw TodError(ErrorKind::MalformedRecord, path + ": " + e.what());
  }
  if (!root.is_array()) {
    throw TodError(ErrorKind::MalformedRecord, path + ": expected an array of dialogues");
  }
  Corpus corpus;
  for (const auto& d : root) {
    CorpusDialogue dialogue;
    dialogue.id = d.value("dialogue_id", "");
    if (dialogue.id.empty()) {
      throw TodError(ErrorKind::MalformedRecord, path + ": dialogue without dialogue_id");
    }
    for (const auto& s : d.value("services", json::array())) {
      dialogue.services.push_back(s.get<std::string>());
    }
    for (const auto& t : d.value("turns", json::array())) {
      CorpusTurn turn;
      turn.speaker = t.value("speaker", "");
      turn.utterance = t.value("utterance", "");
      turn.delex = t.value("delex", "");
      for (const auto& f : t.value("frames", json::array())) {
        Frame frame;
        frame.service = f.value("service", "");
        const json& state = f.contains("state") ? f.at("state") : json::object();
        frame.active_intent = state.value("active_intent", "NONE");
        frame.requested =
            short_requested(state.value("requested_slots", json::array()), frame.service);
        frame.slot_values =
            normalized_state(state.value("slot_values", json::object()), frame.service,
                             schemas);
        turn.frames.push_back(std::move(frame));
      }
      dialogue.turns.push_back(std::move(turn));
    }
    if (d.contains("goal") && d.at("goal").is_object()) {
      for (const auto& [service, g] : d.at("goal").items()) {
        GoalDomain goal;
        goal.informable =
            normalized_state(g.value("informable", json::object()), service, schemas);
        goal.requestable =
            short_requested(g.value("requestable", json::array()), service);
        goal.book = g.value("book", false);
        dialogue.goal[service] = std::move(goal);
      }
    } else {
      derive_goal(dialogue);
    }
    corpus.dialogues.push_back(std::move(dialogue));
  }
  return corpus;
}

const CorpusDialogue* Corpus::find(const std::string& dialogue_id) const {
  for (const auto& d : dialogues) {
    if (d.id == dialogue_id) return &d;
  }
  return nullptr;
}

}  // namespace tod
