#include "tod/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "tod/evaluation.hpp"
#include "tod/intent_agent.hpp"
#include "tod/response_agent.hpp"
#include "tod/slot_agent.hpp"
#include "tod/util.hpp"

namespace tod {

namespace {

std::string first_labeled_line(const std::string& text, const std::string& label) {
  for (const auto& line : util::split(text, '\n')) {
    std::string t = util::trim(line);
    if (util::starts_with(t, label)) return util::trim(t.substr(label.size()));
  }
  return "";
}

std::string gold_tool_of(const CorpusTurn& turn) {
  const Frame* frame = turn.active_frame();
  if (frame == nullptr || frame->active_intent == "NONE") return "other";
  return frame->active_intent;
}

std::string gold_reference(const CorpusDialogue& dialogue, size_t user_turn_index) {
  size_t next = user_turn_index + 1;
  if (next >= dialogue.turns.size() || dialogue.turns[next].speaker != "SYSTEM") return "";
  const CorpusTurn& turn = dialogue.turns[next];
  return turn.delex.empty() ? turn.utterance : turn.delex;
}

// Order- and duplication-insensitive comparison of slot maps and value lists.
bool same_slot_state(const SlotMap& a, const SlotMap& b) {
  auto canon = [](const SlotMap& m) {
    std::map<std::string, std::set<std::string>> out;
    for (const auto& [name, values] : m.entries())
      out[name] = std::set<std::string>(values.begin(), values.end());
    return out;
  };
  return canon(a) == canon(b);
}

bool same_information(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return std::set<std::string>(a.begin(), a.end())
         == std::set<std::string>(b.begin(), b.end());
}

std::vector<Turn> gold_history(const CorpusDialogue& dialogue, size_t user_turn_index,
                               int window_pairs) {
  std::vector<Turn> history;
  for (size_t t = 0; t < user_turn_index; ++t) {
    const CorpusTurn& turn = dialogue.turns[t];
    if (turn.speaker == "USER") {
      history.push_back({"user", turn.utterance, ""});
    } else {
      std::string text = turn.delex.empty() ? turn.utterance : turn.delex;
      history.push_back({"system", text, text});
    }
  }
  size_t window = static_cast<size_t>(window_pairs) * 2;
  if (history.size() > window)
    history.erase(history.begin(), history.end() - static_cast<long>(window));
  return history;
}

}  // namespace

json SftExample::to_json() const {
  json obj = json::object();
  obj["prompt"] = prompt;
  obj["completion"] = target;
  obj["domain"] = domain;
  obj["agent"] = agent_kind;
  return obj;
}

SftExample SftExample::from_json(const json& obj) {
  for (const char* key : {"prompt", "completion", "domain", "agent"})
    if (!obj.contains(key) || !obj[key].is_string())
      throw TodError(ErrorKind::MalformedRecord,
                     std::string("sft record needs string \"") + key + "\"");
  return {obj["agent"].get<std::string>(), obj["domain"].get<std::string>(),
          obj["prompt"].get<std::string>(), obj["completion"].get<std::string>()};
}

json PreferencePair::to_json() const {
  json obj = json::object();
  obj["prompt"] = prompt;
  obj["chosen"] = chosen;
  obj["rejected"] = rejected;
  obj["domain"] = domain;
  obj["agent"] = agent_kind;
  obj["provenance"] = provenance;
  return obj;
}

PreferencePair PreferencePair::from_json(const json& obj) {
  for (const char* key : {"prompt", "chosen", "rejected", "domain", "agent", "provenance"})
    if (!obj.contains(key) || !obj[key].is_string())
      throw TodError(ErrorKind::MalformedRecord,
                     std::string("preference record needs string \"") + key + "\"");
  PreferencePair pair;
  pair.agent_kind = obj["agent"].get<std::string>();
  pair.domain = obj["domain"].get<std::string>();
  pair.prompt = obj["prompt"].get<std::string>();
  pair.chosen = obj["chosen"].get<std::string>();
  pair.rejected = obj["rejected"].get<std::string>();
  pair.provenance = obj["provenance"].get<std::string>();
  return pair;
}

DomainDistribution DomainDistribution::from_counts(std::map<std::string, long long> counts) {
  DomainDistribution dist;
  long long total = 0;
  for (const auto& [_, c] : counts) total += c;
  dist.counts = std::move(counts);
  if (total > 0)
    for (const auto& [name, c] : dist.counts)
      dist.weights[name] = static_cast<double>(c) / static_cast<double>(total);
  return dist;
}

std::map<std::string, long long> apportion(long long total,
                                           const std::map<std::string, double>& weights) {
  std::map<std::string, long long> out;
  if (weights.empty() || total <= 0) {
    for (const auto& [name, _] : weights) out[name] = 0;
    return out;
  }
  long long assigned = 0;
  std::vector<std::pair<double, std::string>> remainders;
  for (const auto& [name, w] : weights) {
    double quota = static_cast<double>(total) * w;
    long long floor_part = static_cast<long long>(std::floor(quota + 1e-9));
    out[name] = floor_part;
    assigned += floor_part;
    remainders.emplace_back(quota - static_cast<double>(floor_part), name);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (long long i = 0; i < total - assigned && i < static_cast<long long>(remainders.size());
       ++i)
    ++out[remainders[static_cast<size_t>(i)].second];
  return out;
}

double tv_distance(const std::map<std::string, double>& p,
                   const std::map<std::string, double>& q) {
  std::set<std::string> keys;
  for (const auto& [k, _] : p) keys.insert(k);
  for (const auto& [k, _] : q) keys.insert(k);
  double sum = 0.0;
  for (const auto& k : keys) {
    double pv = p.count(k) ? p.at(k) : 0.0;
    double qv = q.count(k) ? q.at(k) : 0.0;
    sum += std::fabs(pv - qv);
  }
  return sum / 2.0;
}

DataGenerator::DataGenerator(const SchemaSet* schemas, const DatabaseSet* dbs,
                             const PromptTemplates* templates, EngineOptions options)
    : schemas_(schemas), dbs_(dbs), templates_(templates), options_(options) {}

void DataGenerator::build_context_pool(const Corpus& corpus) {
  std::map<std::string, std::set<std::string>> seen;
  for (const auto& dialogue : corpus.dialogues)
    for (const auto& turn : dialogue.turns)
      for (const auto& frame : turn.frames)
        for (const auto& [slot, values] : frame.slot_values.entries())
          for (const auto& v : values)
            if (v != "dontcare") seen[slot].insert(v);
  context_pool_.clear();
  for (auto& [slot, values] : seen)
    context_pool_[slot] = std::vector<std::string>(values.begin(), values.end());
}

std::vector<SftExample> DataGenerator::build_sft(const Corpus& corpus) const {
  IntentAgent intent_agent(schemas_, templates_);
  SlotAgent slot_agent(schemas_, templates_);
  ResponseAgent response_agent(templates_);

  std::vector<SftExample> out;
  for (const auto& dialogue : corpus.dialogues) {
    auto user_turns = dialogue.user_turn_indices();
    std::map<std::string, SlotMap> gold_state;
    for (size_t i = 0; i < user_turns.size(); ++i) {
      const CorpusTurn& turn = dialogue.turns[user_turns[i]];
      if (turn.frames.empty())
        throw TodError(ErrorKind::MissingGoldState,
                       dialogue.id + ": user turn " + std::to_string(i)
                       + " has no gold annotation");
      const std::string& question = turn.utterance;
      std::string last_tool =
          i == 0 ? "none" : gold_tool_of(dialogue.turns[user_turns[i - 1]]);
      std::string tool = gold_tool_of(turn);
      const Frame* frame = turn.active_frame();
      std::string domain = frame == nullptr ? "other" : frame->service;

      SftExample intent_example;
      intent_example.agent_kind = "intent";
      intent_example.domain = domain;
      intent_example.prompt = intent_agent.build_prompt({question, last_tool});
      intent_example.target = IntentAgent::format_completion(last_tool, question, tool);
      out.push_back(std::move(intent_example));

      if (frame == nullptr) continue;  // closing turn: constant response, no slots

      auto history_it = gold_state.find(domain);
      const SlotMap* history =
          history_it == gold_state.end() ? nullptr : &history_it->second;
      SftExample slot_example;
      slot_example.agent_kind = "slot";
      slot_example.domain = domain;
      slot_example.prompt = slot_agent.build_prompt({question, domain, history});
      slot_example.target = SlotAgent::format_completion(question, domain, frame->slot_values,
                                                         frame->requested);
      out.push_back(std::move(slot_example));
      gold_state[domain] = frame->slot_values;

      std::string target = gold_reference(dialogue, user_turns[i]);
      if (target.empty())
        throw TodError(ErrorKind::MissingGoldState,
                       dialogue.id + ": user turn " + std::to_string(i)
                       + " has no gold system response");
      Observation obs = query_and_observe(*dbs_, domain, frame->slot_values);
      ResponsePromptInputs inputs;
      inputs.question = question;
      inputs.observation = &obs;
      inputs.history = gold_history(dialogue, user_turns[i], options_.history_window);
      inputs.max_words = options_.max_words;
      SftExample response_example;
      response_example.agent_kind = "response";
      response_example.domain = domain;
      response_example.prompt = response_agent.build_prompt(inputs);
      response_example.target = target;
      out.push_back(std::move(response_example));
    }
  }
  return out;
}

std::vector<PreferencePair> DataGenerator::collect_bad_cases(
    const std::vector<Transcript>& runs, const Corpus& corpus, const std::string& agent_kind,
    double bleu_threshold) const {
  if (bleu_threshold < 0.0 || bleu_threshold > 1.0)
    throw TodError(ErrorKind::ThresholdOutOfRange,
                   "sentence-BLEU threshold must lie in [0, 1], got "
                   + std::to_string(bleu_threshold));
  bool want_intent = agent_kind == "intent" || agent_kind == "all";
  bool want_slot = agent_kind == "slot" || agent_kind == "all";
  bool want_response = agent_kind == "response" || agent_kind == "all";
  if (!want_intent && !want_slot && !want_response)
    throw TodError(ErrorKind::BadConfig, "unknown agent kind: " + agent_kind);

  std::vector<PreferencePair> out;
  auto emit = [&out](PreferencePair pair) {
    if (pair.chosen.empty() || pair.rejected.empty() || pair.chosen == pair.rejected) return;
    pair.provenance = "observed_bad_case";
    out.push_back(std::move(pair));
  };

  for (const auto& transcript : runs) {
    const CorpusDialogue* dialogue = corpus.find(transcript.dialogue_id);
    if (dialogue == nullptr)
      throw TodError(ErrorKind::MissingGoldState,
                     "no gold dialogue for transcript " + transcript.dialogue_id);
    auto user_turns = dialogue->user_turn_indices();
    size_t turns = std::min(transcript.turns.size(), user_turns.size());
    for (size_t i = 0; i < turns; ++i) {
      const TurnTrace& trace = transcript.turns[i];
      if (trace.skipped) continue;
      const CorpusTurn& gold_turn = dialogue->turns[user_turns[i]];
      std::string tool = gold_tool_of(gold_turn);
      const Frame* frame = gold_turn.active_frame();
      std::string domain = frame == nullptr ? "other" : frame->service;

      if (want_intent && trace.intent.ran && trace.action != tool) {
        PreferencePair pair;
        pair.agent_kind = "intent";
        pair.domain = domain;
        pair.prompt = trace.intent.prompt;
        pair.chosen = IntentAgent::format_completion(trace.last_tool, trace.question, tool);
        pair.rejected = trace.intent.completion;
        emit(std::move(pair));
      }

      if (want_slot && trace.slot.ran && frame != nullptr && trace.action == tool) {
        bool params_ok = same_slot_state(trace.merged_slots, frame->slot_values);
        bool info_ok = same_information(trace.information, frame->requested);
        if (!params_ok || !info_ok) {
          PreferencePair pair;
          pair.agent_kind = "slot";
          pair.domain = domain;
          pair.prompt = trace.slot.prompt;
          pair.chosen = SlotAgent::format_completion(trace.question, frame->service,
                                                     frame->slot_values, frame->requested);
          pair.rejected = trace.slot.completion;
          emit(std::move(pair));
        }
      }

      if (want_response && trace.response.ran) {
        std::string reference = gold_reference(*dialogue, user_turns[i]);
        if (!reference.empty()) {
          const std::string& predicted =
              trace.final_response.empty() ? trace.response.completion : trace.final_response;
          double bleu = sentence_bleu(predicted, reference) / 100.0;
          if (bleu < bleu_threshold) {
            PreferencePair pair;
            pair.agent_kind = "response";
            pair.domain = domain;
            pair.prompt = trace.response.prompt;
            pair.chosen = reference;
            pair.rejected = trace.response.completion;
            emit(std::move(pair));
          }
        }
      }
    }
  }
  return out;
}

PreferencePair DataGenerator::synthesize_negative(const SftExample& example,
                                                  std::mt19937_64& rng) const {
  PreferencePair pair;
  pair.agent_kind = example.agent_kind;
  pair.domain = example.domain;
  pair.prompt = example.prompt;
  pair.chosen = example.target;
  pair.provenance = "synthesized";

  if (example.agent_kind == "intent") {
    auto parsed = IntentAgent::parse_completion(example.target);
    if (!parsed.ok())
      throw TodError(ErrorKind::NoCorruptionPossible,
                     "intent target does not parse: " + parsed.error().detail());
    const IntentCompletion& gold = parsed.value();
    std::vector<std::string> others;
    for (const auto& [name, _] : tool_catalog())
      if (name != gold.action) others.push_back(name);
    if (others.empty())
      throw TodError(ErrorKind::NoCorruptionPossible, "tool catalog has a single entry");
    const std::string& wrong = others[rng() % others.size()];
    pair.rejected =
        IntentAgent::format_completion(gold.last_tool, gold.question_echo, wrong);
  } else if (example.agent_kind == "slot") {
    SlotAgent slot_agent(schemas_, templates_);
    auto parsed = slot_agent.parse_completion(example.target, example.domain);
    if (!parsed.ok())
      throw TodError(ErrorKind::NoCorruptionPossible,
                     "slot target does not parse: " + parsed.error().detail());
    SlotMap params = parsed.value().parameters;
    if (params.empty())
      throw TodError(ErrorKind::NoCorruptionPossible, "empty slot map");

    auto entries = params.entries();
    auto swap_candidates = [&](const std::string& slot,
                               const std::vector<std::string>& current) {
      std::set<std::string> taken(current.begin(), current.end());
      std::vector<std::string> candidates;
      auto pool_it = context_pool_.find(slot);
      if (pool_it != context_pool_.end())
        for (const auto& v : pool_it->second)
          if (!taken.count(v)) candidates.push_back(v);
      const SlotSpec* spec = schemas_->at(example.domain).find_informable(slot);
      if (spec != nullptr)
        for (const auto& v : spec->values)
          if (!taken.count(v) && std::find(candidates.begin(), candidates.end(), v)
                                     == candidates.end())
            candidates.push_back(v);
      return candidates;
    };

    auto try_swap = [&]() {
      size_t start = rng() % entries.size();
      for (size_t step = 0; step < entries.size(); ++step) {
        size_t idx = (start + step) % entries.size();
        auto candidates = swap_candidates(entries[idx].first, entries[idx].second);
        if (candidates.empty()) continue;
        std::vector<std::string> values = entries[idx].second;
        values[rng() % values.size()] = candidates[rng() % candidates.size()];
        params.set(entries[idx].first, values);
        return true;
      }
      return false;
    };
    auto try_remove = [&]() {
      std::vector<size_t> multi;
      for (size_t idx = 0; idx < entries.size(); ++idx)
        if (entries[idx].second.size() >= 2) multi.push_back(idx);
      if (multi.empty()) return false;
      size_t idx = multi[rng() % multi.size()];
      std::vector<std::string> values = entries[idx].second;
      values.erase(values.begin() + static_cast<long>(rng() % values.size()));
      params.set(entries[idx].first, values);
      return true;
    };

    bool corrupted = (rng() & 1) == 0 ? (try_swap() || try_remove())
                                      : (try_remove() || try_swap());
    if (!corrupted)
      throw TodError(ErrorKind::NoCorruptionPossible,
                     "no swap candidate and no multi-value slot");
    std::string question = first_labeled_line(example.target, "Question:");
    pair.rejected = SlotAgent::format_completion(question, example.domain, params,
                                                 parsed.value().information);
  } else if (example.agent_kind == "response") {
    std::string count_text = first_labeled_line(example.prompt, "option number:");
    int option_count = -1;
    if (!count_text.empty()) {
      try {
        option_count = std::stoi(count_text);
      } catch (const std::exception&) {
        option_count = -1;
      }
    }
    std::string rejected;
    if (option_count >= 0) {
      // Wrong option count: misstate the number the observation reported.
      std::string needle = std::to_string(option_count);
      const std::string& text = example.target;
      for (size_t at = text.find(needle); at != std::string::npos;
           at = text.find(needle, at + 1)) {
        bool left_ok = at == 0 || !std::isdigit(static_cast<unsigned char>(text[at - 1]));
        size_t end = at + needle.size();
        bool right_ok = end >= text.size()
                        || !std::isdigit(static_cast<unsigned char>(text[end]));
        if (left_ok && right_ok) {
          rejected = text.substr(0, at) + std::to_string(option_count + 3)
                     + text.substr(end);
          break;
        }
      }
    }
    if (rejected.empty()) {
      // Dropped question: cut the trailing clarification sentence.
      size_t qmark = example.target.rfind('?');
      if (qmark != std::string::npos) {
        size_t start = example.target.find_last_of(".!?", qmark == 0 ? 0 : qmark - 1);
        std::string head =
            start == std::string::npos ? "" : example.target.substr(0, start + 1);
        head = util::trim(head);
        if (!head.empty() && head != example.target) rejected = head;
      }
    }
    if (rejected.empty())
      rejected = "I found " + std::to_string(option_count >= 0 ? option_count + 3 : 0)
                 + " options for you.";
    if (rejected == pair.chosen) rejected += " Is there anything else?";
    pair.rejected = std::move(rejected);
  } else {
    throw TodError(ErrorKind::BadConfig, "unknown agent kind: " + example.agent_kind);
  }

  if (pair.rejected.empty() || pair.rejected == pair.chosen)
    throw TodError(ErrorKind::NoCorruptionPossible,
                   "corruption produced no usable rejected completion");
  return pair;
}

std::string category_of(const std::string& domain, const std::string& completion,
                        const std::string& key) {
  if (key != "slot") return domain;
  std::string params = first_labeled_line(completion, "Parameters:");
  if (!params.empty()) {
    json obj = json::parse(params, nullptr, false);
    if (obj.is_object() && !obj.empty()) return short_slot(obj.begin().key());
  }
  return domain;
}

std::vector<PreferencePair> DataGenerator::adapt_distribution(
    const std::vector<PreferencePair>& observed, const DomainDistribution& sft_dist,
    const std::vector<SftExample>& sft_pool, uint64_t seed, const std::string& key) const {
  std::map<std::string, long long> observed_counts;
  for (const auto& pair : observed) ++observed_counts[category_of(pair.domain, pair.chosen, key)];
  for (const auto& [domain, count] : observed_counts) {
    auto it = sft_dist.weights.find(domain);
    if (count > 0 && (it == sft_dist.weights.end() || it->second <= 0.0))
      throw TodError(ErrorKind::BadConfig,
                     "observed pairs in category \"" + domain
                     + "\" which has zero weight in the SFT distribution");
  }

  // Smallest total whose ideal (real-valued) share covers every observed
  // count; apportionment can then only round each share down by less than 1,
  // so the verification loop below normally exits on its first pass.
  long long n = static_cast<long long>(observed.size());
  for (const auto& [domain, count] : observed_counts) {
    double weight = sft_dist.weights.at(domain);
    n = std::max(n, static_cast<long long>(
                        std::ceil(static_cast<double>(count) / weight - 1e-9)));
  }
  std::map<std::string, long long> targets;
  for (;; ++n) {
    targets = apportion(n, sft_dist.weights);
    bool covers = true;
    for (const auto& [domain, count] : observed_counts)
      if (targets[domain] < count) covers = false;
    if (covers) break;
  }

  std::vector<PreferencePair> out = observed;
  for (const auto& [domain, target] : targets) {
    long long observed_here =
        observed_counts.count(domain) ? observed_counts.at(domain) : 0;
    long long need = target - observed_here;
    if (need <= 0) continue;

    std::vector<size_t> pool_indices;
    for (size_t i = 0; i < sft_pool.size(); ++i)
      if (category_of(sft_pool[i].domain, sft_pool[i].target, key) == domain)
        pool_indices.push_back(i);

    std::mt19937_64 rng(seed ^ util::fnv1a(domain));
    for (size_t i = pool_indices.size(); i > 1; --i)
      std::swap(pool_indices[i - 1], pool_indices[rng() % i]);

    long long made = 0;
    for (size_t idx : pool_indices) {
      if (made == need) break;
      try {
        out.push_back(synthesize_negative(sft_pool[idx], rng));
        ++made;
      } catch (const TodError& e) {
        if (e.kind() != ErrorKind::NoCorruptionPossible) throw;
      }
    }
    if (made < need)
      throw TodError(ErrorKind::InsufficientPool,
                     "domain \"" + domain + "\" needs " + std::to_string(need)
                     + " synthesized pairs but the pool yielded "
                     + std::to_string(made));
  }
  return out;
}

json distribution_report(const std::vector<PreferencePair>& pairs,
                         const DomainDistribution& sft_dist, const std::string& key) {
  std::map<std::string, long long> counts;
  for (const auto& pair : pairs) ++counts[category_of(pair.domain, pair.chosen, key)];
  DomainDistribution observed = DomainDistribution::from_counts(counts);

  json report = json::object();
  report["total"] = pairs.size();
  json observed_obj = json::object();
  for (const auto& [domain, count] : observed.counts) {
    observed_obj[domain] = json{{"count", count},
                                {"weight", observed.weights.count(domain)
                                               ? observed.weights.at(domain)
                                               : 0.0}};
  }
  report["observed"] = observed_obj;
  json target_obj = json::object();
  for (const auto& [domain, weight] : sft_dist.weights) target_obj[domain] = weight;
  report["target"] = target_obj;
  report["tv_distance"] =
      pairs.empty() ? 0.0 : tv_distance(observed.weights, sft_dist.weights);
  return report;
}

std::vector<SftExample> filter_domain(const std::vector<SftExample>& examples,
                                      const std::string& removed) {
  std::vector<SftExample> out;
  for (const auto& e : examples)
    if (e.domain != removed) out.push_back(e);
  return out;
}

std::vector<PreferencePair> filter_domain(const std::vector<PreferencePair>& pairs,
                                          const std::string& removed) {
  std::vector<PreferencePair> out;
  for (const auto& p : pairs)
    if (p.domain != removed) out.push_back(p);
  return out;
}

void write_sft_jsonl(const std::string& path, const std::vector<SftExample>& examples) {
  std::string content;
  for (const auto& e : examples) content += e.to_json().dump() + "\n";
  util::write_file(path, content);
}

void write_dpo_jsonl(const std::string& path, const std::vector<PreferencePair>& pairs) {
  std::string content;
  for (const auto& p : pairs) content += p.to_json().dump() + "\n";
  util::write_file(path, content);
}

namespace {

std::vector<json> read_jsonl(const std::string& path) {
  std::vector<json> out;
  size_t line_no = 0;
  for (const auto& line : util::split(util::read_file(path), '\n')) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw TodError(ErrorKind::MalformedRecord,
                     path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<SftExample> read_sft_jsonl(const std::string& path) {
  std::vector<SftExample> out;
  for (const auto& obj : read_jsonl(path)) out.push_back(SftExample::from_json(obj));
  return out;
}

std::vector<PreferencePair> read_dpo_jsonl(const std::string& path) {
  std::vector<PreferencePair> out;
  for (const auto& obj : read_jsonl(path)) out.push_back(PreferencePair::from_json(obj));
  return out;
}

}  // namespace tod
