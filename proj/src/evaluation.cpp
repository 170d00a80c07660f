#include "tod/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "tod/response_agent.hpp"
#include "tod/util.hpp"

namespace tod {

namespace {
constexpr double kBleuEps = 1e-12;
}

// ---------------------------------------------------------------------------
// PlaceholderMap

PlaceholderMap PlaceholderMap::load(const std::string& data_path) {
  PlaceholderMap map;
  json doc;
  try {
    doc = json::parse(util::read_file(data_path + "/placeholders.json"));
  } catch (const json::parse_error& e) {
    throw TodError(ErrorKind::MalformedRecord, std::string("placeholders.json: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("placeholders") || !doc.contains("offer_attributes"))
    throw TodError(ErrorKind::MalformedRecord,
                   "placeholders.json needs \"placeholders\" and \"offer_attributes\"");
  for (const auto& [token, info] : doc["placeholders"].items()) {
    if (!info.is_object() || !info.contains("domain") || !info.contains("attribute"))
      throw TodError(ErrorKind::MalformedRecord, "placeholder " + token + " is malformed");
    map.tokens_[token] = {info["domain"].get<std::string>(),
                          info["attribute"].get<std::string>()};
  }
  for (const auto& [domain, attrs] : doc["offer_attributes"].items()) {
    std::vector<std::string> names;
    for (const auto& a : attrs) names.push_back(a.get<std::string>());
    map.offers_[domain] = std::move(names);
  }
  return map;
}

const PlaceholderMap& PlaceholderMap::bundled() {
  static PlaceholderMap map = PlaceholderMap::load(util::data_dir());
  return map;
}

const PlaceholderInfo* PlaceholderMap::find(const std::string& token) const {
  auto it = tokens_.find(token);
  return it == tokens_.end() ? nullptr : &it->second;
}

const std::vector<std::string>& PlaceholderMap::offer_attributes(
    const std::string& domain) const {
  auto it = offers_.find(domain);
  return it == offers_.end() ? empty_ : it->second;
}

// ---------------------------------------------------------------------------
// Tokenizer and n-gram metrics

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char raw : text) {
    char c = raw;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    bool word = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (word) {
      current.push_back(c);
      continue;
    }
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') tokens.push_back(std::string(1, c));
  }
  if (!current.empty()) tokens.push_back(current);
  return tokens;
}

namespace {

std::string join_gram(const std::vector<std::string>& tokens, size_t start, size_t n) {
  std::string key;
  for (size_t i = 0; i < n; ++i) {
    if (i > 0) key.push_back('\x1f');
    key += tokens[start + i];
  }
  return key;
}

}  // namespace

double corpus_bleu(const std::vector<std::string>& hypotheses,
                   const std::vector<std::string>& references) {
  if (hypotheses.size() != references.size())
    throw TodError(ErrorKind::AlignmentMismatch,
                   "BLEU needs one reference per hypothesis (got "
                   + std::to_string(hypotheses.size()) + " vs "
                   + std::to_string(references.size()) + ")");
  if (hypotheses.empty())
    throw TodError(ErrorKind::EmptyCorpus, "BLEU over an empty corpus is undefined");

  long long hyp_len = 0;
  long long ref_len = 0;
  long long matches[4] = {0, 0, 0, 0};
  long long totals[4] = {0, 0, 0, 0};

  for (size_t i = 0; i < hypotheses.size(); ++i) {
    auto hyp = tokenize(hypotheses[i]);
    auto ref = tokenize(references[i]);
    hyp_len += static_cast<long long>(hyp.size());
    ref_len += static_cast<long long>(ref.size());
    for (size_t n = 1; n <= 4; ++n) {
      if (hyp.size() < n) continue;
      std::map<std::string, long long> ref_counts;
      if (ref.size() >= n)
        for (size_t s = 0; s + n <= ref.size(); ++s) ++ref_counts[join_gram(ref, s, n)];
      std::map<std::string, long long> hyp_counts;
      for (size_t s = 0; s + n <= hyp.size(); ++s) ++hyp_counts[join_gram(hyp, s, n)];
      totals[n - 1] += static_cast<long long>(hyp.size() - n + 1);
      for (const auto& [gram, count] : hyp_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matches[n - 1] += std::min(count, it->second);
      }
    }
  }

  if (hyp_len == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    double p = (totals[n] == 0 || matches[n] == 0)
                   ? kBleuEps
                   : static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
    log_sum += 0.25 * std::log(p);
  }
  double bp = hyp_len >= ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return bp * std::exp(log_sum) * 100.0;
}

double sentence_bleu(const std::string& hypothesis, const std::string& reference) {
  return corpus_bleu(std::vector<std::string>{hypothesis},
                     std::vector<std::string>{reference});
}

double compute_cbe(const std::vector<std::string>& texts) {
  if (texts.empty())
    throw TodError(ErrorKind::EmptyCorpus, "conditional bigram entropy needs at least one text");
  std::map<std::pair<std::string, std::string>, long long> pair_counts;
  std::map<std::string, long long> first_counts;
  long long total = 0;
  for (const auto& text : texts) {
    auto tokens = tokenize(text);
    for (size_t i = 0; i + 1 < tokens.size(); i += 2) {
      ++pair_counts[{tokens[i], tokens[i + 1]}];
      ++first_counts[tokens[i]];
      ++total;
    }
  }
  if (total == 0) return 0.0;
  double entropy = 0.0;
  for (const auto& [pair, count] : pair_counts) {
    double p = static_cast<double>(count) / static_cast<double>(total);
    double conditional = static_cast<double>(count)
                         / static_cast<double>(first_counts[pair.first]);
    entropy -= p * std::log2(conditional);
  }
  return entropy;
}

Richness lexical_richness(const std::vector<std::string>& texts) {
  std::set<std::string> words;
  std::set<std::string> trigrams;
  for (const auto& text : texts) {
    auto tokens = tokenize(text);
    words.insert(tokens.begin(), tokens.end());
    for (size_t i = 0; i + 2 < tokens.size(); ++i) trigrams.insert(join_gram(tokens, i, 3));
  }
  return {static_cast<int>(words.size()), static_cast<int>(trigrams.size())};
}

double compute_combined(double inform, double success, double bleu) {
  return util::round1((inform + success) / 2.0 + bleu);
}

// ---------------------------------------------------------------------------
// Report plumbing

json MetricsReport::to_json() const {
  json obj = json::object();
  obj["dialogues"] = dialogues;
  obj["turns"] = turns;
  obj["inform"] = inform;
  obj["success"] = success;
  obj["bleu"] = bleu;
  obj["combined"] = combined;
  obj["cbe"] = cbe;
  obj["uniq_words"] = uniq_words;
  obj["uniq_trigrams"] = uniq_trigrams;
  json domains = json::object();
  for (const auto& [name, m] : per_domain) {
    domains[name] = json{{"dialogues", m.dialogues},
                         {"informed", m.informed},
                         {"successful", m.successful}};
  }
  obj["per_domain"] = domains;
  json details_arr = json::array();
  for (const auto& d : details) {
    details_arr.push_back(json{{"dialogue_id", d.dialogue_id},
                               {"informed", d.informed},
                               {"successful", d.successful},
                               {"missed_offers", d.missed_offers},
                               {"missed_requests", d.missed_requests}});
  }
  obj["details"] = details_arr;
  return obj;
}

MetricsReport MetricsReport::from_json(const json& obj) {
  MetricsReport report;
  auto need = [&](const char* key) -> const json& {
    if (!obj.contains(key))
      throw TodError(ErrorKind::MalformedRecord,
                     std::string("metrics report is missing \"") + key + "\"");
    return obj[key];
  };
  report.dialogues = need("dialogues").get<int>();
  report.turns = need("turns").get<int>();
  report.inform = need("inform").get<double>();
  report.success = need("success").get<double>();
  report.bleu = need("bleu").get<double>();
  report.combined = need("combined").get<double>();
  report.cbe = need("cbe").get<double>();
  report.uniq_words = need("uniq_words").get<int>();
  report.uniq_trigrams = need("uniq_trigrams").get<int>();
  if (obj.contains("per_domain"))
    for (const auto& [name, m] : obj["per_domain"].items())
      report.per_domain[name] = {m["dialogues"].get<int>(), m["informed"].get<int>(),
                                 m["successful"].get<int>()};
  if (obj.contains("details"))
    for (const auto& d : obj["details"]) {
      DialogueEval eval;
      eval.dialogue_id = d["dialogue_id"].get<std::string>();
      eval.informed = d["informed"].get<bool>();
      eval.successful = d["successful"].get<bool>();
      for (const auto& s : d["missed_offers"]) eval.missed_offers.push_back(s.get<std::string>());
      for (const auto& s : d["missed_requests"])
        eval.missed_requests.push_back(s.get<std::string>());
      report.details.push_back(std::move(eval));
    }
  return report;
}

std::string render_table(const MetricsReport& report) {
  char line[160];
  std::string out;
  auto row = [&](const char* name, const std::string& value) {
    std::snprintf(line, sizeof(line), "%-14s %10s\n", name, value.c_str());
    out += line;
  };
  auto num = [&](const char* fmt, double v) {
    std::snprintf(line, sizeof(line), fmt, v);
    return std::string(line);
  };
  out += "metric              value\n";
  out += "-------------- ----------\n";
  row("dialogues", std::to_string(report.dialogues));
  row("turns", std::to_string(report.turns));
  row("inform", num("%.1f", report.inform));
  row("success", num("%.1f", report.success));
  row("bleu", num("%.2f", report.bleu));
  row("combined", num("%.1f", report.combined));
  row("cbe", num("%.3f", report.cbe));
  row("uniq words", std::to_string(report.uniq_words));
  row("uniq 3-grams", std::to_string(report.uniq_trigrams));
  if (!report.per_domain.empty()) {
    out += "\ndomain          n  inform   success\n";
    out += "------------ ---- -------- --------\n";
    for (const auto& [name, m] : report.per_domain) {
      double inf = m.dialogues == 0 ? 0.0 : 100.0 * m.informed / m.dialogues;
      double suc = m.dialogues == 0 ? 0.0 : 100.0 * m.successful / m.dialogues;
      std::snprintf(line, sizeof(line), "%-12s %4d %8.1f %8.1f\n", name.c_str(), m.dialogues,
                    inf, suc);
      out += line;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluator

bool Evaluator::db_consistent(const std::string& domain, const GoalDomain& goal) const {
  if (domain == "taxi" || domain == "bus") return true;
  if (!dbs_->has(domain)) return true;
  return !dbs_->at(domain).query(goal.informable).empty();
}

DialogueEval Evaluator::evaluate_dialogue(const CorpusDialogue& dialogue,
                                          const std::vector<std::string>& responses) const {
  DialogueEval eval;
  eval.dialogue_id = dialogue.id;

  // Every placeholder mention, attributed to the turn's gold active domain so
  // bare tokens ([phone], [name]) can be credited to a specific domain.
  struct Mention {
    std::string turn_domain;
    const PlaceholderInfo* info;
  };
  std::vector<Mention> mentions;
  auto user_turns = dialogue.user_turn_indices();
  for (size_t i = 0; i < user_turns.size() && i < responses.size(); ++i) {
    const Frame* frame = dialogue.turns[user_turns[i]].active_frame();
    std::string turn_domain = frame == nullptr ? "" : frame->service;
    for (const auto& name : ResponseAgent::extract_placeholders(responses[i])) {
      const PlaceholderInfo* info = placeholders_->find(name);
      if (info != nullptr) mentions.push_back({turn_domain, info});
    }
  }

  auto attributed = [&](const Mention& m, const std::string& domain) {
    return m.info->domain == domain || (m.info->domain == "*" && m.turn_domain == domain);
  };

  bool informed = true;
  bool successful = true;
  for (const auto& [domain, goal] : dialogue.goal) {
    const auto& offers = placeholders_->offer_attributes(domain);
    bool any_offer_attr = std::find(offers.begin(), offers.end(), "*") != offers.end();
    bool offered = false;
    for (const auto& m : mentions) {
      if (!attributed(m, domain)) continue;
      if (any_offer_attr
          || std::find(offers.begin(), offers.end(), m.info->attribute) != offers.end()) {
        offered = true;
        break;
      }
    }
    bool domain_informed = offered && db_consistent(domain, goal);
    if (!domain_informed) {
      informed = false;
      eval.missed_offers.push_back(domain);
    }
    for (const auto& attr : goal.requestable) {
      bool covered = false;
      for (const auto& m : mentions) {
        if (m.info->attribute != attr) continue;
        if (m.info->domain == domain || m.info->domain == "*") {
          covered = true;
          break;
        }
      }
      if (!covered) {
        successful = false;
        eval.missed_requests.push_back(domain + "-" + attr);
      }
    }
  }
  eval.informed = informed;
  eval.successful = informed && successful;  // success never exceeds inform
  return eval;
}

MetricsReport Evaluator::evaluate(const Predictions& predictions, const Corpus& corpus) const {
  if (corpus.dialogues.empty())
    throw TodError(ErrorKind::EmptyCorpus, "evaluation needs at least one dialogue");

  MetricsReport report;
  std::vector<std::string> hyps;
  std::vector<std::string> refs;
  std::vector<std::string> generated;

  int informed_count = 0;
  int successful_count = 0;

  for (const auto& dialogue : corpus.dialogues) {
    auto it = predictions.find(dialogue.id);
    if (it == predictions.end())
      throw TodError(ErrorKind::MissingPrediction,
                     "no predictions for dialogue " + dialogue.id);
    const auto& responses = it->second;
    auto user_turns = dialogue.user_turn_indices();
    if (responses.size() != user_turns.size())
      throw TodError(ErrorKind::AlignmentMismatch,
                     dialogue.id + ": " + std::to_string(responses.size())
                     + " responses for " + std::to_string(user_turns.size()) + " user turns");

    for (size_t i = 0; i < user_turns.size(); ++i) {
      size_t system_index = user_turns[i] + 1;
      if (system_index >= dialogue.turns.size()
          || dialogue.turns[system_index].speaker != "SYSTEM")
        throw TodError(ErrorKind::AlignmentMismatch,
                       dialogue.id + ": user turn without a gold system reply");
      const CorpusTurn& gold = dialogue.turns[system_index];
      hyps.push_back(responses[i]);
      refs.push_back(gold.delex.empty() ? gold.utterance : gold.delex);
      if (!responses[i].empty()) generated.push_back(responses[i]);
    }

    DialogueEval eval = evaluate_dialogue(dialogue, responses);
    if (eval.informed) ++informed_count;
    if (eval.successful) ++successful_count;
    for (const auto& [domain, goal] : dialogue.goal) {
      DomainMetrics& dm = report.per_domain[domain];
      ++dm.dialogues;
      bool missed_offer = std::find(eval.missed_offers.begin(), eval.missed_offers.end(),
                                    domain) != eval.missed_offers.end();
      bool missed_request = false;
      for (const auto& miss : eval.missed_requests)
        if (util::starts_with(miss, domain + "-")) missed_request = true;
      if (!missed_offer) {
        ++dm.informed;
        if (!missed_request) ++dm.successful;
      }
    }
    report.details.push_back(std::move(eval));
  }

  report.dialogues = static_cast<int>(corpus.dialogues.size());
  report.turns = static_cast<int>(hyps.size());
  report.inform = 100.0 * informed_count / report.dialogues;
  report.success = 100.0 * successful_count / report.dialogues;
  report.bleu = corpus_bleu(hyps, refs);
  report.combined = compute_combined(report.inform, report.success, report.bleu);
  report.cbe = generated.empty() ? 0.0 : compute_cbe(generated);
  Richness richness = lexical_richness(generated);
  report.uniq_words = richness.uniq_words;
  report.uniq_trigrams = richness.uniq_trigrams;
  return report;
}

}  // namespace tod
