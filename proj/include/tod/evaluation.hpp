#pragma once

#include <map>
#include <string>
#include <vector>

#include "tod/corpus.hpp"
#include "tod/db_engine.hpp"
#include "tod/error.hpp"
#include "tod/orchestrator.hpp"
#include "tod/schema.hpp"

namespace tod {

struct PlaceholderInfo {
  std::string domain;  // "*" for domain-agnostic tokens
  std::string attribute;
};

class PlaceholderMap {
 public:
  static PlaceholderMap load(const std::string& data_path);
  static const PlaceholderMap& bundled();

  // nullptr when the bracketed token is not a known placeholder.
  const PlaceholderInfo* find(const std::string& token) const;

  // Attributes whose mention counts as offering an entity; {"*"} means any
  // placeholder attributed to the domain counts.
  const std::vector<std::string>& offer_attributes(const std::string& domain) const;

 private:
  std::map<std::string, PlaceholderInfo> tokens_;
  std::map<std::string, std::vector<std::string>> offers_;
  std::vector<std::string> empty_;
};

// Shared metric tokenizer: lowercase, [a-z0-9_]+ runs, every other non-space
// character as its own token.
std::vector<std::string> tokenize(const std::string& text);

// Corpus-level BLEU-4 on a 0-100 scale, uniform weights, brevity penalty,
// zero or undefined n-gram precisions smoothed to 1e-12.
double corpus_bleu(const std::vector<std::string>& hypotheses,
                   const std::vector<std::string>& references);
double sentence_bleu(const std::string& hypothesis, const std::string& reference);

// Conditional bigram entropy over disjoint consecutive token pairs, in bits.
double compute_cbe(const std::vector<std::string>& texts);

struct Richness {
  int uniq_words = 0;
  int uniq_trigrams = 0;
};
Richness lexical_richness(const std::vector<std::string>& texts);

// (inform + success) / 2 + bleu, rounded half-up to one decimal.
double compute_combined(double inform, double success, double bleu);

struct DomainMetrics {
  int dialogues = 0;
  int informed = 0;
  int successful = 0;
};

struct DialogueEval {
  std::string dialogue_id;
  bool informed = false;
  bool successful = false;
  std::vector<std::string> missed_offers;      // goal domains with no offer
  std::vector<std::string> missed_requests;    // "domain-attribute" not covered
};

struct MetricsReport {
  int dialogues = 0;
  int turns = 0;
  double inform = 0.0;
  double success = 0.0;
  double bleu = 0.0;
  double combined = 0.0;
  double cbe = 0.0;
  int uniq_words = 0;
  int uniq_trigrams = 0;
  std::map<std::string, DomainMetrics> per_domain;
  std::vector<DialogueEval> details;

  json to_json() const;
  static MetricsReport from_json(const json& obj);
};

std::string render_table(const MetricsReport& report);

class Evaluator {
 public:
  Evaluator(const SchemaSet* schemas, const DatabaseSet* dbs,
            const PlaceholderMap* placeholders)
      : schemas_(schemas), dbs_(dbs), placeholders_(placeholders) {}

  MetricsReport evaluate(const Predictions& predictions, const Corpus& corpus) const;

 private:
  DialogueEval evaluate_dialogue(const CorpusDialogue& dialogue,
                                 const std::vector<std::string>& responses) const;
  bool db_consistent(const std::string& domain, const GoalDomain& goal) const;

  const SchemaSet* schemas_;
  const DatabaseSet* dbs_;
  const PlaceholderMap* placeholders_;
};

}  // namespace tod
