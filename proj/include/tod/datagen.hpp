#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tod/corpus.hpp"
#include "tod/db_engine.hpp"
#include "tod/error.hpp"
#include "tod/orchestrator.hpp"
#include "tod/prompts.hpp"
#include "tod/schema.hpp"

namespace tod {

struct SftExample {
  std::string agent_kind;  // "intent" | "slot" | "response"
  std::string domain;
  std::string prompt;
  std::string target;

  json to_json() const;
  static SftExample from_json(const json& obj);
};

struct PreferencePair {
  std::string agent_kind;
  std::string domain;
  std::string prompt;
  std::string chosen;
  std::string rejected;
  std::string provenance;  // "observed_bad_case" | "synthesized"

  json to_json() const;
  static PreferencePair from_json(const json& obj);
};

struct DomainDistribution {
  std::map<std::string, long long> counts;
  std::map<std::string, double> weights;  // counts normalized; sums to 1

  static DomainDistribution from_counts(std::map<std::string, long long> counts);
};

// Largest-remainder apportionment of `total` across `weights`; ties broken by
// domain name ascending.
std::map<std::string, long long> apportion(long long total,
                                           const std::map<std::string, double>& weights);

double tv_distance(const std::map<std::string, double>& p,
                   const std::map<std::string, double>& q);

class DataGenerator {
 public:
  DataGenerator(const SchemaSet* schemas, const DatabaseSet* dbs,
                const PromptTemplates* templates, EngineOptions options = {});

  // Gold replay of the corpus into per-agent SFT examples. A non-closing user
  // turn without gold state raises MissingGoldState.
  std::vector<SftExample> build_sft(const Corpus& corpus) const;

  // Mines preference pairs from engine transcripts vs gold annotations for
  // one agent kind ("intent"/"slot"/"response") or for "all".
  std::vector<PreferencePair> collect_bad_cases(const std::vector<Transcript>& runs,
                                                const Corpus& corpus,
                                                const std::string& agent_kind,
                                                double bleu_threshold) const;

  // Derives a gold-correct example into a wrong-but-well-formed rejected
  // completion; provenance "synthesized".
  PreferencePair synthesize_negative(const SftExample& example, std::mt19937_64& rng) const;

  // Extends `observed` with synthesized pairs drawn from `sft_pool` until the
  // category distribution matches `sft_dist` (smallest total preserving every
  // observed pair; largest-remainder targets). Deterministic in `seed`.
  // `key` selects the category: "domain" (default) or "slot" (primary
  // parameter slot of the completion, falling back to the domain).
  std::vector<PreferencePair> adapt_distribution(const std::vector<PreferencePair>& observed,
                                                 const DomainDistribution& sft_dist,
                                                 const std::vector<SftExample>& sft_pool,
                                                 uint64_t seed,
                                                 const std::string& key = "domain") const;

  // Values seen per slot across the corpus; the swap pool for slot negatives.
  void build_context_pool(const Corpus& corpus);

  const SchemaSet* schemas() const { return schemas_; }

 private:
  const SchemaSet* schemas_;
  const DatabaseSet* dbs_;
  const PromptTemplates* templates_;
  EngineOptions options_;
  std::map<std::string, std::vector<std::string>> context_pool_;  // qualified slot -> values
};

// Category of an example under a distribution key ("domain" or "slot").
std::string category_of(const std::string& domain, const std::string& completion,
                        const std::string& key);

json distribution_report(const std::vector<PreferencePair>& pairs,
                         const DomainDistribution& sft_dist,
                         const std::string& key = "domain");

std::vector<SftExample> filter_domain(const std::vector<SftExample>& examples,
                                      const std::string& removed);
std::vector<PreferencePair> filter_domain(const std::vector<PreferencePair>& pairs,
                                          const std::string& removed);

void write_sft_jsonl(const std::string& path, const std::vector<SftExample>& examples);
void write_dpo_jsonl(const std::string& path, const std::vector<PreferencePair>& pairs);
std::vector<SftExample> read_sft_jsonl(const std::string& path);
std::vector<PreferencePair> read_dpo_jsonl(const std::string& path);

}  // namespace tod
