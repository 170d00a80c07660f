#pragma once

#include <cstdint>
#include <string>

#include "tod/error.hpp"
#include "tod/llm_backend.hpp"
#include "tod/util.hpp"

namespace tod {

struct RunConfig {
  std::string data_path = util::data_dir();  // schemas, databases, templates, placeholders
  std::string split;       // dialogues JSON (fixture or dataset export)
  std::string out_dir = "out";
  BackendDescriptor backend;
  int parallelism = 1;
  uint64_t seed = 20250819;
  bool gold_last_intent = false;
  int history_window = 3;
  int max_words = 25;
  double bleu_threshold = 0.30;
  double tv_bound = 0.02;
  std::string dda_key = "domain";  // "domain" | "slot"

  static RunConfig load(const std::string& path);
  static RunConfig from_json(const json& obj);
  json to_json() const;

  // Fails fast when referenced paths are missing or knob values are invalid.
  void validate() const;
};

// Stable exit-code contract: 0 success, 1 usage/config, 2 data, 3 backend.
int exit_code_for(ErrorKind kind);

// Writes out_dir/manifest.json recording the command, seed, and config hash.
void write_manifest(const RunConfig& config, const std::string& command);

}  // namespace tod
