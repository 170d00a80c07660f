#include "tod/config.hpp"

#include "tod/util.hpp"

namespace tod {

RunConfig RunConfig::load(const std::string& path) {
  json doc;
  try {
    doc = json::parse(util::read_file(path));
  } catch (const json::parse_error& e) {
    throw TodError(ErrorKind::BadConfig, path + ": " + e.what());
  }
  return from_json(doc);
}

RunConfig RunConfig::from_json(const json& obj) {
  if (!obj.is_object()) throw TodError(ErrorKind::BadConfig, "config must be a JSON object");
  RunConfig config;
  config.data_path = util::data_dir();
  auto str = [&](const char* key, std::string* out) {
    if (obj.contains(key)) {
      if (!obj[key].is_string())
        throw TodError(ErrorKind::BadConfig, std::string(key) + " must be a string");
      *out = obj[key].get<std::string>();
    }
  };
  auto integer = [&](const char* key, int* out) {
    if (obj.contains(key)) {
      if (!obj[key].is_number_integer())
        throw TodError(ErrorKind::BadConfig, std::string(key) + " must be an integer");
      *out = obj[key].get<int>();
    }
  };
  auto real = [&](const char* key, double* out) {
    if (obj.contains(key)) {
      if (!obj[key].is_number())
        throw TodError(ErrorKind::BadConfig, std::string(key) + " must be a number");
      *out = obj[key].get<double>();
    }
  };
  str("data_path", &config.data_path);
  str("split", &config.split);
  str("out_dir", &config.out_dir);
  if (obj.contains("backend")) config.backend = BackendDescriptor::from_json(obj["backend"]);
  integer("parallelism", &config.parallelism);
  if (obj.contains("seed")) {
    if (!obj["seed"].is_number_unsigned() && !obj["seed"].is_number_integer())
      throw TodError(ErrorKind::BadConfig, "seed must be an integer");
    config.seed = obj["seed"].get<uint64_t>();
  }
  if (obj.contains("gold_last_intent")) {
    if (!obj["gold_last_intent"].is_boolean())
      throw TodError(ErrorKind::BadConfig, "gold_last_intent must be a boolean");
    config.gold_last_intent = obj["gold_last_intent"].get<bool>();
  }
  integer("history_window", &config.history_window);
  integer("max_words", &config.max_words);
  real("bleu_threshold", &config.bleu_threshold);
  real("tv_bound", &config.tv_bound);
  str("dda_key", &config.dda_key);
  return config;
}

json RunConfig::to_json() const {
  json obj = json::object();
  obj["data_path"] = data_path;
  obj["split"] = split;
  obj["out_dir"] = out_dir;
  obj["backend"] = backend.to_json();
  obj["parallelism"] = parallelism;
  obj["seed"] = seed;
  obj["gold_last_intent"] = gold_last_intent;
  obj["history_window"] = history_window;
  obj["max_words"] = max_words;
  obj["bleu_threshold"] = bleu_threshold;
  obj["tv_bound"] = tv_bound;
  obj["dda_key"] = dda_key;
  return obj;
}

void RunConfig::validate() const {
  if (!util::file_exists(data_path + "/schemas.json"))
    throw TodError(ErrorKind::BadConfig, "data_path has no schemas.json: " + data_path);
  if (!split.empty() && !util::file_exists(split))
    throw TodError(ErrorKind::BadConfig, "split file does not exist: " + split);
  if (parallelism < 1)
    throw TodError(ErrorKind::BadConfig, "parallelism must be at least 1");
  if (history_window < 0)
    throw TodError(ErrorKind::BadConfig, "history_window must be non-negative");
  if (max_words < 1) throw TodError(ErrorKind::BadConfig, "max_words must be positive");
  if (bleu_threshold < 0.0 || bleu_threshold > 1.0)
    throw TodError(ErrorKind::ThresholdOutOfRange, "bleu_threshold must lie in [0, 1]");
  if (tv_bound < 0.0 || tv_bound > 1.0)
    throw TodError(ErrorKind::BadConfig, "tv_bound must lie in [0, 1]");
  if (dda_key != "domain" && dda_key != "slot")
    throw TodError(ErrorKind::BadConfig, "dda_key must be \"domain\" or \"slot\"");
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadConfig:
    case ErrorKind::ThresholdOutOfRange:
      return 1;
    case ErrorKind::BackendError:
    case ErrorKind::Timeout:
    case ErrorKind::HttpStatus:
    case ErrorKind::NoScriptMatch:
    case ErrorKind::EmptyCompletion:
    case ErrorKind::OracleMissingAnnotation:
      return 3;
    default:
      return 2;
  }
}

void write_manifest(const RunConfig& config, const std::string& command) {
  json manifest = json::object();
  manifest["command"] = command;
  manifest["seed"] = config.seed;
  json config_json = config.to_json();
  manifest["config_hash"] = util::fnv1a(config_json.dump());
  manifest["config"] = config_json;
  util::write_file(config.out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

}  // namespace tod
