#include <filesystem>
#include <functional>
#include <iostream>

#include "CLI11.hpp"
#include "tod/config.hpp"
#include "tod/corpus.hpp"
#include "tod/datagen.hpp"
#include "tod/db_engine.hpp"
#include "tod/evaluation.hpp"
#include "tod/llm_backend.hpp"
#include "tod/orchestrator.hpp"
#include "tod/util.hpp"

namespace {

using namespace tod;

struct Loaded {
  SchemaSet schemas;
  DatabaseSet dbs;
  PromptTemplates templates;
};

Loaded load_assets(const RunConfig& config) {
  Loaded loaded;
  loaded.schemas = SchemaSet::load(config.data_path);
  loaded.dbs = DatabaseSet::load(config.data_path, loaded.schemas);
  loaded.templates = PromptTemplates::load(config.data_path);
  return loaded;
}

EngineOptions engine_options(const RunConfig& config) {
  EngineOptions options;
  options.use_gold_last_intent = config.gold_last_intent;
  options.history_window = config.history_window;
  options.max_words = config.max_words;
  return options;
}

Corpus load_split(const RunConfig& config, const SchemaSet& schemas) {
  if (config.split.empty())
    throw TodError(ErrorKind::BadConfig, "this command requires --split <dialogues.json>");
  Corpus corpus = Corpus::load(config.split, schemas);
  if (corpus.dialogues.empty())
    throw TodError(ErrorKind::EmptyCorpus, "empty dataset: " + config.split);
  return corpus;
}

int cmd_eval(const RunConfig& config) {
  config.validate();
  Loaded loaded = load_assets(config);
  PlaceholderMap placeholders = PlaceholderMap::load(config.data_path);
  Corpus corpus = load_split(config, loaded.schemas);
  std::unique_ptr<Backend> backend = make_backend(config.backend, &corpus);

  Engine engine(&loaded.schemas, &loaded.dbs, &loaded.templates, engine_options(config));
  RunResult result = engine.run_corpus(corpus, *backend, config.parallelism);

  json predictions = json::object();
  for (const auto& dialogue : corpus.dialogues) {
    auto it = result.predictions.find(dialogue.id);
    if (it != result.predictions.end()) predictions[dialogue.id] = it->second;
  }
  util::write_file(config.out_dir + "/predictions.json", predictions.dump(2) + "\n");
  std::string traces;
  for (const auto& transcript : result.transcripts)
    traces += transcript.to_json().dump() + "\n";
  util::write_file(config.out_dir + "/traces.jsonl", traces);
  write_manifest(config, "eval");

  if (!result.failures.empty()) {
    for (const auto& [id, message] : result.failures)
      std::cerr << "dialogue " << id << " failed: " << message << "\n";
    throw TodError(ErrorKind::BackendError,
                   std::to_string(result.failures.size()) + " dialogue(s) failed");
  }

  Evaluator evaluator(&loaded.schemas, &loaded.dbs, &placeholders);
  MetricsReport report = evaluator.evaluate(result.predictions, corpus);
  json metrics = report.to_json();
  metrics["seed"] = config.seed;
  util::write_file(config.out_dir + "/metrics.json", metrics.dump(2) + "\n");
  std::cout << render_table(report);
  return 0;
}

int cmd_chat(const RunConfig& config, const std::string& dialogue_id, bool show_trace) {
  config.validate();
  Loaded loaded = load_assets(config);
  Corpus corpus;
  if (!config.split.empty()) corpus = Corpus::load(config.split, loaded.schemas);
  std::unique_ptr<Backend> backend = make_backend(config.backend, &corpus);

  Engine engine(&loaded.schemas, &loaded.dbs, &loaded.templates, engine_options(config));
  DialogueState state;
  state.dialogue_id = dialogue_id;
  std::unique_ptr<Backend> session = backend->for_dialogue(dialogue_id);
  Backend& scoped = session ? *session : *backend;

  std::string line;
  while (true) {
    std::cout << "user> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    if (util::trim(line).empty()) continue;
    TurnTrace trace = engine.run_turn(state, line, scoped);
    if (!trace.error_stage.empty()) {
      std::cout << "[" << trace.error_stage << " error] " << trace.error_message << "\n";
      continue;
    }
    if (show_trace) {
      std::cout << "[intent] last_tool=" << trace.last_tool << " action=" << trace.action
                << "\n";
      if (trace.slot.ran)
        std::cout << "[slots] " << trace.merged_slots.render_json() << "\n"
                  << "[db] option_count=" << trace.option_count << "\n";
    }
    std::cout << "system> " << trace.final_response << "\n";
    if (state.ended) break;
  }
  return 0;
}

std::vector<SftExample> restrict_agent(const std::vector<SftExample>& examples,
                                       const std::string& agent) {
  if (agent == "all") return examples;
  std::vector<SftExample> out;
  for (const auto& e : examples)
    if (e.agent_kind == agent) out.push_back(e);
  return out;
}

int cmd_gen(const RunConfig& config, const std::string& kind, const std::string& agent,
            const std::string& traces_path, bool no_dda) {
  config.validate();
  if (agent != "all" && agent != "intent" && agent != "slot" && agent != "response")
    throw TodError(ErrorKind::BadConfig, "agent must be intent, slot, response, or all");
  Loaded loaded = load_assets(config);
  Corpus corpus = load_split(config, loaded.schemas);

  DataGenerator generator(&loaded.schemas, &loaded.dbs, &loaded.templates,
                          engine_options(config));
  generator.build_context_pool(corpus);
  std::vector<SftExample> sft = restrict_agent(generator.build_sft(corpus), agent);

  if (kind == "sft") {
    std::string path = config.out_dir + "/sft_" + agent + ".jsonl";
    write_sft_jsonl(path, sft);
    write_manifest(config, "gen sft " + agent);
    std::cout << "wrote " << sft.size() << " examples to " << path << "\n";
    return 0;
  }

  std::vector<Transcript> transcripts;
  if (!traces_path.empty()) {
    size_t line_no = 0;
    for (const auto& line : util::split(util::read_file(traces_path), '\n')) {
      ++line_no;
      if (util::trim(line).empty()) continue;
      json obj = json::parse(line, nullptr, false);
      if (obj.is_discarded())
        throw TodError(ErrorKind::MalformedRecord,
                       traces_path + ":" + std::to_string(line_no) + ": invalid JSON");
      transcripts.push_back(Transcript::from_json(obj));
    }
  } else {
    std::unique_ptr<Backend> backend = make_backend(config.backend, &corpus);
    Engine engine(&loaded.schemas, &loaded.dbs, &loaded.templates, engine_options(config));
    transcripts = engine.run_corpus(corpus, *backend, config.parallelism).transcripts;
  }

  std::vector<PreferencePair> observed =
      generator.collect_bad_cases(transcripts, corpus, agent, config.bleu_threshold);

  std::map<std::string, long long> sft_counts;
  for (const auto& e : sft) ++sft_counts[category_of(e.domain, e.target, config.dda_key)];
  DomainDistribution sft_dist = DomainDistribution::from_counts(std::move(sft_counts));

  std::vector<PreferencePair> final_pairs =
      no_dda ? observed
             : generator.adapt_distribution(observed, sft_dist, sft, config.seed,
                                            config.dda_key);

  json report = distribution_report(final_pairs, sft_dist, config.dda_key);
  util::write_file(config.out_dir + "/distribution_report.json", report.dump(2) + "\n");
  double tv = report["tv_distance"].get<double>();
  bool balanced = tv <= config.tv_bound + 1e-12;

  std::string path = config.out_dir + "/dpo_" + agent + ".jsonl";
  if (!balanced) path += ".unbalanced";
  write_dpo_jsonl(path, final_pairs);
  write_manifest(config, "gen dpo " + agent);

  std::cout << "observed pairs: " << observed.size() << "\n"
            << "final pairs: " << final_pairs.size() << "\n"
            << "tv_distance: " << tv << "\n"
            << "wrote " << path << "\n";
  if (!balanced && !no_dda) {
    std::cerr << "error: category distribution diverges from the SFT distribution (tv="
              << tv << " > bound " << config.tv_bound << "); kept " << path << "\n";
    return 2;
  }
  return 0;
}

int cmd_ablate(const RunConfig& config, const std::string& domain, const std::string& sft_path,
               const std::string& dpo_path) {
  config.validate();
  if (!is_domain(domain))
    throw TodError(ErrorKind::BadConfig, "unknown domain: " + domain);
  if (sft_path.empty() && dpo_path.empty())
    throw TodError(ErrorKind::BadConfig, "ablate needs --sft and/or --dpo input files");

  json manifest = json::object();
  manifest["domain"] = domain;
  json removed = json::object();
  json kept = json::object();

  if (!sft_path.empty()) {
    auto examples = read_sft_jsonl(sft_path);
    auto filtered = filter_domain(examples, domain);
    std::string out = config.out_dir + "/"
                      + std::filesystem::path(sft_path).filename().string();
    write_sft_jsonl(out, filtered);
    removed["sft"] = examples.size() - filtered.size();
    kept["sft"] = filtered.size();
    std::cout << "sft: removed " << examples.size() - filtered.size() << ", kept "
              << filtered.size() << " -> " << out << "\n";
  }
  if (!dpo_path.empty()) {
    auto pairs = read_dpo_jsonl(dpo_path);
    auto filtered = filter_domain(pairs, domain);
    std::string out = config.out_dir + "/"
                      + std::filesystem::path(dpo_path).filename().string();
    write_dpo_jsonl(out, filtered);
    removed["dpo"] = pairs.size() - filtered.size();
    kept["dpo"] = filtered.size();
    std::cout << "dpo: removed " << pairs.size() - filtered.size() << ", kept "
              << filtered.size() << " -> " << out << "\n";
  }
  manifest["removed"] = removed;
  manifest["kept"] = kept;
  util::write_file(config.out_dir + "/ablation_manifest.json", manifest.dump(2) + "\n");
  write_manifest(config, "ablate " + domain);
  return 0;
}

int cmd_db(const RunConfig& config, const std::string& domain,
           const std::string& constraints_text) {
  config.validate();
  SchemaSet schemas = SchemaSet::load(config.data_path);
  DatabaseSet dbs = DatabaseSet::load(config.data_path, schemas);
  if (!schemas.has(domain))
    throw TodError(ErrorKind::DomainMismatch, "unknown domain: " + domain);

  json parsed = json::parse(constraints_text, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object())
    throw TodError(ErrorKind::BadConfig,
                   "constraints must be a JSON object, e.g. '{\"area\": \"centre\"}'");
  SlotMap raw = SlotMap::from_json(parsed, domain);
  SlotMap constraints;
  const DomainSchema& schema = schemas.at(domain);
  for (const auto& [name, values] : raw.entries()) {
    std::vector<std::string> normalized;
    const SlotSpec* spec = schema.find_informable(name);
    for (const auto& v : values)
      normalized.push_back(spec != nullptr ? schemas.normalize_value(*spec, v)
                                           : schemas.normalize(v));
    constraints.set(name, normalized);
  }

  if (domain == "taxi") {
    Entity entity = taxi_synthesize(constraints, dbs.taxi_catalog());
    std::cout << entity.dump() << "\n";
  } else {
    const Database& db = dbs.at(domain);
    for (const Entity* entity : db.query(constraints)) std::cout << entity->dump() << "\n";
  }
  std::cout << "\n" << query_and_observe(dbs, domain, constraints).render() << "\n";
  return 0;
}

int cmd_report(const std::string& metrics_path) {
  json doc = json::parse(util::read_file(metrics_path), nullptr, false);
  if (doc.is_discarded())
    throw TodError(ErrorKind::MalformedRecord, metrics_path + ": invalid JSON");
  std::cout << render_table(MetricsReport::from_json(doc));
  return 0;
}

struct CommonFlags {
  std::string config_path;
  std::string data_path;
  std::string split;
  std::string out_dir;
  std::string backend_kind;
  std::string base_url;
  std::string model;
  std::string script;
  std::string journal;
  std::string auth_env;
  std::string dda_key;
  int parallelism = 0;
  uint64_t seed = 0;
  int history_window = -1;
  int max_words = 0;
  double threshold = -1.0;
  double tv_bound = -1.0;
  bool gold_last_intent = false;

  CLI::App* sub = nullptr;

  void attach(CLI::App* command) {
    sub = command;
    command->add_option("--config", config_path, "JSON config file");
    command->add_option("--data", data_path, "data asset directory");
    command->add_option("--split", split, "dialogues JSON file");
    command->add_option("--out", out_dir, "output directory");
    command->add_option("--backend", backend_kind, "backend kind: http, scripted, oracle");
    command->add_option("--base-url", base_url, "chat-completion endpoint base URL");
    command->add_option("--model", model, "model identifier sent to the endpoint");
    command->add_option("--script", script, "scripted-backend rules file");
    command->add_option("--journal", journal, "JSONL request journal path");
    command->add_option("--auth-env", auth_env,
                        "environment variable holding the bearer token (empty disables auth)");
    command->add_option("--parallelism", parallelism, "dialogue-level worker threads");
    command->add_option("--seed", seed, "RNG seed recorded in run manifests");
    command->add_option("--history-window", history_window,
                        "prior exchanges shown to the response agent");
    command->add_option("--max-words", max_words, "response word budget");
    command->add_option("--threshold", threshold, "sentence-BLEU bad-case threshold [0,1]");
    command->add_option("--tv-bound", tv_bound, "maximum TV distance accepted for DPO output");
    command->add_option("--key", dda_key, "DDA category key: domain or slot");
    command->add_flag("--gold-last-intent", gold_last_intent,
                      "condition Last Tool on gold annotations");
  }

  RunConfig resolve() const {
    RunConfig config;
    if (!config_path.empty()) config = RunConfig::load(config_path);
    if (sub->count("--data")) config.data_path = data_path;
    if (sub->count("--split")) config.split = split;
    if (sub->count("--out")) config.out_dir = out_dir;
    if (sub->count("--backend")) config.backend.kind = backend_kind;
    if (sub->count("--base-url")) config.backend.base_url = base_url;
    if (sub->count("--model")) config.backend.model_id = model;
    if (sub->count("--script")) config.backend.script_path = script;
    if (sub->count("--journal")) config.backend.journal_path = journal;
    if (sub->count("--auth-env")) config.backend.auth_env = auth_env;
    if (sub->count("--parallelism")) config.parallelism = parallelism;
    if (sub->count("--seed")) config.seed = seed;
    if (sub->count("--history-window")) config.history_window = history_window;
    if (sub->count("--max-words")) config.max_words = max_words;
    if (sub->count("--threshold")) config.bleu_threshold = threshold;
    if (sub->count("--tv-bound")) config.tv_bound = tv_bound;
    if (sub->count("--key")) config.dda_key = dda_key;
    if (sub->count("--gold-last-intent")) config.gold_last_intent = true;
    if (config.backend.kind != "http" && config.backend.kind != "scripted"
        && config.backend.kind != "oracle")
      throw TodError(ErrorKind::BadConfig, "unknown backend kind: " + config.backend.kind);
    return config;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"task-oriented dialogue engine: evaluation, chat, and dataset generation"};
  app.require_subcommand(1);

  std::function<int()> runner;

  CommonFlags eval_flags;
  CLI::App* eval = app.add_subcommand("eval", "run a corpus and score it");
  eval_flags.attach(eval);
  eval->callback([&]() { runner = [&]() { return cmd_eval(eval_flags.resolve()); }; });

  CommonFlags chat_flags;
  std::string chat_dialogue = "chat";
  bool chat_trace = false;
  CLI::App* chat = app.add_subcommand("chat", "interactive dialogue REPL");
  chat_flags.attach(chat);
  chat->add_option("--dialogue", chat_dialogue, "dialogue id (oracle backend scoping)");
  chat->add_flag("--trace", chat_trace, "print per-turn pipeline traces");
  chat->callback([&]() {
    runner = [&]() { return cmd_chat(chat_flags.resolve(), chat_dialogue, chat_trace); };
  });

  CommonFlags gen_flags;
  std::string gen_kind;
  std::string gen_agent = "all";
  std::string gen_traces;
  bool gen_no_dda = false;
  CLI::App* gen = app.add_subcommand("gen", "emit SFT or DPO training data");
  gen->add_option("kind", gen_kind, "sft or dpo")->required()
      ->check(CLI::IsMember({"sft", "dpo"}));
  gen_flags.attach(gen);
  gen->add_option("--agent", gen_agent, "intent, slot, response, or all");
  gen->add_option("--traces", gen_traces, "traces.jsonl from a previous eval run (dpo)");
  gen->add_flag("--no-dda", gen_no_dda, "skip distribution adaptation (DPO-Ori baseline)");
  gen->callback([&]() {
    runner = [&]() {
      return cmd_gen(gen_flags.resolve(), gen_kind, gen_agent, gen_traces, gen_no_dda);
    };
  });

  CommonFlags ablate_flags;
  std::string ablate_domain;
  std::string ablate_sft;
  std::string ablate_dpo;
  CLI::App* ablate = app.add_subcommand("ablate", "drop one domain from generated datasets");
  ablate_flags.attach(ablate);
  ablate->add_option("--domain", ablate_domain, "domain to remove")->required();
  ablate->add_option("--sft", ablate_sft, "SFT JSONL to filter");
  ablate->add_option("--dpo", ablate_dpo, "DPO JSONL to filter");
  ablate->callback([&]() {
    runner = [&]() {
      return cmd_ablate(ablate_flags.resolve(), ablate_domain, ablate_sft, ablate_dpo);
    };
  });

  CommonFlags db_flags;
  std::string db_domain;
  std::string db_constraints = "{}";
  CLI::App* db = app.add_subcommand("db", "query a domain database directly");
  db_flags.attach(db);
  db->add_option("--domain", db_domain, "domain to query")->required();
  db->add_option("--constraints", db_constraints, "JSON object of slot constraints");
  db->callback([&]() {
    runner = [&]() { return cmd_db(db_flags.resolve(), db_domain, db_constraints); };
  });

  std::string report_metrics;
  CLI::App* report = app.add_subcommand("report", "render a metrics.json as a table");
  report->add_option("--metrics", report_metrics, "metrics.json path")->required();
  report->callback([&]() { runner = [&]() { return cmd_report(report_metrics); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return runner ? runner() : 1;
  } catch (const TodError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
