#include "empatheval/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "empatheval/behavior.hpp"
#include "empatheval/corpus.hpp"
#include "empatheval/errors.hpp"
#include "empatheval/human_eval.hpp"
#include "empatheval/judge_client.hpp"
#include "empatheval/lexicon.hpp"
#include "empatheval/offline_metrics.hpp"
#include "empatheval/report.hpp"
#include "empatheval/structural.hpp"
#include "empatheval/text.hpp"

namespace empatheval {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kComponents = {"offline", "structural", "behavior", "lexicon", "human"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error("IoError", "cannot write " + path.string());
}

template <typename Fn>
void write_stream(const fs::path& path, Fn fn) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  fn(out);
  if (!out) throw Error("IoError", "cannot write " + path.string());
}

/// One text per line; JSONL lines with a "text" field are also accepted.
std::vector<std::string> read_texts(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FileNotFound", "cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line.front() == '{') {
      try {
        out.push_back(json::parse(line).at("text").get<std::string>());
      } catch (const json::exception& e) {
        throw MalformedRecord(line_no, e.what());
      }
    } else {
      out.push_back(line);
    }
  }
  return out;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------

struct EvalFlags {
  std::optional<std::string> components;
  std::string corpus;
  std::string responses;
  std::string output;
  std::optional<std::string> judge_model;
  std::optional<std::string> base_url;
  std::optional<std::size_t> parallelism;
  std::optional<int> max_retries;
  std::optional<std::string> structural_backend;
  bool structural_per_dimension = false;
  std::optional<std::string> behavior_mode;
  bool no_definitions = false;
  std::optional<std::string> lexicon;
  std::optional<double> tau;
  bool replay = false;
  std::optional<std::string> cache_dir;
  std::optional<std::string> config;
  std::optional<std::string> journal;
};

/// Effective settings after flags > env > config file > defaults.
struct RunConfig {
  std::set<std::string> components;
  std::string judge_model = "gpt-3.5-turbo";
  std::string base_url;
  std::string api_key;
  std::string cache_dir = ".empatheval-cache";
  std::size_t parallelism = 4;
  int max_retries = 3;
  std::string structural_backend = "llm";
  bool structural_per_dimension = false;
  JudgeMode behavior_mode = JudgeMode::Single;
  bool include_definitions = true;
  std::optional<std::string> lexicon;
  double tau = kDefaultRelevanceThreshold;
  bool replay = false;
  std::optional<std::string> journal;
};

template <typename T>
T parse_config_value(const std::string& key, const std::string& value);

template <>
std::string parse_config_value(const std::string&, const std::string& value) {
  return value;
}
template <>
std::size_t parse_config_value(const std::string& key, const std::string& value) {
  try {
    return static_cast<std::size_t>(std::stoul(value));
  } catch (const std::exception&) {
    throw Error("InvalidConfig", "config key '" + key + "' expects a number, got '" + value + "'");
  }
}
template <>
int parse_config_value(const std::string& key, const std::string& value) {
  return static_cast<int>(parse_config_value<std::size_t>(key, value));
}
template <>
double parse_config_value(const std::string& key, const std::string& value) {
  try {
    return std::stod(value);
  } catch (const std::exception&) {
    throw Error("InvalidConfig", "config key '" + key + "' expects a number, got '" + value + "'");
  }
}
template <>
bool parse_config_value(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error("InvalidConfig", "config key '" + key + "' expects true/false, got '" + value + "'");
}

JudgeMode parse_mode(const std::string& s) {
  if (s == "single") return JudgeMode::Single;
  if (s == "batch") return JudgeMode::Batch;
  throw Error("InvalidConfig", "behavior mode must be 'single' or 'batch', got '" + s + "'");
}

RunConfig resolve(const EvalFlags& f) {
  std::map<std::string, std::string> file;
  if (f.config) {
    std::ifstream in(*f.config, std::ios::binary);
    if (!in) throw Error("FileNotFound", "cannot open config " + *f.config);
    std::stringstream ss;
    ss << in.rdbuf();
    file = parse_config_text(ss.str());
    static const std::set<std::string> known = {
        "components", "judge_model", "base_url", "cache_dir", "parallelism", "max_retries", "structural_backend",
        "structural_per_dimension", "behavior_mode", "definitions", "lexicon", "tau", "replay", "journal"};
    for (const auto& [k, _] : file)
      if (!known.contains(k)) throw Error("InvalidConfig", "unknown config key '" + k + "'");
  }
  RunConfig c;
  auto pick = [&](auto& target, const auto& flag, const char* key) {
    using T = std::decay_t<decltype(target)>;
    if (flag) {
      target = *flag;
    } else if (const auto it = file.find(key); it != file.end()) {
      target = parse_config_value<T>(key, it->second);
    }
  };

  std::string components = "offline";
  pick(components, f.components, "components");
  for (auto& name : split_list(components)) {
    if (!kComponents.contains(name)) throw Error("InvalidConfig", "unknown component '" + name + "'");
    c.components.insert(name);
  }
  if (c.components.empty()) throw Error("InvalidConfig", "no components selected");

  pick(c.judge_model, f.judge_model, "judge_model");
  pick(c.parallelism, f.parallelism, "parallelism");
  pick(c.max_retries, f.max_retries, "max_retries");
  pick(c.structural_backend, f.structural_backend, "structural_backend");
  pick(c.tau, f.tau, "tau");
  if (f.lexicon) c.lexicon = f.lexicon;
  else if (file.contains("lexicon")) c.lexicon = file["lexicon"];
  if (f.journal) c.journal = f.journal;
  else if (file.contains("journal")) c.journal = file["journal"];

  std::string mode = "single";
  pick(mode, f.behavior_mode, "behavior_mode");
  c.behavior_mode = parse_mode(mode);

  c.structural_per_dimension = f.structural_per_dimension ||
                               (file.contains("structural_per_dimension") &&
                                parse_config_value<bool>("structural_per_dimension", file["structural_per_dimension"]));
  c.include_definitions =
      !f.no_definitions && (!file.contains("definitions") || parse_config_value<bool>("definitions", file["definitions"]));
  c.replay = f.replay || (file.contains("replay") && parse_config_value<bool>("replay", file["replay"]));

  // Endpoint and cache location also come from the environment.
  if (f.base_url) c.base_url = *f.base_url;
  else if (auto e = env("EMPATHEVAL_BASE_URL")) c.base_url = *e;
  else if (file.contains("base_url")) c.base_url = file["base_url"];
  if (f.cache_dir) c.cache_dir = *f.cache_dir;
  else if (auto e = env("EMPATHEVAL_CACHE_DIR")) c.cache_dir = *e;
  else if (file.contains("cache_dir")) c.cache_dir = file["cache_dir"];
  c.api_key = env("EMPATHEVAL_API_KEY").value_or("");

  if (c.structural_backend != "llm" && c.structural_backend != "heuristic")
    throw Error("InvalidConfig", "structural backend must be 'llm' or 'heuristic'");
  if (c.parallelism == 0) throw Error("InvalidConfig", "parallelism must be at least 1");
  if (c.components.contains("lexicon") && !c.lexicon)
    throw Error("InvalidConfig", "the lexicon component needs --lexicon");
  if (c.components.contains("human") && !c.journal)
    throw Error("InvalidConfig", "the human component needs --journal");
  return c;
}

json config_echo(const RunConfig& c, const EvalFlags& f) {
  json components = json::array();
  for (const auto& name : c.components) components.push_back(name);
  // The credential is deliberately absent.
  return {{"components", components},
          {"corpus", f.corpus},
          {"responses", f.responses},
          {"judge_model", c.judge_model},
          {"base_url", c.base_url},
          {"cache_dir", c.cache_dir},
          {"parallelism", c.parallelism},
          {"max_retries", c.max_retries},
          {"structural_backend", c.structural_backend},
          {"structural_per_dimension", c.structural_per_dimension},
          {"behavior_mode", c.behavior_mode == JudgeMode::Batch ? "batch" : "single"},
          {"definitions", c.include_definitions},
          {"lexicon", c.lexicon ? json(*c.lexicon) : json(nullptr)},
          {"tau", c.tau},
          {"replay", c.replay},
          {"journal", c.journal ? json(*c.journal) : json(nullptr)}};
}

void write_reports(const fs::path& dir, const Report& report) {
  for (auto fmt : {ReportFormat::Markdown, ReportFormat::Json, ReportFormat::Csv})
    write_file(dir / ("report." + std::string(extension(fmt))), render(report, fmt));
}

int cmd_eval(const EvalFlags& flags, std::ostream& out) {
  const auto config = resolve(flags);
  const auto dialogues = load_dialogues(flags.corpus);
  const auto responses = load_responses(flags.responses, dialogues);
  const fs::path dir = flags.output;
  fs::create_directories(dir);

  std::unique_ptr<JudgeClient> judge;
  auto judge_client = [&]() -> JudgeClient& {
    if (!judge) {
      JudgeClientConfig jc;
      jc.base_url = config.base_url;
      jc.api_key = config.api_key;
      jc.cache_dir = config.cache_dir;
      jc.replay_only = config.replay;
      jc.parallelism = config.parallelism;
      jc.max_retries = config.max_retries;
      judge = std::make_unique<JudgeClient>(jc);
    }
    return *judge;
  };

  json versions{{"tool", kToolVersion}, {"stopwords", kStopwordListVersion}};
  ComponentResults results;

  if (config.components.contains("offline")) {
    const auto scores = score_offline(dialogues, responses);
    write_stream(dir / "offline.csv", [&](std::ostream& o) { write_offline_csv(o, scores); });
    results.offline = aggregate_offline_scores(scores);
    out << "offline: " << scores.size() << " responses scored\n";
  }
  if (config.components.contains("structural")) {
    std::unique_ptr<StructuralBackend> backend;
    if (config.structural_backend == "heuristic") {
      backend = std::make_unique<HeuristicStructuralBackend>();
    } else {
      LlmStructuralOptions opts;
      opts.model_name = config.judge_model;
      opts.per_dimension = config.structural_per_dimension;
      backend = std::make_unique<LlmStructuralBackend>(judge_client(), opts);
      versions["structural_prompt"] = opts.prompt_version;
    }
    versions["structural_backend"] = backend->name();
    const auto scores = classify_all_structural(dialogues, responses, *backend);
    write_stream(dir / "structural.jsonl", [&](std::ostream& o) { write_structural_jsonl(o, scores); });
    results.structural = aggregate_structural(scores);
    out << "structural: " << scores.size() << " responses classified\n";
  }
  if (config.components.contains("behavior")) {
    BehaviorJudgeOptions opts;
    opts.model_name = config.judge_model;
    opts.mode = config.behavior_mode;
    opts.prompt.include_definitions = config.include_definitions;
    versions["behavior_prompt"] = opts.prompt.version;
    const auto verdicts = judge_all_behaviors(dialogues, responses, kAllBehaviors, judge_client(), opts);
    write_stream(dir / "behavior.jsonl", [&](std::ostream& o) { write_verdicts_jsonl(o, verdicts); });
    results.behavior = aggregate_behavior(verdicts);
    out << "behavior: " << verdicts.size() << " verdicts\n";
  }
  if (config.components.contains("lexicon")) {
    const auto lexicon = load_lexicon(*config.lexicon);
    versions["lexicon"] = lexicon.version();
    const auto scores = score_all_lexicon(dialogues, responses, lexicon, config.tau);
    write_stream(dir / "lexicon.jsonl", [&](std::ostream& o) { write_lexicon_jsonl(o, scores); });
    results.lexicon = aggregate_lexicon(scores);
    out << "lexicon: " << scores.size() << " responses scored\n";
  }
  if (config.components.contains("human")) {
    RatingStore store(*config.journal, &dialogues, &responses);
    const auto ratings = store.ratings();
    const auto aggregate = aggregate_ratings(ratings);
    write_stream(dir / "human_ratings.csv", [&](std::ostream& o) { write_ratings_csv(o, ratings); });
    write_stream(dir / "human_aggregates.csv", [&](std::ostream& o) { write_rating_aggregate_csv(o, aggregate); });
    write_file(dir / "human_aggregates.json", to_json(aggregate).dump(2) + "\n");
    results.human = aggregate;
    out << "human: " << ratings.size() << " ratings\n";
  }

  const auto model_order = report_model_order(responses.model_ids());
  write_reports(dir, assemble(model_order, results));

  json manifest{{"timestamp", utc_now()},
                {"config", config_echo(config, flags)},
                {"versions", versions},
                {"model_ids", model_order},
                {"judge",
                 {{"cache_hits", judge ? judge->cache_hits() : 0},
                  {"network_calls", judge ? judge->network_calls() : 0},
                  {"http_attempts", judge ? judge->http_attempts() : 0}}}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  out << "wrote " << dir.string() << "\n";
  return 0;
}

struct ReportFlags {
  std::string input;
  std::optional<std::string> output;
  std::string formats = "markdown,json,csv";
  std::optional<std::string> corpus;
  std::optional<std::string> responses;
};

int cmd_report(const ReportFlags& f, std::ostream& out) {
  const fs::path in_dir = f.input;
  const fs::path out_dir = f.output ? fs::path(*f.output) : in_dir;
  const auto results = load_component_results(in_dir);

  std::vector<std::string> models;
  if (f.responses) {
    if (!f.corpus) throw Error("InvalidConfig", "--responses needs --corpus");
    const auto dialogues = load_dialogues(*f.corpus);
    models = load_responses(*f.responses, dialogues).model_ids();
  } else if (fs::exists(in_dir / "manifest.json")) {
    std::ifstream in(in_dir / "manifest.json", std::ios::binary);
    models = json::parse(in).at("model_ids").get<std::vector<std::string>>();
  } else {
    models = models_in(results);
  }
  const auto report = assemble(report_model_order(models), results);

  fs::create_directories(out_dir);
  for (const auto& name : split_list(f.formats)) {
    const auto fmt = parse_report_format(name);
    if (!fmt) throw Error("InvalidConfig", "unknown report format '" + name + "'");
    const auto path = out_dir / ("report." + std::string(extension(*fmt)));
    write_file(path, render(report, *fmt));
    out << "wrote " << path.string() << "\n";
  }
  return 0;
}

int cmd_validate(const std::string& corpus, const std::optional<std::string>& responses_path, std::ostream& out) {
  const auto dialogues = load_dialogues(corpus);
  out << "corpus: " << dialogues.size() << " dialogues, " << dialogues.emotion_labels().size()
      << " emotion labels\n";
  if (responses_path) {
    const auto responses = load_responses(*responses_path, dialogues);
    out << "responses: " << responses.size() << " from " << responses.model_ids().size() << " models\n";
    for (const auto& model : report_model_order(responses.model_ids())) {
      const auto cov = coverage_report(dialogues, responses).at(model);
      out << "  " << model << ": " << cov.covered << " covered, " << cov.missing << " missing\n";
    }
  }
  out << "ok\n";
  return 0;
}

struct LexiconFlags {
  std::string positives;
  std::string background;
  std::string seeds;
  std::string output;
  std::size_t top_k = 50;
  std::size_t max_n = 3;
  std::size_t min_count = 1;
};

int cmd_build_lexicon(const LexiconFlags& f, std::ostream& out) {
  const auto positives = read_texts(f.positives);
  const auto background = read_texts(f.background);
  std::ifstream seeds_in(f.seeds, std::ios::binary);
  if (!seeds_in) throw Error("FileNotFound", "cannot open " + f.seeds);
  const auto seeds = parse_seed_phrases(seeds_in);
  const auto candidates = build_lexicon(positives, background, seeds, {f.top_k, f.max_n, f.min_count});
  write_stream(f.output, [&](std::ostream& o) { write_lexicon_candidates(o, candidates); });
  std::size_t unassigned = 0;
  for (const auto& c : candidates)
    if (!c.behavior) ++unassigned;
  out << "wrote " << candidates.size() << " candidates (" << unassigned << " unassigned, need review) to "
      << f.output << "\n";
  return 0;
}

struct ServeFlags {
  std::string corpus;
  std::string responses;
  std::string journal = "ratings.jsonl";
  std::string host = "127.0.0.1";
  int port = 8787;
  std::optional<std::string> static_dir;
};

int cmd_serve(const ServeFlags& f, std::ostream& out) {
  const auto dialogues = load_dialogues(f.corpus);
  const auto responses = load_responses(f.responses, dialogues);
  RatingStore store(f.journal, &dialogues, &responses);
  AnnotationServerOptions opts;
  opts.host = f.host;
  opts.port = f.port;
  if (f.static_dir) opts.static_dir = *f.static_dir;
  AnnotationServer server(store, dialogues, responses, opts);

  // Server threads inherit the blocked mask; this thread waits for the signal.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  const int port = server.bind();
  out << "serving on http://" << f.host << ":" << port << " (journal " << f.journal << ")" << std::endl;
  std::thread worker([&] { server.listen(); });
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  worker.join();
  pthread_sigmask(SIG_UNBLOCK, &set, nullptr);
  out << "stopped\n";
  return 0;
}

int exit_code_for(const Error& e) { return e.kind() == ErrorKind::Judge ? 2 : 1; }

}  // namespace

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    const auto t = trim(line);
    if (t.empty() || t.front() == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error("InvalidConfig", "config line " + std::to_string(line_no) + ": expected key = value");
    auto key = trim(std::string_view(t).substr(0, eq));
    auto value = trim(std::string_view(t).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out[key] = value;
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Empathy evaluation toolkit for conversational responses", "empatheval"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string validate_corpus;
  std::optional<std::string> validate_responses;
  auto* validate = app.add_subcommand("validate", "Check a corpus (and optionally a responses file)");
  validate->add_option("--corpus", validate_corpus, "Dialogue corpus (JSONL)")->required();
  validate->add_option("--responses", validate_responses, "Model responses (JSONL)");

  EvalFlags ef;
  auto* eval = app.add_subcommand("eval", "Run evaluation components and write a report");
  eval->add_option("--components", ef.components,
                   "Comma-separated subset of offline,structural,behavior,lexicon,human (default offline)");
  eval->add_option("--corpus", ef.corpus, "Dialogue corpus (JSONL)")->required();
  eval->add_option("--responses", ef.responses, "Model responses (JSONL)")->required();
  eval->add_option("-o,--output", ef.output, "Output directory")->required();
  eval->add_option("--judge-model", ef.judge_model, "Judge model name (default gpt-3.5-turbo)");
  eval->add_option("--base-url", ef.base_url, "Judge endpoint root (env EMPATHEVAL_BASE_URL)");
  eval->add_option("--parallelism", ef.parallelism, "Concurrent judge requests (default 4)");
  eval->add_option("--max-retries", ef.max_retries, "Retries for 429/5xx/connection errors (default 3)");
  eval->add_option("--structural-backend", ef.structural_backend, "llm or heuristic (default llm)");
  eval->add_flag("--structural-per-dimension", ef.structural_per_dimension,
                 "One judge call per structural dimension");
  eval->add_option("--behavior-mode", ef.behavior_mode, "single or batch (default single)");
  eval->add_flag("--no-definitions", ef.no_definitions, "Leave behavior definitions out of judge prompts");
  eval->add_option("--lexicon", ef.lexicon, "Lexicon TSV for the lexicon component");
  eval->add_option("--tau", ef.tau, "Relevance gate threshold (default 0.05)");
  eval->add_flag("--replay", ef.replay, "Serve judge calls from the cache only; a miss is an error");
  eval->add_option("--cache-dir", ef.cache_dir, "Judge response cache (env EMPATHEVAL_CACHE_DIR)");
  eval->add_option("--config", ef.config, "key = value config file");
  eval->add_option("--journal", ef.journal, "Rating journal for the human component");

  ReportFlags rf;
  auto* report = app.add_subcommand("report", "Re-render reports from component files");
  report->add_option("-i,--input", rf.input, "Directory holding component files")->required();
  report->add_option("-o,--output", rf.output, "Output directory (default: the input directory)");
  report->add_option("--formats", rf.formats, "Comma-separated subset of markdown,json,csv")->capture_default_str();
  report->add_option("--corpus", rf.corpus, "Corpus, needed with --responses");
  report->add_option("--responses", rf.responses, "Responses file defining the model set");

  LexiconFlags lf;
  auto* build = app.add_subcommand("build-lexicon", "Mine candidate lexicon phrases for review");
  build->add_option("--positives", lf.positives, "Positive texts (one per line or JSONL with \"text\")")
      ->required();
  build->add_option("--background", lf.background, "Background texts, same format")->required();
  build->add_option("--seeds", lf.seeds, "Seed phrases TSV: phrase<TAB>behavior")->required();
  build->add_option("-o,--output", lf.output, "Output TSV")->required();
  build->add_option("--top-k", lf.top_k, "Candidates kept per behavior")->capture_default_str();
  build->add_option("--max-n", lf.max_n, "Longest n-gram")->capture_default_str()->check(CLI::Range(1, 3));
  build->add_option("--min-count", lf.min_count, "Minimum count in the positives")->capture_default_str();

  ServeFlags sf;
  auto* serve = app.add_subcommand("serve", "Run the human-rating HTTP service");
  serve->add_option("--corpus", sf.corpus, "Dialogue corpus (JSONL)")->required();
  serve->add_option("--responses", sf.responses, "Model responses (JSONL)")->required();
  serve->add_option("--journal", sf.journal, "Rating journal (JSONL, append-only)")->capture_default_str();
  serve->add_option("--host", sf.host, "Bind address")->capture_default_str();
  serve->add_option("--port", sf.port, "Port (0 picks a free one)")->capture_default_str();
  serve->add_option("--static-dir", sf.static_dir, "Directory served at /");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*validate) return cmd_validate(validate_corpus, validate_responses, out);
    if (*eval) return cmd_eval(ef, out);
    if (*report) return cmd_report(rf, out);
    if (*build) return cmd_build_lexicon(lf, out);
    if (*serve) return cmd_serve(sf, out);
  } catch (const Error& e) {
    err << "error: " << e.code() << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: IoError: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    err << "error: MalformedRecord: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace empatheval
