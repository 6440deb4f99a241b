// dialectid: split preparation, classification, evaluation, alignment and
// the annotation service behind one command.

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <httplib.h>

#include "dialectid/agent/backend.hpp"
#include "dialectid/agent/graph.hpp"
#include "dialectid/batch.hpp"
#include "dialectid/dataset.hpp"
#include "dialectid/error.hpp"
#include "dialectid/eval.hpp"
#include "dialectid/features.hpp"
#include "dialectid/json_io.hpp"
#include "dialectid/resources.hpp"
#include "dialectid/service.hpp"

namespace fs = std::filesystem;
using namespace dialectid;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitBackend = 4;

Task require_task(const std::string& name) {
  const auto task = parse_task(name);
  if (!task) throw ConfigError("--task must be binary or eight, not '" + name + "'");
  return *task;
}

// Resolves a data-relative path: absolute or existing paths stay as given.
fs::path data_path(const fs::path& data_dir, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || fs::exists(path)) return path;
  return data_dir / path;
}

struct Common {
  std::string data_dir;
};

// --- prepare-splits -------------------------------------------------------

struct SplitArgs {
  std::string in;
  std::string out;
  std::string task = "binary";
  std::string config;
  std::optional<std::uint64_t> seed;
};

int prepare_splits(const Common& common, const SplitArgs& a) {
  const fs::path data_dir = common.data_dir;
  const Task task = require_task(a.task);
  const auto config = data::DatasetConfig::load(a.config.empty() ? data_dir / "dataset_config.json" : fs::path(a.config));
  auto spec = config.spec(task);
  if (a.seed) spec.seed = *a.seed;

  const auto manifest = data::annotate(data::load_manifest(a.in), config);
  const auto splits = data::sample_splits(manifest, spec);
  fs::create_directories(a.out);
  const std::string prefix = std::string(task_name(task)) + "_";
  data::write_manifest(fs::path(a.out) / (prefix + "train.jsonl"), splits.train);
  data::write_manifest(fs::path(a.out) / (prefix + "validation.jsonl"), splits.validation);
  data::write_manifest(fs::path(a.out) / (prefix + "test.jsonl"), splits.test);
  std::cout << task_name(task) << " splits (seed " << spec.seed << "): train " << splits.train.size()
            << ", validation " << splits.validation.size() << ", test " << splits.test.size() << "\n";
  return 0;
}

// --- classify -------------------------------------------------------------

struct ClassifyArgs {
  std::string in;
  std::string out;
  std::string config;
  std::string task;
  std::string mode;
  std::string backend;
  std::string rules;
  std::string graph;
  std::string replay;
  std::string record;
  std::string run_id;
  std::optional<int> concurrency;
  std::optional<std::uint64_t> seed;
  bool no_attachments = false;
};

int classify(const Common& common, ClassifyArgs a) {
  const fs::path data_dir = common.data_dir;
  Json file_config = Json::object();
  if (!a.config.empty()) {
    try {
      file_config = Json::parse(read_file(a.config));
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    } catch (const Json::exception& e) {
      throw ConfigError(a.config + ": " + e.what());
    }
  }
  const auto setting = [&](const std::string& flag, const char* key, const char* fallback) {
    if (!flag.empty()) return flag;
    return file_config.contains(key) ? file_config[key].get<std::string>() : std::string(fallback);
  };
  const Task task = require_task(setting(a.task, "task", "binary"));
  const std::string mode = setting(a.mode, "mode", "rules");
  const std::string backend_name = setting(a.backend, "backend", "mock");
  const std::string rules_path = setting(a.rules, "rules", "rules/starter.jsonl");
  const std::string graph_path = setting(a.graph, "graph", "graph.json");
  const std::string replay_path = setting(a.replay, "replay", "");
  const std::string record_path = setting(a.record, "record", "");
  const int concurrency = a.concurrency.value_or(file_config.value("concurrency", 1));
  if (concurrency < 1) throw ConfigError("--concurrency must be at least 1");
  if (mode != "rules" && mode != "baseline" && mode != "agent") {
    throw ConfigError("--mode must be rules, baseline or agent");
  }
  if (backend_name != "mock" && backend_name != "replay" && backend_name != "live") {
    throw ConfigError("--backend must be mock, replay or live");
  }
  const std::string run_id = a.run_id.empty() ? mode + "-" + std::string(task_name(task)) : a.run_id;

  // Configuration problems surface before any segment is read.
  const Resources resources = Resources::load(data_dir);
  features::RuleSet rules;
  if (mode == "rules" || backend_name == "mock") {
    const auto path = data_path(data_dir, rules_path);
    if (!fs::is_regular_file(path)) throw ConfigError("rule file " + path.string() + " does not exist");
    rules = features::RuleSet::load(path, resources.chart);
  }

  agent::BackendConfig backend_config;
  if (file_config.contains("backend_config")) backend_config = agent::BackendConfig::from_json(file_config["backend_config"]);
  std::unique_ptr<agent::ChatBackend> backend;
  std::unique_ptr<agent::ChatBackend> recorder;
  std::optional<agent::GraphConfig> graph;
  std::optional<agent::AttachmentLibrary> attachments;
  if (mode != "rules") {
    if (backend_name == "live") {
      const char* key = std::getenv(backend_config.api_key_env.c_str());
      if (!key || !*key) throw ConfigError("live backend needs $" + backend_config.api_key_env + " to be set");
      backend = std::make_unique<agent::HttpBackend>(backend_config, key);
    } else if (backend_name == "replay") {
      if (replay_path.empty()) throw ConfigError("replay backend needs --replay FILE");
      backend = agent::ReplayBackend::load(replay_path);
    } else {
      backend = std::make_unique<agent::MockBackend>(resources, rules);
    }
    if (!record_path.empty()) {
      recorder = std::make_unique<agent::RecordingBackend>(*backend, record_path);
    }
    graph = agent::GraphConfig::load(data_path(data_dir, graph_path), data_dir);
    if (a.no_attachments || !file_config.value("attachments", true)) {
      for (auto& node : graph->nodes) node.attachments = false;
    }
    attachments = agent::AttachmentLibrary::load(data_dir / "attachments");
  }

  const auto segments = data::load_manifest(a.in);
  std::vector<Prediction> predictions;
  if (mode == "rules") {
    predictions = concurrency > 1 ? batch::classify_rules_parallel(segments, rules, task, resources, concurrency)
                                  : batch::classify_rules_serial(segments, rules, task, resources);
    for (auto& p : predictions) p.run_id = run_id;
  } else {
    agent::AgentContext ctx;
    ctx.task = task;
    ctx.graph = &*graph;
    ctx.attachments = &*attachments;
    ctx.backend_config = backend_config;
    ctx.backend = recorder ? recorder.get() : backend.get();
    ctx.run_id = run_id;
    const auto agent_mode = mode == "agent" ? batch::AgentMode::Graph : batch::AgentMode::Baseline;
    predictions = concurrency > 1 ? batch::run_agent_parallel(segments, agent_mode, ctx, concurrency)
                                  : batch::run_agent_serial(segments, agent_mode, ctx);
  }
  write_predictions(a.out, predictions);
  std::size_t errors = 0;
  for (const auto& p : predictions) errors += p.errored() ? 1 : 0;
  std::cout << "classified " << predictions.size() << " segments (" << mode << ", " << task_name(task) << "), "
            << errors << " errored -> " << a.out << "\n";
  // Failures stay per segment; only a run where the backend answered nothing is a failed command.
  const auto backend_failure = [](const Prediction& p) {
    return p.errored() && p.error->kind != ErrorKind::Parse && p.error->kind != ErrorKind::Data;
  };
  if (!predictions.empty() && std::all_of(predictions.begin(), predictions.end(), backend_failure)) {
    std::cerr << "backend error: every segment failed (first: " << error_kind_name(predictions[0].error->kind)
              << ": " << predictions[0].error->message << ")\n";
    return kExitBackend;
  }
  return 0;
}

// --- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  std::vector<std::string> in;
  std::string gold;
  std::string task = "binary";
  std::string out;
};

int evaluate(const EvaluateArgs& a) {
  const Task task = require_task(a.task);
  const auto golds = data::load_manifest(a.gold);
  std::vector<eval::EvalReport> reports;
  Json out = Json::object();
  out["runs"] = Json::array();
  for (const auto& path : a.in) {
    const auto predictions = load_predictions(path);
    if (predictions.empty()) throw DataError(path + ": no predictions");
    const auto tally = eval::confusion(predictions, golds, task);
    if (reports.size() > 0 || a.in.size() > 1) std::cout << "== " << path << "\n";
    Json run;
    run["path"] = path;
    if (tally.matrix.total() > 0) {
      auto report = eval::metrics(tally.matrix);
      report.n = tally.n;
      report.errors = tally.errors;
      report.abstained = tally.abstained;
      std::cout << eval::render_report(report);
      run["report"] = eval::report_to_json(report);
      reports.push_back(report);
    } else if (tally.abstained == 0) {
      throw DataError(path + ": every prediction errored");
    }
    if (tally.abstained > 0) {
      const auto human = eval::human_score(tally);
      std::cout << eval::render_human_score(human, task);
      run["human"] = eval::human_score_to_json(human, task);
    }
    out["runs"].push_back(std::move(run));
  }
  if (a.in.size() > 1) {
    const auto aggregate = eval::aggregate_runs(reports);
    std::cout << "== mean over runs\n" << eval::render_aggregate(aggregate);
    out["aggregate"] = eval::aggregate_to_json(aggregate);
  }
  if (!a.out.empty()) write_file_atomic(a.out, out.dump(2) + "\n");
  return 0;
}

// --- align ----------------------------------------------------------------

struct AlignArgs {
  std::string in;
  std::string id;
  std::optional<std::string> ipa;
  std::optional<std::string> german;
};

int align_cmd(const Common& common, const AlignArgs& a) {
  const Resources resources = Resources::load(common.data_dir);
  if (a.ipa || a.german) {
    if (!a.ipa || !a.german) throw ConfigError("--ipa and --german go together");
    std::cout << align::render_alignment(resources.align_texts(*a.ipa, *a.german));
    return 0;
  }
  if (a.in.empty()) throw ConfigError("align needs --in MANIFEST or --ipa/--german");
  auto segments = data::load_manifest(a.in);
  if (!a.id.empty()) {
    std::erase_if(segments, [&](const Segment& s) { return s.id != a.id; });
    if (segments.empty()) throw DataError("no segment with id " + a.id + " in " + a.in);
  }
  const auto alignments = batch::align_serial(segments, resources);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    std::cout << "== " << segments[i].id << "\n" << align::render_alignment(alignments[i]);
  }
  return 0;
}

// --- serve ----------------------------------------------------------------

struct ServeArgs {
  std::string manifest;
  std::string state_dir = "annotation-state";
  std::string ui_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string task = "binary";
  std::uint64_t seed = 0;
};

httplib::Server* g_server = nullptr;

int serve(const Common& common, const ServeArgs& a) {
  service::ServiceConfig config;
  config.data_dir = common.data_dir;
  config.state_dir = a.state_dir;
  config.manifest = a.manifest;
  config.task = require_task(a.task);
  config.order_seed = a.seed;
  if (!a.ui_dir.empty()) config.ui_dir = fs::path(a.ui_dir);
  if (!fs::is_directory(config.data_dir)) throw ConfigError("data directory not found: " + config.data_dir.string());
  service::AnnotationService svc(config);
  httplib::Server server;
  svc.mount(server);
  g_server = &server;
  std::signal(SIGINT, [](int) { g_server->stop(); });
  std::signal(SIGTERM, [](int) { g_server->stop(); });
  int port = a.port;
  if (port == 0) {
    port = server.bind_to_any_port(a.host);
  } else if (!server.bind_to_port(a.host, port)) {
    throw ConfigError("cannot bind " + a.host + ":" + std::to_string(port));
  }
  if (port < 0) throw ConfigError("cannot bind " + a.host);
  std::cout << "listening on http://" << a.host << ":" << port << std::endl;
  server.listen_after_bind();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Swiss German dialect identification workbench"};
  app.require_subcommand(1);
  Common common;
  common.data_dir = default_data_dir().string();
  app.add_option("--data-dir", common.data_dir, "Linguistic resources, prompts and attachments");

  SplitArgs split_args;
  auto* split_cmd = app.add_subcommand("prepare-splits", "Sample balanced train/validation/test manifests");
  split_cmd->add_option("--in", split_args.in, "Input manifest")->required();
  split_cmd->add_option("--out", split_args.out, "Output directory")->required();
  split_cmd->add_option("--task", split_args.task, "binary or eight");
  split_cmd->add_option("--config", split_args.config, "Dataset config (default: DATA_DIR/dataset_config.json)");
  split_cmd->add_option("--seed", split_args.seed, "Overrides the config seed");

  ClassifyArgs classify_args;
  auto* classify_cmd = app.add_subcommand("classify", "Predict a class for every segment of a manifest");
  classify_cmd->add_option("--in", classify_args.in, "Input manifest")->required();
  classify_cmd->add_option("--out", classify_args.out, "Predictions file (JSON lines)")->required();
  classify_cmd->add_option("--config", classify_args.config, "Run config (JSON)");
  classify_cmd->add_option("--task", classify_args.task, "binary or eight");
  classify_cmd->add_option("--mode", classify_args.mode, "rules, baseline or agent");
  classify_cmd->add_option("--backend", classify_args.backend, "mock, replay or live");
  classify_cmd->add_option("--rules", classify_args.rules, "Rule file");
  classify_cmd->add_option("--graph", classify_args.graph, "Agent graph config");
  classify_cmd->add_option("--replay", classify_args.replay, "Replay file for --backend replay");
  classify_cmd->add_option("--record", classify_args.record, "Append every exchange to this replay file");
  classify_cmd->add_option("--run-id", classify_args.run_id, "Run identifier stored on predictions");
  classify_cmd->add_option("--concurrency", classify_args.concurrency, "Segments processed at once");
  classify_cmd->add_option("--seed", classify_args.seed, "Accepted for uniformity; classification draws no randomness");
  classify_cmd->add_flag("--no-attachments", classify_args.no_attachments, "Send node prompts without reference material");

  EvaluateArgs evaluate_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score prediction files against a gold manifest");
  evaluate_cmd->add_option("--in", evaluate_args.in, "Predictions file; repeat for multi-run averages")->required();
  evaluate_cmd->add_option("--gold", evaluate_args.gold, "Gold manifest")->required();
  evaluate_cmd->add_option("--task", evaluate_args.task, "binary or eight");
  evaluate_cmd->add_option("--out", evaluate_args.out, "JSON report file");

  AlignArgs align_args;
  auto* align_sub = app.add_subcommand("align", "Render phone alignments against Standard German");
  align_sub->add_option("--in", align_args.in, "Manifest");
  align_sub->add_option("--id", align_args.id, "Only this segment");
  align_sub->add_option("--ipa", align_args.ipa, "IPA transcription");
  align_sub->add_option("--german", align_args.german, "Standard German text");

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the annotation service");
  serve_cmd->add_option("--manifest", serve_args.manifest, "Manifest to annotate (with gold labels)")->required();
  serve_cmd->add_option("--state-dir", serve_args.state_dir, "Where session records are kept");
  serve_cmd->add_option("--ui-dir", serve_args.ui_dir, "Static annotation UI bundle");
  serve_cmd->add_option("--host", serve_args.host);
  serve_cmd->add_option("--port", serve_args.port, "0 picks a free port");
  serve_cmd->add_option("--task", serve_args.task, "binary or eight");
  serve_cmd->add_option("--seed", serve_args.seed, "Presentation order seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*split_cmd) return prepare_splits(common, split_args);
    if (*classify_cmd) return classify(common, classify_args);
    if (*evaluate_cmd) return evaluate(evaluate_args);
    if (*align_sub) return align_cmd(common, align_args);
    if (*serve_cmd) return serve(common, serve_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const agent::BackendError& e) {
    std::cerr << "backend error (" << error_kind_name(e.kind()) << "): " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
