// hestia: generate scenarios, train the predictor, run placement episodes.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hestia/digest.h"
#include "hestia/errors.h"
#include "hestia/experiment.h"
#include "hestia/predictor.h"
#include "hestia/schedulers.h"
#include "hestia/scorer.h"
#include "hestia/simulator.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hestia {
namespace {

struct GlobalOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed_catalog, seed_trace, seed_placement, seed_oracle, seed_training;
};

// Scenario paths given on a subcommand line.
struct PathOptions {
  std::string topology, catalog, trace, checkpoint;
};

ExperimentConfig ResolveConfig(const GlobalOptions& g, const PathOptions& p) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : ExperimentConfig::Load(g.config);
  if (!g.out.empty()) c.paths.out_dir = g.out;
  if (g.seed_catalog) c.seeds.catalog = *g.seed_catalog;
  if (g.seed_trace) c.seeds.trace = *g.seed_trace;
  if (g.seed_placement) c.seeds.placement = *g.seed_placement;
  if (g.seed_oracle) c.seeds.oracle = *g.seed_oracle;
  if (g.seed_training) c.seeds.training = *g.seed_training;
  if (!p.topology.empty()) c.paths.topology = p.topology;
  if (!p.catalog.empty()) c.paths.catalog = p.catalog;
  if (!p.trace.empty()) c.paths.trace = p.trace;
  if (!p.checkpoint.empty()) c.paths.checkpoint = p.checkpoint;
  return c;
}

void RequireFile(const std::string& path, const std::string& what) {
  if (!path.empty() && !fs::is_regular_file(path)) throw ValidationError(what + " file not found: " + path);
}

void RequireInputs(const ExperimentConfig& c) {
  RequireFile(c.paths.topology, "topology");
  RequireFile(c.paths.catalog, "catalog");
  RequireFile(c.paths.trace, "trace");
}

fs::path OutDir(const ExperimentConfig& c) {
  fs::path dir = c.paths.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void PrintDigest(const fs::path& path) { std::cout << "digest " << path.string() << " " << FileSha256Hex(path) << "\n"; }

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << text;
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

void WriteJson(const fs::path& path, const json& doc) { WriteText(path, doc.dump(2) + "\n"); }

json Provenance(const ExperimentConfig& c) {
  return {{"schema_version", kSchemaVersion}, {"experiment", c.ProvenanceJson()}, {"seeds", c.seeds.ToJson()}};
}

std::string Fmt(double v, const char* spec = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Vocabulary and socket shape of a checkpoint must match the scenario it is used on.
void CheckModelMatches(const PredictorConfig& model, const PredictorConfig& scenario, const std::string& path) {
  if (model.service_vocab != scenario.service_vocab || model.rps_ref != scenario.rps_ref) {
    throw ValidationError("checkpoint " + path + " does not match the scenario: service vocabulary differs");
  }
  if (model.cpu_vocab != scenario.cpu_vocab) {
    throw ValidationError("checkpoint " + path + " does not match the scenario: cpu vocabulary differs");
  }
  if (model.socket_hts != scenario.socket_hts || model.hts_per_core != scenario.hts_per_core) {
    throw ValidationError("checkpoint " + path + " does not match the scenario: socket shape differs");
  }
}

// ---- gen ----

struct TopologyFlags {
  std::optional<int> servers, sockets, cores, hts_per_core;
  std::vector<std::string> cpu_models;
};

int CmdGenTopology(const GlobalOptions& g, const TopologyFlags& f) {
  ExperimentConfig c = ResolveConfig(g, {});
  if (f.servers) c.topology.servers = *f.servers;
  if (f.sockets) c.topology.sockets = *f.sockets;
  if (f.cores) c.topology.cores_per_socket = *f.cores;
  if (f.hts_per_core) c.topology.hts_per_core = *f.hts_per_core;
  if (!f.cpu_models.empty()) c.topology.cpu_models = f.cpu_models;
  const ClusterTopology topo = GenerateTopology(c.topology);
  json doc = topo.ToJson();
  doc["generator"] = c.topology.ToJson();
  const fs::path path = OutDir(c) / "topology.json";
  WriteJson(path, doc);
  std::cout << "servers " << topo.servers().size() << " total_hts " << topo.total_hts() << "\n";
  PrintDigest(path);
  return 0;
}

int CmdGenCatalog(const GlobalOptions& g, std::optional<int> services, std::optional<std::uint64_t> seed) {
  ExperimentConfig c = ResolveConfig(g, {});
  if (services) c.catalog.n_services = *services;
  if (seed) c.seeds.catalog = *seed;
  const ServiceCatalog catalog = GenerateCatalog(c.catalog, c.seeds.catalog);
  json doc = catalog.ToJson();
  doc["generator"] = {{"config", c.catalog.ToJson()}, {"seed", c.seeds.catalog}};
  const fs::path path = OutDir(c) / "catalog.json";
  WriteJson(path, doc);
  std::cout << "services " << catalog.size() << "\n";
  PrintDigest(path);
  return 0;
}

int CmdGenTrace(const GlobalOptions& g, PathOptions p, std::optional<std::uint64_t> seed,
                std::optional<double> occupancy) {
  p.trace.clear();
  ExperimentConfig c = ResolveConfig(g, p);
  c.paths.trace.clear();
  if (seed) c.seeds.trace = *seed;
  if (occupancy) c.occupancy = *occupancy;
  RequireInputs(c);
  const Scenario scenario = BuildScenario(c);
  const Trace trace = BuildTrace(c, scenario, c.seeds.trace);
  const fs::path path = OutDir(c) / "trace.jsonl";
  SaveTrace(trace, path);
  int hts = 0;
  for (const auto& r : trace.requests) hts += r.requested_ht;
  std::cout << "requests " << trace.requests.size() << " requested_hts " << hts << "\n";
  PrintDigest(path);
  return 0;
}

// ---- train ----

struct TrainFlags {
  std::string model = "attention";
  std::optional<int> samples, epochs, heldout;
};

void ApplyTrainFlags(ExperimentConfig& c, const TrainFlags& f) {
  if (f.samples) c.collect.n_samples = *f.samples;
  if (f.epochs) c.train.epochs = *f.epochs;
  if (f.heldout) c.heldout_samples = *f.heldout;
}

int CmdTrain(const GlobalOptions& g, const PathOptions& p, const TrainFlags& f) {
  if (f.model != "attention" && f.model != "mlp") throw ValidationError("--model must be attention or mlp");
  ExperimentConfig c = ResolveConfig(g, p);
  ApplyTrainFlags(c, f);
  RequireFile(c.paths.topology, "topology");
  RequireFile(c.paths.catalog, "catalog");
  const Scenario scenario = BuildScenario(c);
  const fs::path dir = OutDir(c);
  TrainReport report;
  fs::path checkpoint;
  if (f.model == "attention") {
    TrainedModels trained = TrainAttention(c, scenario);
    report = std::move(trained.report);
    checkpoint = dir / "checkpoint.json";
    SaveCheckpoint(trained.attention, checkpoint, Provenance(c));
  } else {
    const TrainingDataset train_set = CollectFor(c, scenario, c.collect.n_samples, c.seeds.placement);
    const TrainingDataset heldout = CollectFor(c, scenario, c.heldout_samples, c.seeds.placement + 1);
    MlpPredictor model(ModelConfigFor(c, scenario), c.seeds.training);
    TrainConfig tc = c.train;
    tc.seed = c.seeds.training;
    report = Train(model, train_set.samples, heldout.samples, tc);
    checkpoint = dir / "mlp_checkpoint.json";
    SaveCheckpoint(model, checkpoint, Provenance(c));
  }
  json doc = Provenance(c);
  doc["kind"] = "train_report";
  doc["model"] = f.model;
  doc["report"] = report.ToJson();
  const fs::path report_path = dir / (f.model == "attention" ? "train_report.json" : "mlp_train_report.json");
  WriteJson(report_path, doc);
  std::cout << "model " << f.model << " final_train_mse " << Fmt(report.final_train_mse) << " heldout_mae "
            << Fmt(report.heldout.mae) << " heldout_rmse " << Fmt(report.heldout.rmse) << "\n";
  PrintDigest(checkpoint);
  PrintDigest(report_path);
  return 0;
}

// ---- simulate / compare ----

struct SchedulerFlags {
  std::optional<std::string> server_policy;
  std::optional<int> window_step, max_candidates, paragon_classes;
  std::optional<double> kambadur_threshold, rcpu_reserve;
  bool oracle_predictor = false;
};

void ApplySchedulerFlags(ExperimentConfig& c, const SchedulerFlags& f) {
  json p = c.scheduler_params.ToJson();
  if (f.server_policy) p["server_policy"] = *f.server_policy;
  if (f.window_step) p["window_step"] = *f.window_step;
  if (f.max_candidates) p["max_candidates"] = *f.max_candidates;
  if (f.paragon_classes) p["paragon_classes"] = *f.paragon_classes;
  if (f.kambadur_threshold) p["kambadur_threshold"] = *f.kambadur_threshold;
  if (f.rcpu_reserve) p["rcpu_reserve"] = *f.rcpu_reserve;
  c.scheduler_params = SchedulerParams::FromJson(p);
  c.scheduler_params.Validate();
}

std::vector<SchedulerKind> ParseKinds(const std::vector<std::string>& names) {
  if (names.empty()) throw ValidationError("no schedulers listed");
  std::vector<SchedulerKind> kinds;
  for (const auto& n : names) {
    const SchedulerKind k = ParseSchedulerKind(n);
    if (std::find(kinds.begin(), kinds.end(), k) != kinds.end()) throw ValidationError("scheduler listed twice: " + n);
    kinds.push_back(k);
  }
  return kinds;
}

// Owns whatever backs the Hestia scheduler's predictions.
struct PredictorHandle {
  std::optional<AttentionPredictor> model;
  std::unique_ptr<InterferencePredictor> interference;
};

// Validates files up front, before any episode runs.
void PreflightEpisodes(const ExperimentConfig& c, const std::vector<SchedulerKind>& kinds, bool oracle_predictor) {
  RequireInputs(c);
  const bool hestia = std::find(kinds.begin(), kinds.end(), SchedulerKind::kHestia) != kinds.end();
  if (hestia && !oracle_predictor) {
    if (c.paths.checkpoint.empty()) throw ValidationError("hestia needs a checkpoint (--checkpoint)");
    RequireFile(c.paths.checkpoint, "checkpoint");
  }
}

PredictorHandle MakePredictor(const ExperimentConfig& c, const Scenario& scenario,
                              const std::vector<SchedulerKind>& kinds, bool oracle_predictor) {
  PredictorHandle h;
  if (std::find(kinds.begin(), kinds.end(), SchedulerKind::kHestia) == kinds.end()) return h;
  if (oracle_predictor) {
    h.interference = std::make_unique<OracleInterference>(scenario.oracle);
    return h;
  }
  h.model.emplace(LoadCheckpoint(c.paths.checkpoint));
  CheckModelMatches(h.model->config(), ModelConfigFor(c, scenario), c.paths.checkpoint);
  h.interference = std::make_unique<ModelInterference>(*h.model);
  return h;
}

int CmdSimulate(const GlobalOptions& g, const PathOptions& p, const std::string& scheduler,
                const SchedulerFlags& f) {
  ExperimentConfig c = ResolveConfig(g, p);
  ApplySchedulerFlags(c, f);
  const std::vector<SchedulerKind> kinds = ParseKinds({scheduler});
  PreflightEpisodes(c, kinds, f.oracle_predictor);
  const Scenario scenario = BuildScenario(c);
  const Trace trace = BuildTrace(c, scenario, c.seeds.trace);
  const PredictorHandle predictor = MakePredictor(c, scenario, kinds, f.oracle_predictor);
  auto reports = RunCompare(c, scenario, trace, kinds, predictor.interference.get());
  const SimulationReport& r = reports.front();
  std::cout << "scheduler " << r.scheduler << " core_equivalents " << Fmt(r.core_equivalents, "%.4f")
            << " rejections " << r.rejections << "\n";
  for (const auto& path : r.Write(OutDir(c), r.scheduler)) PrintDigest(path);
  return 0;
}

int CmdCompare(const GlobalOptions& g, const PathOptions& p, std::vector<std::string> names,
               const SchedulerFlags& f) {
  ExperimentConfig c = ResolveConfig(g, p);
  ApplySchedulerFlags(c, f);
  if (names.empty()) names = c.schedulers;
  const std::vector<SchedulerKind> kinds = ParseKinds(names);
  PreflightEpisodes(c, kinds, f.oracle_predictor);
  const Scenario scenario = BuildScenario(c);
  const Trace trace = BuildTrace(c, scenario, c.seeds.trace);
  const PredictorHandle predictor = MakePredictor(c, scenario, kinds, f.oracle_predictor);
  const auto reports = RunCompare(c, scenario, trace, kinds, predictor.interference.get());
  const fs::path dir = OutDir(c);

  std::vector<fs::path> written;
  for (const auto& r : reports) {
    for (auto& path : r.Write(dir, r.scheduler)) written.push_back(std::move(path));
  }

  std::vector<Metrics> rows;
  for (const auto& r : reports) rows.push_back(ComputeMetrics(r, &reports.front()));
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rows[a].reduction_pct > rows[b].reduction_pct; });

  std::ostringstream csv;
  csv << "scheduler,total_cpu_cores,cpu_core_reduction_pct,rejection_rate\n";
  json summary = Provenance(c);
  summary["kind"] = "compare_summary";
  summary["baseline"] = rows.front().scheduler;
  summary["trace_digest"] = reports.front().trace_digest;
  summary["rows"] = json::array();
  std::printf("%-14s %16s %12s\n", "Scheduler", "total_CPU_Cores", "Reduction(%)");
  for (std::size_t i : order) {
    const Metrics& m = rows[i];
    csv << m.scheduler << "," << Fmt(m.core_equivalents) << "," << Fmt(m.reduction_pct) << ","
        << Fmt(m.rejection_rate) << "\n";
    summary["rows"].push_back({{"scheduler", m.scheduler},
                               {"total_cpu_cores", m.core_equivalents},
                               {"cpu_core_reduction_pct", m.reduction_pct},
                               {"rejection_rate", m.rejection_rate}});
    std::printf("%-14s %16.4f %12.4f\n", m.scheduler.c_str(), m.core_equivalents, m.reduction_pct);
  }
  std::fflush(stdout);

  // Per-service increase, one column per scheduler in listed order.
  std::ostringstream inc;
  inc << "service_id";
  for (const auto& m : rows) inc << "," << m.scheduler;
  inc << "\n";
  std::map<int, std::map<std::string, double>> by_service;
  for (const auto& m : rows) {
    for (const auto& s : m.services) by_service[s.service_id][m.scheduler] = s.mean_increase;
  }
  for (const auto& [service, cols] : by_service) {
    inc << service;
    for (const auto& m : rows) {
      auto it = cols.find(m.scheduler);
      inc << ",";
      if (it != cols.end()) inc << Fmt(it->second);
    }
    inc << "\n";
  }

  const fs::path csv_path = dir / "summary.csv", json_path = dir / "summary.json", inc_path = dir / "service_increase.csv";
  WriteText(csv_path, csv.str());
  WriteJson(json_path, summary);
  WriteText(inc_path, inc.str());
  written.push_back(csv_path);
  written.push_back(json_path);
  written.push_back(inc_path);
  for (const auto& path : written) PrintDigest(path);
  return 0;
}

// ---- eval-predictor ----

int CmdEvalPredictor(const GlobalOptions& g, const PathOptions& p, const std::string& mlp_checkpoint,
                     const TrainFlags& f) {
  ExperimentConfig c = ResolveConfig(g, p);
  ApplyTrainFlags(c, f);
  RequireFile(c.paths.topology, "topology");
  RequireFile(c.paths.catalog, "catalog");
  if (c.paths.checkpoint.empty()) throw ValidationError("eval-predictor needs an attention checkpoint (--checkpoint)");
  RequireFile(c.paths.checkpoint, "checkpoint");
  RequireFile(mlp_checkpoint, "mlp checkpoint");

  const Scenario scenario = BuildScenario(c);
  const PredictorConfig model_config = ModelConfigFor(c, scenario);
  const AttentionPredictor attention = LoadCheckpoint(c.paths.checkpoint);
  CheckModelMatches(attention.config(), model_config, c.paths.checkpoint);
  std::optional<MlpPredictor> mlp;
  if (!mlp_checkpoint.empty()) {
    mlp.emplace(LoadMlpCheckpoint(mlp_checkpoint));
    CheckModelMatches(mlp->config(), model_config, mlp_checkpoint);
  }

  const TrainingDataset train_set = CollectFor(c, scenario, c.collect.n_samples, c.seeds.placement);
  const TrainingDataset heldout = CollectFor(c, scenario, c.heldout_samples, c.seeds.placement + 1);
  if (!mlp) {
    mlp.emplace(model_config, c.seeds.training);
    TrainConfig tc = c.train;
    tc.seed = c.seeds.training;
    Train(*mlp, train_set.samples, heldout.samples, tc);
  }
  const AvgPredictor avg = AvgPredictor::FromSamples(train_set.samples);
  // Noise-free labels are the reference the oracle row is checked against.
  ExperimentConfig clean = c;
  clean.noise_std = 0.0;
  const Scenario clean_scenario = BuildScenario(clean);
  const TrainingDataset clean_heldout = CollectFor(clean, clean_scenario, c.heldout_samples, c.seeds.placement + 1);
  const OraclePredictor oracle(scenario.oracle, model_config);

  struct Row {
    std::string name;
    ErrorMetrics m;
  };
  const std::vector<Row> rows = {{"oracle", Evaluate(oracle, clean_heldout.samples)},
                                 {"avg", Evaluate(avg, heldout.samples)},
                                 {"mlp", Evaluate(*mlp, heldout.samples)},
                                 {"attention", Evaluate(attention, heldout.samples)}};

  std::ostringstream csv;
  csv << "predictor,mae,rmse,count\n";
  json doc = Provenance(c);
  doc["kind"] = "predictor_eval";
  doc["heldout_provenance"] = heldout.provenance;
  doc["rows"] = json::array();
  std::printf("%-10s %10s %10s\n", "predictor", "MAE", "RMSE");
  for (const auto& r : rows) {
    csv << r.name << "," << Fmt(r.m.mae) << "," << Fmt(r.m.rmse) << "," << r.m.count << "\n";
    doc["rows"].push_back({{"predictor", r.name}, {"mae", r.m.mae}, {"rmse", r.m.rmse}, {"count", r.m.count}});
    std::printf("%-10s %10.6f %10.6f\n", r.name.c_str(), r.m.mae, r.m.rmse);
  }
  std::fflush(stdout);
  const fs::path dir = OutDir(c);
  const fs::path csv_path = dir / "predictor_eval.csv", json_path = dir / "predictor_eval.json";
  WriteText(csv_path, csv.str());
  WriteJson(json_path, doc);
  PrintDigest(csv_path);
  PrintDigest(json_path);
  return 0;
}

void AddSchedulerFlags(CLI::App* cmd, SchedulerFlags& f) {
  cmd->add_option("--server-policy", f.server_policy, "spread or stack");
  cmd->add_option("--window-step", f.window_step);
  cmd->add_option("--max-candidates", f.max_candidates, "per socket");
  cmd->add_option("--kambadur-threshold", f.kambadur_threshold);
  cmd->add_option("--rcpu-reserve", f.rcpu_reserve);
  cmd->add_option("--paragon-classes", f.paragon_classes);
  cmd->add_flag("--oracle-predictor", f.oracle_predictor, "hestia scores with the noise-free oracle");
}

void AddPathFlags(CLI::App* cmd, PathOptions& p, bool trace, bool checkpoint) {
  cmd->add_option("--topology", p.topology, "topology JSON");
  cmd->add_option("--catalog", p.catalog, "service catalog JSON");
  if (trace) cmd->add_option("--trace", p.trace, "trace JSONL");
  if (checkpoint) cmd->add_option("--checkpoint", p.checkpoint, "attention checkpoint");
}

void AddTrainFlags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--samples", f.samples, "training sockets");
  cmd->add_option("--epochs", f.epochs);
  cmd->add_option("--heldout", f.heldout, "held-out sockets");
}

int Main(int argc, char** argv) {
  CLI::App app{"Hyperthread-level interference-aware placement simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "experiment config JSON");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--seed-catalog", g.seed_catalog);
  app.add_option("--seed-trace", g.seed_trace);
  app.add_option("--seed-placement", g.seed_placement);
  app.add_option("--seed-oracle", g.seed_oracle);
  app.add_option("--seed-training", g.seed_training);

  int rc = 0;

  auto* gen = app.add_subcommand("gen", "generate scenario files");
  gen->require_subcommand(1);
  TopologyFlags topo_flags;
  auto* gen_topo = gen->add_subcommand("topology", "write topology.json");
  gen_topo->add_option("--servers", topo_flags.servers);
  gen_topo->add_option("--sockets", topo_flags.sockets);
  gen_topo->add_option("--cores", topo_flags.cores, "cores per socket");
  gen_topo->add_option("--hts-per-core", topo_flags.hts_per_core);
  gen_topo->add_option("--cpu-models", topo_flags.cpu_models, "assigned round-robin")->delimiter(',');
  gen_topo->callback([&] { rc = CmdGenTopology(g, topo_flags); });

  std::optional<int> n_services;
  std::optional<std::uint64_t> catalog_seed;
  auto* gen_cat = gen->add_subcommand("catalog", "write catalog.json");
  gen_cat->add_option("--services", n_services);
  gen_cat->add_option("--seed", catalog_seed, "same as --seed-catalog");
  gen_cat->callback([&] { rc = CmdGenCatalog(g, n_services, catalog_seed); });

  PathOptions trace_paths;
  std::optional<std::uint64_t> trace_seed;
  std::optional<double> occupancy;
  auto* gen_trace = gen->add_subcommand("trace", "write trace.jsonl");
  AddPathFlags(gen_trace, trace_paths, false, false);
  gen_trace->add_option("--seed", trace_seed, "same as --seed-trace");
  gen_trace->add_option("--occupancy", occupancy, "HT budget as a fraction of cluster HTs");
  gen_trace->callback([&] { rc = CmdGenTrace(g, trace_paths, trace_seed, occupancy); });

  PathOptions train_paths;
  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "collect oracle data and train a predictor");
  AddPathFlags(train, train_paths, false, false);
  AddTrainFlags(train, train_flags);
  train->add_option("--model", train_flags.model, "attention or mlp");
  train->callback([&] { rc = CmdTrain(g, train_paths, train_flags); });

  PathOptions sim_paths;
  SchedulerFlags sim_flags;
  std::string scheduler;
  auto* simulate = app.add_subcommand("simulate", "run one placement episode");
  AddPathFlags(simulate, sim_paths, true, true);
  simulate->add_option("--scheduler", scheduler, "hestia|ff|socket-spread|paragon|kambadur|rcpu")->required();
  AddSchedulerFlags(simulate, sim_flags);
  simulate->callback([&] { rc = CmdSimulate(g, sim_paths, scheduler, sim_flags); });

  PathOptions cmp_paths;
  SchedulerFlags cmp_flags;
  std::vector<std::string> schedulers;
  auto* compare = app.add_subcommand("compare", "run several schedulers on one trace");
  AddPathFlags(compare, cmp_paths, true, true);
  compare->add_option("--schedulers", schedulers, "first listed is the baseline")->delimiter(',');
  AddSchedulerFlags(compare, cmp_flags);
  compare->callback([&] { rc = CmdCompare(g, cmp_paths, schedulers, cmp_flags); });

  PathOptions eval_paths;
  TrainFlags eval_flags;
  std::string mlp_checkpoint;
  auto* eval = app.add_subcommand("eval-predictor", "MAE/RMSE of oracle, avg, mlp and attention");
  AddPathFlags(eval, eval_paths, false, true);
  AddTrainFlags(eval, eval_flags);
  eval->add_option("--mlp-checkpoint", mlp_checkpoint, "trained on the fly when absent");
  eval->callback([&] { rc = CmdEvalPredictor(g, eval_paths, mlp_checkpoint, eval_flags); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  return rc;
}

}  // namespace
}  // namespace hestia

int main(int argc, char** argv) {
  try {
    return hestia::Main(argc, argv);
  } catch (const hestia::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}
