#include "hestia/experiment.h"

#include <fstream>

#include "hestia/digest.h"
#include "hestia/errors.h"

namespace hestia {

using nlohmann::json;

json TopologyGenConfig::ToJson() const {
  return {{"servers", servers},
          {"sockets", sockets},
          {"cores_per_socket", cores_per_socket},
          {"hts_per_core", hts_per_core},
          {"cpu_models", cpu_models}};
}

TopologyGenConfig TopologyGenConfig::FromJson(const json& doc) {
  TopologyGenConfig c;
  c.servers = doc.value("servers", c.servers);
  c.sockets = doc.value("sockets", c.sockets);
  c.cores_per_socket = doc.value("cores_per_socket", c.cores_per_socket);
  c.hts_per_core = doc.value("hts_per_core", c.hts_per_core);
  c.cpu_models = doc.value("cpu_models", c.cpu_models);
  return c;
}

ClusterTopology GenerateTopology(const TopologyGenConfig& config) {
  if (config.servers < 1) throw ValidationError("topology: servers must be >= 1");
  if (config.cpu_models.empty()) throw ValidationError("topology: cpu_models must not be empty");
  std::vector<ServerTopology> servers;
  for (int i = 0; i < config.servers; ++i) {
    servers.push_back({i, config.cpu_models[i % config.cpu_models.size()], config.sockets, config.cores_per_socket,
                       config.hts_per_core});
  }
  return ClusterTopology(std::move(servers));
}

json Seeds::ToJson() const {
  return {{"catalog", catalog}, {"trace", trace}, {"placement", placement}, {"oracle", oracle}, {"training", training}};
}

Seeds Seeds::FromJson(const json& doc) {
  Seeds s;
  s.catalog = doc.value("catalog", s.catalog);
  s.trace = doc.value("trace", s.trace);
  s.placement = doc.value("placement", s.placement);
  s.oracle = doc.value("oracle", s.oracle);
  s.training = doc.value("training", s.training);
  return s;
}

json ExperimentConfig::ToJson() const {
  json model_dims = {{"embed_dim", model.embed_dim},
                     {"key_dim", model.key_dim},
                     {"ffn_hidden", model.ffn_hidden},
                     {"mlp_hidden", model.mlp_hidden},
                     {"skip_connections", model.skip_connections}};
  return {{"schema_version", kSchemaVersion},
          {"scenario", scenario},
          {"paths",
           {{"topology", paths.topology},
            {"catalog", paths.catalog},
            {"trace", paths.trace},
            {"checkpoint", paths.checkpoint},
            {"out_dir", paths.out_dir}}},
          {"seeds", seeds.ToJson()},
          {"topology", topology.ToJson()},
          {"catalog", catalog.ToJson()},
          {"occupancy", occupancy},
          {"trace", trace.ToJson()},
          {"noise_std", noise_std},
          {"schedulers", schedulers},
          {"scheduler_params", scheduler_params.ToJson()},
          {"model", model_dims},
          {"train", train.ToJson()},
          {"collect", collect.ToJson()},
          {"heldout_samples", heldout_samples}};
}

json ExperimentConfig::ProvenanceJson() const {
  json doc = ToJson();
  json inputs = json::object();
  for (const auto& [key, value] : doc.at("paths").items()) {
    const std::string path = value.get<std::string>();
    if (key == "out_dir" || path.empty()) continue;
    inputs[key] = {{"file", std::filesystem::path(path).filename().string()}, {"sha256", FileSha256Hex(path)}};
  }
  doc.erase("paths");
  doc["inputs"] = std::move(inputs);
  return doc;
}

ExperimentConfig ExperimentConfig::FromJson(const json& doc) {
  ExperimentConfig c;
  try {
    if (doc.contains("schema_version") && doc.at("schema_version").get<int>() != kSchemaVersion) {
      throw ValidationError("config: unsupported schema_version");
    }
    c.scenario = doc.value("scenario", c.scenario);
    if (doc.contains("paths")) {
      const json& p = doc.at("paths");
      c.paths.topology = p.value("topology", "");
      c.paths.catalog = p.value("catalog", "");
      c.paths.trace = p.value("trace", "");
      c.paths.checkpoint = p.value("checkpoint", "");
      c.paths.out_dir = p.value("out_dir", c.paths.out_dir);
    }
    if (doc.contains("seeds")) c.seeds = Seeds::FromJson(doc.at("seeds"));
    if (doc.contains("topology")) c.topology = TopologyGenConfig::FromJson(doc.at("topology"));
    if (doc.contains("catalog")) c.catalog = CatalogGenConfig::FromJson(doc.at("catalog"));
    c.occupancy = doc.value("occupancy", c.occupancy);
    if (doc.contains("trace")) c.trace = TraceGenConfig::FromJson(doc.at("trace"));
    c.noise_std = doc.value("noise_std", c.noise_std);
    c.schedulers = doc.value("schedulers", c.schedulers);
    if (doc.contains("scheduler_params")) c.scheduler_params = SchedulerParams::FromJson(doc.at("scheduler_params"));
    if (doc.contains("model")) {
      const json& m = doc.at("model");
      c.model.embed_dim = m.value("embed_dim", c.model.embed_dim);
      c.model.key_dim = m.value("key_dim", c.model.key_dim);
      c.model.ffn_hidden = m.value("ffn_hidden", c.model.ffn_hidden);
      c.model.mlp_hidden = m.value("mlp_hidden", c.model.mlp_hidden);
      c.model.skip_connections = m.value("skip_connections", c.model.skip_connections);
    }
    if (doc.contains("train")) c.train = TrainConfig::FromJson(doc.at("train"));
    if (doc.contains("collect")) c.collect = CollectConfig::FromJson(doc.at("collect"));
    c.heldout_samples = doc.value("heldout_samples", c.heldout_samples);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (!(c.occupancy > 0.0 && c.occupancy <= 1.0)) throw ValidationError("config: occupancy must be in (0, 1]");
  if (c.noise_std < 0.0) throw ValidationError("config: noise_std must be >= 0");
  for (const auto& s : c.schedulers) ParseSchedulerKind(s);
  return c;
}

ExperimentConfig ExperimentConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return FromJson(doc);
}

Scenario BuildScenario(const ExperimentConfig& config) {
  Scenario s;
  s.topology = std::make_shared<const ClusterTopology>(
      config.paths.topology.empty() ? GenerateTopology(config.topology) : LoadTopology(config.paths.topology));
  s.catalog = config.paths.catalog.empty() ? GenerateCatalog(config.catalog, config.seeds.catalog)
                                           : LoadCatalog(config.paths.catalog);
  for (const auto& server : s.topology->servers()) s.catalog.SpeedFactor(server.cpu_model);
  s.oracle = ContentionModel{s.catalog, config.noise_std, config.seeds.oracle};
  s.oracle.Validate();
  return s;
}

PredictorConfig ModelConfigFor(const ExperimentConfig& config, const Scenario& scenario) {
  const auto& first = scenario.topology->servers().front();
  for (const auto& server : scenario.topology->servers()) {
    if (server.hts_per_socket() != first.hts_per_socket() || server.hts_per_core != first.hts_per_core) {
      throw ValidationError("predictor: all servers must share one socket shape");
    }
  }
  PredictorConfig m = PredictorConfig::ForCatalog(scenario.catalog, first.hts_per_socket(), first.hts_per_core);
  m.embed_dim = config.model.embed_dim;
  m.key_dim = config.model.key_dim;
  m.ffn_hidden = config.model.ffn_hidden;
  m.mlp_hidden = config.model.mlp_hidden;
  m.skip_connections = config.model.skip_connections;
  m.Validate();
  return m;
}

Trace BuildTrace(const ExperimentConfig& config, const Scenario& scenario, std::uint64_t trace_seed) {
  if (!config.paths.trace.empty()) return LoadTrace(config.paths.trace, &scenario.catalog);
  TraceGenConfig gen = config.trace;
  if (gen.mix == TraceGenConfig::Mix::kHtBudget && gen.ht_budget == 0) {
    gen.ht_budget = static_cast<int>(config.occupancy * scenario.topology->total_hts());
  }
  return GenerateTrace(scenario.catalog, gen, trace_seed);
}

TrainingDataset CollectFor(const ExperimentConfig& config, const Scenario& scenario, int n_samples,
                           std::uint64_t seed) {
  CollectConfig c = config.collect;
  c.n_samples = n_samples;
  return CollectTrainingData(*scenario.topology, ModelConfigFor(config, scenario), scenario.oracle, c, seed);
}

TrainedModels TrainAttention(const ExperimentConfig& config, const Scenario& scenario) {
  TrainingDataset train_set = CollectFor(config, scenario, config.collect.n_samples, config.seeds.placement);
  TrainingDataset heldout = CollectFor(config, scenario, config.heldout_samples, config.seeds.placement + 1);
  AttentionPredictor model(ModelConfigFor(config, scenario), config.seeds.training);
  TrainConfig tc = config.train;
  tc.seed = config.seeds.training;
  TrainReport report = Train(model, train_set.samples, heldout.samples, tc);
  return {std::move(model), std::move(report), std::move(train_set), std::move(heldout)};
}

std::vector<SimulationReport> RunCompare(const ExperimentConfig& config, const Scenario& scenario,
                                         const Trace& trace, const std::vector<SchedulerKind>& kinds,
                                         const InterferencePredictor* predictor) {
  std::vector<SimulationReport> out;
  SchedulerDeps deps{&scenario.catalog, &scenario.oracle, predictor};
  const json experiment = config.ProvenanceJson();
  for (SchedulerKind kind : kinds) {
    auto scheduler = MakeScheduler(kind, config.scheduler_params, deps);
    SimulationReport report = RunEpisode(trace, scenario.topology, *scheduler, scenario.oracle, trace.seed);
    report.config = {{"experiment", experiment}, {"trace_seed", trace.seed}};
    out.push_back(std::move(report));
  }
  return out;
}

}  // namespace hestia
