#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hestia/oracle.h"
#include "hestia/predictor.h"
#include "hestia/schedulers.h"
#include "hestia/simulator.h"
#include "hestia/topology.h"
#include "hestia/workload.h"
#include "json.hpp"

namespace hestia {

struct TopologyGenConfig {
  int servers = 20;
  int sockets = 2;
  int cores_per_socket = 8;
  int hts_per_core = 2;
  std::vector<std::string> cpu_models = {"xeon-8269", "xeon-8163"};  // assigned round-robin by server_id

  nlohmann::json ToJson() const;
  static TopologyGenConfig FromJson(const nlohmann::json& doc);
};

ClusterTopology GenerateTopology(const TopologyGenConfig& config);

struct Seeds {
  std::uint64_t catalog = 1000;
  std::uint64_t trace = 1;
  std::uint64_t placement = 0;  // training-data placements
  std::uint64_t oracle = 0;
  std::uint64_t training = 0;   // weight init and batch order

  nlohmann::json ToJson() const;
  static Seeds FromJson(const nlohmann::json& doc);
};

// Everything a run needs. Files named in `paths` take precedence over the
// generator sections.
struct ExperimentConfig {
  std::string scenario = "reference";
  struct Paths {
    std::string topology, catalog, trace, checkpoint, out_dir = "out";
  } paths;
  Seeds seeds;
  TopologyGenConfig topology;
  CatalogGenConfig catalog;
  double occupancy = 0.7;  // HT budget of generated traces, as a fraction of cluster HTs
  TraceGenConfig trace;
  double noise_std = 0.01;
  std::vector<std::string> schedulers = {"ff", "socket-spread", "paragon", "kambadur", "rcpu", "hestia"};
  SchedulerParams scheduler_params;
  PredictorConfig model;  // dimensions only; vocabularies come from the catalog
  TrainConfig train;
  CollectConfig collect;
  int heldout_samples = 800;

  nlohmann::json ToJson() const;
  static ExperimentConfig FromJson(const nlohmann::json& doc);
  static ExperimentConfig Load(const std::filesystem::path& path);

  // ToJson() with input paths replaced by file name and SHA-256, and no
  // out_dir, so outputs do not depend on where a run was staged.
  nlohmann::json ProvenanceJson() const;
};

struct Scenario {
  std::shared_ptr<const ClusterTopology> topology;
  ServiceCatalog catalog;
  ContentionModel oracle;
};

Scenario BuildScenario(const ExperimentConfig& config);

// Predictor vocabulary and dimensions for a scenario.
PredictorConfig ModelConfigFor(const ExperimentConfig& config, const Scenario& scenario);

Trace BuildTrace(const ExperimentConfig& config, const Scenario& scenario, std::uint64_t trace_seed);

struct TrainedModels {
  AttentionPredictor attention;
  TrainReport report;
  TrainingDataset train_set;
  TrainingDataset heldout_set;
};

// Collects data (training and held-out use distinct seeds) and trains the attention model.
TrainingDataset CollectFor(const ExperimentConfig& config, const Scenario& scenario, int n_samples,
                           std::uint64_t seed);
TrainedModels TrainAttention(const ExperimentConfig& config, const Scenario& scenario);

// One episode per scheduler on the same trace.
std::vector<SimulationReport> RunCompare(const ExperimentConfig& config, const Scenario& scenario,
                                         const Trace& trace, const std::vector<SchedulerKind>& kinds,
                                         const InterferencePredictor* predictor);

}  // namespace hestia
