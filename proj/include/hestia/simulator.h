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
#include "hestia/topology.h"
#include "hestia/workload.h"
#include "json.hpp"

namespace hestia {

enum class InstanceStatus { kPlaced, kRejected, kDeparted };
std::string ToString(InstanceStatus status);

struct InstanceRow {
  InstanceId instance_id = 0;
  int service_id = 0;
  int requested_ht = 0;
  double rps = 0.0;
  InstanceStatus status = InstanceStatus::kPlaced;
  std::string reject_reason;
  int server_id = -1;
  int socket_idx = -1;
  std::vector<int> ht_ids;
  int hts_per_core = 2;
  double realized = 0.0;  // end-of-episode mean over the instance's HTs
  double isolated = 0.0;  // alone on an empty socket of the same cpu_model
  std::optional<double> score;
};

struct ServiceRow {
  int service_id = 0;
  int instances = 0;
  double mean_realized = 0.0;
  double mean_isolated = 0.0;
  double mean_increase = 0.0;  // mean over instances of (realized - isolated) / isolated
};

struct SimulationReport {
  std::string scheduler;
  std::uint64_t seed = 0;
  std::string trace_digest;  // digest of the consumed arrival sequence
  nlohmann::json config = nlohmann::json::object();
  std::vector<InstanceRow> instances;  // trace order
  std::vector<ServiceRow> services;    // ascending service_id
  double core_equivalents = 0.0;
  int rejections = 0;

  nlohmann::json ToJson() const;
  // Writes <prefix>.json, <prefix>_instances.csv, <prefix>_services.csv.
  std::vector<std::filesystem::path> Write(const std::filesystem::path& dir, const std::string& prefix) const;
};

// Sum over placed instances of realized * ht_count / hts_per_core.
double CoreEquivalents(const std::vector<InstanceRow>& rows);

SimulationReport RunEpisode(const Trace& trace, std::shared_ptr<const ClusterTopology> topology,
                            Scheduler& scheduler, const ContentionModel& oracle, std::uint64_t seed = 0);

// (baseline - candidate) / baseline * 100.
double ReductionPercent(double baseline, double candidate);

struct Metrics {
  std::string scheduler;
  double core_equivalents = 0.0;
  double reduction_pct = 0.0;
  double rejection_rate = 0.0;
  std::vector<ServiceRow> services;
};

// Throws when the two reports consumed different traces.
Metrics ComputeMetrics(const SimulationReport& report, const SimulationReport* baseline = nullptr);

struct TrainingDataset {
  std::vector<TrainingSample> samples;
  nlohmann::json provenance = nlohmann::json::object();
};

struct CollectConfig {
  int n_samples = 6000;
  double isolated_fraction = 0.12;
  int min_instances = 2;
  int max_instances = 9;
  double contiguous_fraction = 0.85;
  double rps_factor_lo = 0.6;
  double rps_factor_hi = 1.4;
  // Service popularity in catalog order, as in generated traces; 0 = uniform.
  double zipf_exponent = 1.0;

  nlohmann::json ToJson() const;
  static CollectConfig FromJson(const nlohmann::json& doc);
};

// Random single-socket placements labeled by the oracle. Sockets come from the
// topology's servers in rotation so every cpu_model is covered.
TrainingDataset CollectTrainingData(const ClusterTopology& topology, const PredictorConfig& predictor,
                                    const ContentionModel& oracle, const CollectConfig& config, std::uint64_t seed);

bool HasSiblingSharing(const SocketOccupancy& socket);

// Noise-free oracle behind the predictor interface, decoding tokens through the vocabulary.
class OraclePredictor : public UtilizationPredictor {
 public:
  OraclePredictor(const ContentionModel& oracle, PredictorConfig config)
      : oracle_(oracle), config_(std::move(config)) {}
  std::string name() const override { return "oracle"; }
  std::map<InstanceId, double> PredictInstances(const SocketInput& input) const override;

 private:
  ContentionModel oracle_;
  PredictorConfig config_;
};

}  // namespace hestia
