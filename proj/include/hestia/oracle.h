#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hestia/topology.h"
#include "hestia/workload.h"

namespace hestia {

// Synthetic ground truth for co-location interference. For an occupied HT j of
// instance i (service s) the realized utilization is the fixed point of
//
//   u_j = clamp(gamma * base_s(rps_i)
//               + sigma_sc(s) * mean_{sibling h of another instance} p(h) * u_h
//               + sigma_ss(s) * mean_{other-core h of another instance} p(h) * u_h
//               + eps_j, 0, 1)
//
// where p(h) is the pressure of the service occupying h. HTs of i itself never
// couple to j, and nothing couples across sockets.
struct ContentionModel {
  ServiceCatalog catalog;  // per-service coefficients and cpu_model speed factors
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

inline constexpr double kOracleDamping = 0.5;
inline constexpr int kOracleMaxIterations = 10000;
inline constexpr double kOracleTolerance = 1e-12;

// Per-server, per-ht_id realized utilization. Idle HTs read 0.
struct UtilizationField {
  std::vector<std::vector<double>> per_server;

  double At(int server_id, int ht_id) const { return per_server.at(server_id).at(ht_id); }
  // Mean over the instance's HTs.
  double InstanceMean(const Placement& placement) const;
};

// Deterministic per-HT noise for one socket evaluation. Zeros when noise_std == 0.
std::vector<double> SocketNoise(const ContentionModel& model, int server_id, int socket_idx, int n_hts);

// Fixed point for one socket. `noise` is either empty (noise-free) or has one
// entry per socket-local HT. Throws RuntimeFailure if iteration does not settle.
std::vector<double> SolveSocket(const SocketOccupancy& socket, const ContentionModel& model,
                                std::span<const double> noise = {});

UtilizationField GroundTruth(const AllocationState& state, const LoadMap& loads, const ContentionModel& model);

// Utilization of the instance alone on an empty socket of the given cpu_model, noise-free.
double GroundTruthIsolated(const InstanceLoad& load, const std::string& cpu_model, const ContentionModel& model);

}  // namespace hestia
