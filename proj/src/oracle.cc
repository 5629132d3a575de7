#include "hestia/oracle.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "hestia/errors.h"

namespace hestia {

namespace {

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

void ContentionModel::Validate() const {
  if (catalog.size() == 0) throw ValidationError("contention model: empty catalog");
  if (noise_std < 0.0) throw ValidationError("contention model: noise_std must be >= 0");
  // Catalog construction already enforced sigma_sc + sigma_ss < 1 and gamma > 0.
}

double UtilizationField::InstanceMean(const Placement& placement) const {
  double sum = 0.0;
  for (int h : placement.ht_ids) sum += At(placement.server_id, h);
  return sum / static_cast<double>(placement.ht_ids.size());
}

std::vector<double> SocketNoise(const ContentionModel& model, int server_id, int socket_idx, int n_hts) {
  std::vector<double> eps(n_hts, 0.0);
  if (model.noise_std == 0.0) return eps;
  std::mt19937_64 rng(SplitMix(model.seed ^ SplitMix((static_cast<std::uint64_t>(server_id) << 16) ^
                                                     static_cast<std::uint64_t>(socket_idx))));
  std::normal_distribution<double> normal(0.0, model.noise_std);
  for (double& e : eps) e = normal(rng);
  return eps;
}

std::vector<double> SolveSocket(const SocketOccupancy& socket, const ContentionModel& model,
                                std::span<const double> noise) {
  const int n = socket.size();
  if (!noise.empty() && static_cast<int>(noise.size()) != n) {
    throw ValidationError("oracle: noise vector does not match socket size");
  }
  if (socket.hts_per_core < 1 || n % socket.hts_per_core != 0) {
    throw ValidationError("oracle: socket size is not a multiple of hts_per_core");
  }
  const double gamma = model.catalog.SpeedFactor(socket.cpu_model);

  // Dense coupling matrix: u = clamp(base + coupling * u + eps).
  std::vector<double> base(n, 0.0);
  std::vector<double> coupling(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> pressure(n, 0.0);
  for (int h = 0; h < n; ++h) {
    const InstanceId o = socket.occupant[h];
    if (o == kIdle) continue;
    auto it = socket.loads.find(o);
    if (it == socket.loads.end()) throw ValidationError("oracle: missing load for instance " + std::to_string(o));
    pressure[h] = model.catalog.Get(it->second.service_id).pressure;
  }
  for (int j = 0; j < n; ++j) {
    const InstanceId self = socket.occupant[j];
    if (self == kIdle) continue;
    const InstanceLoad& load = socket.loads.at(self);
    const ServiceSpec& spec = model.catalog.Get(load.service_id);
    base[j] = gamma * spec.BaseAt(load.rps) + (noise.empty() ? 0.0 : noise[j]);
    const int core = j / socket.hts_per_core;
    std::vector<int> sc, ss;
    for (int h = 0; h < n; ++h) {
      const InstanceId o = socket.occupant[h];
      if (o == kIdle || o == self) continue;
      (h / socket.hts_per_core == core ? sc : ss).push_back(h);
    }
    for (int h : sc) coupling[j * n + h] += spec.sigma_sc * pressure[h] / static_cast<double>(sc.size());
    for (int h : ss) coupling[j * n + h] += spec.sigma_ss * pressure[h] / static_cast<double>(ss.size());
  }

  std::vector<double> u(n, 0.0), next(n, 0.0);
  for (int iter = 0; iter < kOracleMaxIterations; ++iter) {
    double residual = 0.0;
    for (int j = 0; j < n; ++j) {
      if (socket.occupant[j] == kIdle) {
        next[j] = 0.0;
        continue;
      }
      double v = base[j];
      for (int h = 0; h < n; ++h) v += coupling[j * n + h] * u[h];
      v = std::clamp(v, 0.0, 1.0);
      residual = std::max(residual, std::abs(v - u[j]));
      next[j] = v;
    }
    if (!std::isfinite(residual)) break;
    if (residual < kOracleTolerance) return next;
    for (int j = 0; j < n; ++j) u[j] = (1.0 - kOracleDamping) * u[j] + kOracleDamping * next[j];
  }
  throw RuntimeFailure("oracle: fixed point did not converge within " + std::to_string(kOracleMaxIterations) +
                       " iterations");
}

UtilizationField GroundTruth(const AllocationState& state, const LoadMap& loads, const ContentionModel& model) {
  model.Validate();
  const auto& topo = state.topology();
  UtilizationField field;
  for (const auto& server : topo.servers()) {
    std::vector<double> values(server.total_hts(), 0.0);
    for (int k = 0; k < server.sockets; ++k) {
      const SocketOccupancy slice = SliceSocket(state, loads, server.server_id, k);
      const auto noise = SocketNoise(model, server.server_id, k, slice.size());
      const auto u = SolveSocket(slice, model, noise);
      std::copy(u.begin(), u.end(), values.begin() + k * server.hts_per_socket());
    }
    field.per_server.push_back(std::move(values));
  }
  return field;
}

double GroundTruthIsolated(const InstanceLoad& load, const std::string& cpu_model, const ContentionModel& model) {
  const ServiceSpec& spec = model.catalog.Get(load.service_id);
  return std::clamp(model.catalog.SpeedFactor(cpu_model) * spec.BaseAt(load.rps), 0.0, 1.0);
}

}  // namespace hestia
