#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hestia/oracle.h"
#include "hestia/topology.h"
#include "hestia/workload.h"

namespace hestia::testing {

inline ServiceSpec Svc(int id, double base, double sigma_sc, double sigma_ss, double pressure = 1.0, int ht_min = 1,
                       int ht_max = 8) {
  ServiceSpec s;
  s.service_id = id;
  s.name = "s" + std::to_string(id);
  s.base_util = base;
  s.rps_ref = 1.0;
  s.sigma_sc = sigma_sc;
  s.sigma_ss = sigma_ss;
  s.pressure = pressure;
  s.ht_min = ht_min;
  s.ht_max = ht_max;
  return s;
}

inline ServiceCatalog Catalog(std::vector<ServiceSpec> services, std::map<std::string, double> speed = {{"cpu", 1.0}}) {
  return ServiceCatalog(std::move(services), std::move(speed));
}

inline std::shared_ptr<const ClusterTopology> Topo(int servers, int sockets, int cores, int hts_per_core = 2,
                                                   const std::string& cpu = "cpu") {
  std::vector<ServerTopology> list;
  for (int i = 0; i < servers; ++i) list.push_back({i, cpu, sockets, cores, hts_per_core});
  return std::make_shared<const ClusterTopology>(std::move(list));
}

// One socket: occupant per HT, loads for every instance present.
inline SocketOccupancy Socket(std::vector<InstanceId> occupant, LoadMap loads, const std::string& cpu = "cpu",
                              int hts_per_core = 2) {
  SocketOccupancy s;
  s.cpu_model = cpu;
  s.hts_per_core = hts_per_core;
  s.occupant = std::move(occupant);
  s.loads = std::move(loads);
  return s;
}

}  // namespace hestia::testing
