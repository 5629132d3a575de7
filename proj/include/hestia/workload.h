#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hestia/topology.h"
#include "json.hpp"

namespace hestia {

inline constexpr int kSchemaVersion = 1;

// Workload and contention profile of one latency-sensitive service.
struct ServiceSpec {
  int service_id = 0;
  std::string name;
  double base_util = 0.0;  // isolated per-HT utilization at rps_ref
  double rps_ref = 1.0;
  double sigma_sc = 0.0;   // sensitivity to the core sibling
  double sigma_ss = 0.0;   // sensitivity to the rest of the socket
  double pressure = 1.0;   // how strongly this service's load is felt by neighbors
  int ht_min = 1;
  int ht_max = 1;

  // Isolated utilization at a given request rate, before the cpu_model factor.
  double BaseAt(double rps) const;

  bool operator==(const ServiceSpec&) const = default;
};

class ServiceCatalog {
 public:
  ServiceCatalog() = default;
  ServiceCatalog(std::vector<ServiceSpec> services, std::map<std::string, double> cpu_speed);

  const std::vector<ServiceSpec>& services() const { return services_; }
  // cpu_model -> multiplicative factor on base utilization (> 0).
  const std::map<std::string, double>& cpu_speed() const { return cpu_speed_; }

  bool Has(int service_id) const { return index_.contains(service_id); }
  const ServiceSpec& Get(int service_id) const;
  double SpeedFactor(const std::string& cpu_model) const;
  std::size_t size() const { return services_.size(); }

  nlohmann::json ToJson() const;
  static ServiceCatalog FromJson(const nlohmann::json& doc);

  bool operator==(const ServiceCatalog& o) const {
    return services_ == o.services_ && cpu_speed_ == o.cpu_speed_;
  }

 private:
  std::vector<ServiceSpec> services_;
  std::map<std::string, double> cpu_speed_;
  std::map<int, std::size_t> index_;
};

ServiceCatalog LoadCatalog(const std::filesystem::path& path);
void SaveCatalog(const ServiceCatalog& catalog, const std::filesystem::path& path);

struct CatalogGenConfig {
  int n_services = 12;
  double base_lo = 0.2, base_hi = 0.6;
  double sigma_sc_lo = 0.15, sigma_sc_hi = 0.45;
  double sigma_ss_lo = 0.05, sigma_ss_hi = 0.25;
  double pressure_lo = 0.3, pressure_hi = 1.0;
  double rps_ref = 1000.0;
  int ht_min_lo = 1, ht_min_hi = 2;  // ht_min drawn from this range
  int ht_span_lo = 1, ht_span_hi = 3;  // ht_max = ht_min + span
  std::map<std::string, double> cpu_speed = {{"xeon-8269", 1.0}, {"xeon-8163", 1.2}};

  nlohmann::json ToJson() const;
  static CatalogGenConfig FromJson(const nlohmann::json& doc);
};

// Draws a catalog with sigma_ss < sigma_sc per service. Rejects configurations
// that cannot satisfy sigma_sc + sigma_ss < 1.
ServiceCatalog GenerateCatalog(const CatalogGenConfig& config, std::uint64_t seed);

struct InstanceRequest {
  InstanceId instance_id = 0;
  int service_id = 0;
  int requested_ht = 1;
  double rps = 0.0;
  // Arrival index before which the instance departs; unset = long-lived.
  std::optional<std::int64_t> depart_at;

  bool operator==(const InstanceRequest&) const = default;
};

struct Trace {
  std::vector<InstanceRequest> requests;
  std::uint64_t seed = 0;
  nlohmann::json generator = nlohmann::json::object();

  bool operator==(const Trace&) const = default;
};

struct TraceGenConfig {
  enum class Mix { kCounts, kZipfTotal, kHtBudget };
  Mix mix = Mix::kHtBudget;
  std::vector<int> instance_counts;  // kCounts: one entry per catalog service
  int total_instances = 0;           // kZipfTotal
  int ht_budget = 0;                 // kHtBudget: stop before exceeding
  double zipf_exponent = 1.0;
  // rps = rps_ref * factor, factor ~ U[lo, hi] (fixed when lo == hi).
  double rps_factor_lo = 0.6;
  double rps_factor_hi = 1.4;

  nlohmann::json ToJson() const;
  static TraceGenConfig FromJson(const nlohmann::json& doc);
};

// Zipf-shaped counts over n services summing exactly to total (largest remainder).
std::vector<int> ZipfCounts(int n, int total, double exponent);

Trace GenerateTrace(const ServiceCatalog& catalog, const TraceGenConfig& config, std::uint64_t seed);

// Serialized form (JSON lines: header then one record per request).
std::string SerializeTrace(const Trace& trace);
Trace ParseTrace(const std::string& text, const ServiceCatalog* catalog = nullptr);
void SaveTrace(const Trace& trace, const std::filesystem::path& path);
Trace LoadTrace(const std::filesystem::path& path, const ServiceCatalog* catalog = nullptr);

// Service and request rate of a placed instance.
struct InstanceLoad {
  int service_id = 0;
  double rps = 0.0;

  bool operator==(const InstanceLoad&) const = default;
};
using LoadMap = std::map<InstanceId, InstanceLoad>;

LoadMap LoadsOf(const Trace& trace);

// One socket's occupancy, indexed by socket-local HT (ht_id - first ht_id of
// the socket). This is the unit both the contention oracle and the predictor
// work on: coupling never crosses sockets.
struct SocketOccupancy {
  std::string cpu_model;
  int hts_per_core = 2;
  std::vector<InstanceId> occupant;  // kIdle for idle HTs
  LoadMap loads;                     // every instance present in `occupant`

  int size() const { return static_cast<int>(occupant.size()); }
  // Present instances, ascending id.
  std::vector<InstanceId> Instances() const;
  // Socket-local HT indices of one instance, ascending.
  std::vector<int> HtsOf(InstanceId id) const;
};

SocketOccupancy SliceSocket(const AllocationState& state, const LoadMap& loads, int server_id,
                            int socket_idx);

// CPU time over (requested hyperthreads x elapsed wall time).
double CpuUtilization(double cpu_time, int requested_ht, double elapsed);

}  // namespace hestia
