#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hestia/oracle.h"
#include "hestia/predictor.h"
#include "hestia/scorer.h"
#include "hestia/selector.h"
#include "hestia/topology.h"
#include "hestia/workload.h"

namespace hestia {

enum class SchedulerKind { kHestia, kFirstFit, kSocketSpread, kParagonLite, kKambadurLite, kRcpuLite };

// CLI names: hestia, ff, socket-spread, paragon, kambadur, rcpu.
std::string ToString(SchedulerKind kind);
SchedulerKind ParseSchedulerKind(const std::string& name);

struct PlacementDecision {
  InstanceId instance_id = 0;
  std::optional<CandidateHtSet> chosen;
  std::string reject_reason;
  std::optional<double> score;  // Score_skt of the chosen candidate (Hestia only)

  bool accepted() const { return chosen.has_value(); }
};

struct SchedulerParams {
  SelectorPolicy policy;
  double kambadur_threshold = 0.5;
  double rcpu_reserve = 0.125;
  int paragon_classes = 2;

  void Validate() const;
  nlohmann::json ToJson() const;
  static SchedulerParams FromJson(const nlohmann::json& doc);
};

PlacementDecision FfPlace(const InstanceRequest& request, const AllocationState& state);
PlacementDecision SocketSpreadPlace(const InstanceRequest& request, const AllocationState& state);
PlacementDecision RcpuLitePlace(const InstanceRequest& request, const AllocationState& state, double reserve_ratio);

// Realized utilization of every HT in one socket, as the oracle currently sees it.
using SocketUtilizationFn = std::function<std::vector<double>(int server_id, int socket_idx)>;
PlacementDecision KambadurLitePlace(const InstanceRequest& request, const AllocationState& state,
                                    const SocketUtilizationFn& utilization, double threshold);

// Interference classes from k-means over per-service (sigma_sc, sigma_ss, pressure).
struct ParagonProfiles {
  struct Centroid {
    double sigma_sc = 0.0, sigma_ss = 0.0, pressure = 0.0;
    double Sensitivity() const { return sigma_sc + sigma_ss; }
  };
  std::vector<Centroid> centroids;
  std::map<int, int> service_class;  // service_id -> centroid index
  Centroid mean;                     // used for unknown services

  const Centroid& Of(int service_id) const;
  // Symmetric conflict weight between two profiles.
  static double Conflict(const Centroid& a, const Centroid& b);
};
ParagonProfiles BuildParagonProfiles(const ServiceCatalog& catalog, int classes);

PlacementDecision ParagonLitePlace(const InstanceRequest& request, const AllocationState& state, const LoadMap& loads,
                                   const ParagonProfiles& profiles);

PlacementDecision HestiaPlace(const InstanceRequest& request, const AllocationState& state, const LoadMap& loads,
                              const InterferencePredictor& predictor, const SelectorPolicy& policy,
                              WoiCache* cache = nullptr);

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual SchedulerKind kind() const = 0;
  // `loads` holds every placed instance and the incoming one.
  virtual PlacementDecision Place(const InstanceRequest& request, const AllocationState& state,
                                  const LoadMap& loads) = 0;
};

struct SchedulerDeps {
  const ServiceCatalog* catalog = nullptr;       // paragon
  const ContentionModel* oracle = nullptr;       // kambadur
  const InterferencePredictor* predictor = nullptr;  // hestia
};

std::unique_ptr<Scheduler> MakeScheduler(SchedulerKind kind, const SchedulerParams& params,
                                         const SchedulerDeps& deps);

}  // namespace hestia
