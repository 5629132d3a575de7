#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace hestia {

// One physical server: sockets -> cores -> hyperthreads.
struct ServerTopology {
  int server_id = 0;
  std::string cpu_model;
  int sockets = 0;
  int cores_per_socket = 0;
  int hts_per_core = 2;

  int hts_per_socket() const { return cores_per_socket * hts_per_core; }
  int total_hts() const { return sockets * hts_per_socket(); }

  bool operator==(const ServerTopology&) const = default;
};

// Server-local hyperthread coordinates. ht_id numbering is slot-major within a
// core, so a core's siblings sit at adjacent ids.
struct HtRef {
  int server_id = 0;
  int socket_idx = 0;
  int core_idx = 0;
  int slot_idx = 0;

  bool operator==(const HtRef&) const = default;
};

enum class NeighborClass { kSelf, kSharingCore, kSharingSocket, kOppositeSocket, kDifferentServer };

const char* ToString(NeighborClass c);

class ClusterTopology {
 public:
  ClusterTopology() = default;
  // Validates: ids dense from 0 (in order), positive dimensions.
  explicit ClusterTopology(std::vector<ServerTopology> servers);

  const std::vector<ServerTopology>& servers() const { return servers_; }
  const ServerTopology& server(int server_id) const;
  int num_servers() const { return static_cast<int>(servers_.size()); }
  int total_hts() const;

  bool Contains(const HtRef& ref) const;
  int HtId(const HtRef& ref) const;
  HtRef Resolve(int server_id, int ht_id) const;
  int SocketOf(int server_id, int ht_id) const;
  int CoreOf(int server_id, int ht_id) const;
  // Other hyperthreads of the same physical core, ascending.
  std::vector<int> Siblings(int server_id, int ht_id) const;

  nlohmann::json ToJson() const;

  bool operator==(const ClusterTopology&) const = default;

 private:
  std::vector<ServerTopology> servers_;
};

ClusterTopology BuildTopology(const nlohmann::json& config);
ClusterTopology LoadTopology(const std::filesystem::path& path);
void SaveTopology(const ClusterTopology& topology, const std::filesystem::path& path);

NeighborClass ClassifyNeighbors(const ClusterTopology& topology, const HtRef& a, const HtRef& b);

using InstanceId = std::int64_t;
inline constexpr InstanceId kIdle = -1;

struct Placement {
  int server_id = 0;
  int socket_idx = 0;
  std::vector<int> ht_ids;  // ascending

  bool operator==(const Placement&) const = default;
};

// Occupancy of every hyperthread in the cluster. Each instance lives on one
// socket of one server; each hyperthread holds at most one instance.
class AllocationState {
 public:
  AllocationState() = default;
  explicit AllocationState(std::shared_ptr<const ClusterTopology> topology);

  const ClusterTopology& topology() const { return *topology_; }
  std::shared_ptr<const ClusterTopology> topology_ptr() const { return topology_; }

  InstanceId Occupant(int server_id, int ht_id) const;
  bool IsIdle(int server_id, int ht_id) const { return Occupant(server_id, ht_id) == kIdle; }
  std::vector<int> IdleHts(int server_id, int socket_idx) const;
  int IdleCount(int server_id, int socket_idx) const;
  int IdleCount(int server_id) const;
  int OccupiedCount(int server_id, int socket_idx) const;

  bool Has(InstanceId id) const { return placements_.contains(id); }
  const Placement& PlacementOf(InstanceId id) const;
  const std::map<InstanceId, Placement>& placements() const { return placements_; }
  // Instances with at least one HT in the socket, ascending id.
  std::vector<InstanceId> InstancesOn(int server_id, int socket_idx) const;

  void Bind(InstanceId id, int server_id, std::span<const int> ht_ids);
  void Bind(InstanceId id, std::span<const HtRef> hts);
  void Release(InstanceId id);

  // Stable content hash over occupancy, for purity checks.
  std::uint64_t Fingerprint() const;

  bool operator==(const AllocationState& other) const {
    return occupancy_ == other.occupancy_ && placements_ == other.placements_;
  }

 private:
  std::shared_ptr<const ClusterTopology> topology_;
  std::vector<std::vector<InstanceId>> occupancy_;  // [server][ht_id]
  std::map<InstanceId, Placement> placements_;
};

AllocationState Bind(const AllocationState& state, InstanceId id, std::span<const HtRef> hts);
AllocationState Release(const AllocationState& state, InstanceId id);

}  // namespace hestia
