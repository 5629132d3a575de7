#include "hestia/topology.h"

#include <algorithm>
#include <fstream>
#include <set>

#include "hestia/errors.h"

namespace hestia {

using nlohmann::json;

const char* ToString(NeighborClass c) {
  switch (c) {
    case NeighborClass::kSelf: return "Self";
    case NeighborClass::kSharingCore: return "SC";
    case NeighborClass::kSharingSocket: return "SS";
    case NeighborClass::kOppositeSocket: return "OS";
    case NeighborClass::kDifferentServer: return "DifferentServer";
  }
  return "?";
}

ClusterTopology::ClusterTopology(std::vector<ServerTopology> servers) : servers_(std::move(servers)) {
  if (servers_.empty()) throw ValidationError("topology: no servers");
  std::set<int> seen;
  for (const auto& s : servers_) {
    if (!seen.insert(s.server_id).second) {
      throw ValidationError("topology: duplicate server_id " + std::to_string(s.server_id));
    }
    if (s.sockets < 1 || s.cores_per_socket < 1 || s.hts_per_core < 1) {
      throw ValidationError("topology: server " + std::to_string(s.server_id) +
                            " needs sockets, cores_per_socket, hts_per_core >= 1");
    }
    if (s.cpu_model.empty()) {
      throw ValidationError("topology: server " + std::to_string(s.server_id) + " has no cpu_model");
    }
  }
  std::sort(servers_.begin(), servers_.end(),
            [](const ServerTopology& a, const ServerTopology& b) { return a.server_id < b.server_id; });
  for (int i = 0; i < num_servers(); ++i) {
    if (servers_[i].server_id != i) throw ValidationError("topology: server_ids must be dense from 0");
  }
}

const ServerTopology& ClusterTopology::server(int server_id) const {
  if (server_id < 0 || server_id >= num_servers()) {
    throw ValidationError("unknown server_id " + std::to_string(server_id));
  }
  return servers_[server_id];
}

int ClusterTopology::total_hts() const {
  int total = 0;
  for (const auto& s : servers_) total += s.total_hts();
  return total;
}

bool ClusterTopology::Contains(const HtRef& r) const {
  if (r.server_id < 0 || r.server_id >= num_servers()) return false;
  const auto& s = servers_[r.server_id];
  return r.socket_idx >= 0 && r.socket_idx < s.sockets && r.core_idx >= 0 &&
         r.core_idx < s.cores_per_socket && r.slot_idx >= 0 && r.slot_idx < s.hts_per_core;
}

int ClusterTopology::HtId(const HtRef& r) const {
  if (!Contains(r)) throw ValidationError("hyperthread reference out of bounds");
  const auto& s = servers_[r.server_id];
  return (r.socket_idx * s.cores_per_socket + r.core_idx) * s.hts_per_core + r.slot_idx;
}

HtRef ClusterTopology::Resolve(int server_id, int ht_id) const {
  const auto& s = server(server_id);
  if (ht_id < 0 || ht_id >= s.total_hts()) {
    throw ValidationError("ht_id " + std::to_string(ht_id) + " out of range on server " +
                          std::to_string(server_id));
  }
  HtRef r;
  r.server_id = server_id;
  r.slot_idx = ht_id % s.hts_per_core;
  const int global_core = ht_id / s.hts_per_core;
  r.core_idx = global_core % s.cores_per_socket;
  r.socket_idx = global_core / s.cores_per_socket;
  return r;
}

int ClusterTopology::SocketOf(int server_id, int ht_id) const { return Resolve(server_id, ht_id).socket_idx; }

int ClusterTopology::CoreOf(int server_id, int ht_id) const {
  return ht_id / server(server_id).hts_per_core;
}

std::vector<int> ClusterTopology::Siblings(int server_id, int ht_id) const {
  const auto& s = server(server_id);
  Resolve(server_id, ht_id);
  const int first = (ht_id / s.hts_per_core) * s.hts_per_core;
  std::vector<int> out;
  for (int h = first; h < first + s.hts_per_core; ++h) {
    if (h != ht_id) out.push_back(h);
  }
  return out;
}

json ClusterTopology::ToJson() const {
  json servers = json::array();
  for (const auto& s : servers_) {
    servers.push_back({{"server_id", s.server_id},
                       {"cpu_model", s.cpu_model},
                       {"sockets", s.sockets},
                       {"cores_per_socket", s.cores_per_socket},
                       {"hts_per_core", s.hts_per_core}});
  }
  return {{"schema_version", 1}, {"kind", "topology"}, {"servers", servers}};
}

ClusterTopology BuildTopology(const json& config) {
  if (!config.is_object() || !config.contains("servers") || !config["servers"].is_array()) {
    throw ValidationError("topology: expected an object with a 'servers' array");
  }
  std::vector<ServerTopology> servers;
  const auto& arr = config["servers"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& rec = arr[i];
    try {
      ServerTopology s;
      s.server_id = rec.at("server_id").get<int>();
      s.cpu_model = rec.at("cpu_model").get<std::string>();
      s.sockets = rec.at("sockets").get<int>();
      s.cores_per_socket = rec.at("cores_per_socket").get<int>();
      s.hts_per_core = rec.value("hts_per_core", 2);
      servers.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ValidationError("topology: server record " + std::to_string(i) + ": " + e.what());
    }
  }
  return ClusterTopology(std::move(servers));
}

ClusterTopology LoadTopology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open topology file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("topology file " + path.string() + ": " + e.what());
  }
  return BuildTopology(doc);
}

void SaveTopology(const ClusterTopology& topology, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << topology.ToJson().dump(2) << "\n";
}

NeighborClass ClassifyNeighbors(const ClusterTopology& topology, const HtRef& a, const HtRef& b) {
  if (!topology.Contains(a) || !topology.Contains(b)) {
    throw ValidationError("classify_neighbors: hyperthread reference out of bounds");
  }
  if (a == b) return NeighborClass::kSelf;
  if (a.server_id != b.server_id) return NeighborClass::kDifferentServer;
  if (a.socket_idx != b.socket_idx) return NeighborClass::kOppositeSocket;
  if (a.core_idx != b.core_idx) return NeighborClass::kSharingSocket;
  return NeighborClass::kSharingCore;
}

AllocationState::AllocationState(std::shared_ptr<const ClusterTopology> topology)
    : topology_(std::move(topology)) {
  for (const auto& s : topology_->servers()) occupancy_.emplace_back(s.total_hts(), kIdle);
}

InstanceId AllocationState::Occupant(int server_id, int ht_id) const {
  topology_->Resolve(server_id, ht_id);
  return occupancy_[server_id][ht_id];
}

std::vector<int> AllocationState::IdleHts(int server_id, int socket_idx) const {
  const auto& s = topology_->server(server_id);
  if (socket_idx < 0 || socket_idx >= s.sockets) {
    throw ValidationError("socket " + std::to_string(socket_idx) + " out of range");
  }
  std::vector<int> out;
  const int first = socket_idx * s.hts_per_socket();
  for (int h = first; h < first + s.hts_per_socket(); ++h) {
    if (occupancy_[server_id][h] == kIdle) out.push_back(h);
  }
  return out;
}

int AllocationState::IdleCount(int server_id, int socket_idx) const {
  return static_cast<int>(IdleHts(server_id, socket_idx).size());
}

int AllocationState::IdleCount(int server_id) const {
  topology_->server(server_id);
  return static_cast<int>(std::count(occupancy_[server_id].begin(), occupancy_[server_id].end(), kIdle));
}

int AllocationState::OccupiedCount(int server_id, int socket_idx) const {
  return topology_->server(server_id).hts_per_socket() - IdleCount(server_id, socket_idx);
}

const Placement& AllocationState::PlacementOf(InstanceId id) const {
  auto it = placements_.find(id);
  if (it == placements_.end()) throw ValidationError("unknown instance " + std::to_string(id));
  return it->second;
}

std::vector<InstanceId> AllocationState::InstancesOn(int server_id, int socket_idx) const {
  const auto& s = topology_->server(server_id);
  std::set<InstanceId> ids;
  const int first = socket_idx * s.hts_per_socket();
  for (int h = first; h < first + s.hts_per_socket(); ++h) {
    if (occupancy_[server_id][h] != kIdle) ids.insert(occupancy_[server_id][h]);
  }
  return {ids.begin(), ids.end()};
}

void AllocationState::Bind(InstanceId id, int server_id, std::span<const int> ht_ids) {
  if (id < 0) throw ValidationError("bind: instance id must be non-negative");
  if (placements_.contains(id)) throw ValidationError("bind: instance " + std::to_string(id) + " already bound");
  if (ht_ids.empty()) throw ValidationError("bind: empty hyperthread set");
  Placement p;
  p.server_id = server_id;
  p.socket_idx = topology_->SocketOf(server_id, ht_ids.front());
  for (int h : ht_ids) {
    if (topology_->SocketOf(server_id, h) != p.socket_idx) {
      throw ValidationError("bind: instance " + std::to_string(id) + " spans sockets");
    }
    if (occupancy_[server_id][h] != kIdle) {
      throw ValidationError("bind: ht " + std::to_string(h) + " on server " + std::to_string(server_id) +
                            " is occupied");
    }
    p.ht_ids.push_back(h);
  }
  std::sort(p.ht_ids.begin(), p.ht_ids.end());
  if (std::adjacent_find(p.ht_ids.begin(), p.ht_ids.end()) != p.ht_ids.end()) {
    throw ValidationError("bind: duplicate hyperthread in set");
  }
  for (int h : p.ht_ids) occupancy_[server_id][h] = id;
  placements_.emplace(id, std::move(p));
}

void AllocationState::Bind(InstanceId id, std::span<const HtRef> hts) {
  if (hts.empty()) throw ValidationError("bind: empty hyperthread set");
  std::vector<int> ids;
  for (const auto& r : hts) {
    if (r.server_id != hts.front().server_id) throw ValidationError("bind: hyperthreads span servers");
    ids.push_back(topology_->HtId(r));
  }
  Bind(id, hts.front().server_id, ids);
}

void AllocationState::Release(InstanceId id) {
  auto it = placements_.find(id);
  if (it == placements_.end()) throw ValidationError("release: unknown instance " + std::to_string(id));
  for (int h : it->second.ht_ids) occupancy_[it->second.server_id][h] = kIdle;
  placements_.erase(it);
}

std::uint64_t AllocationState::Fingerprint() const {
  // FNV-1a over the occupancy table.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (const auto& server : occupancy_) {
    mix(server.size());
    for (InstanceId o : server) mix(static_cast<std::uint64_t>(o));
  }
  return h;
}

AllocationState Bind(const AllocationState& state, InstanceId id, std::span<const HtRef> hts) {
  AllocationState next = state;
  next.Bind(id, hts);
  return next;
}

AllocationState Release(const AllocationState& state, InstanceId id) {
  AllocationState next = state;
  next.Release(id);
  return next;
}

}  // namespace hestia
