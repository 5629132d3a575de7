#pragma once

#include <vector>

#include "hestia/topology.h"

namespace hestia {

enum class ServerPolicy { kSpread, kStack };

struct SelectorPolicy {
  ServerPolicy server_policy = ServerPolicy::kSpread;
  int step = 1;
  int max_candidates = 8;  // per socket

  void Validate() const;
};

struct CandidateHtSet {
  int server_id = 0;
  int socket_idx = 0;
  std::vector<int> ht_ids;  // ascending
  bool contains_sibling_pair = false;

  bool operator==(const CandidateHtSet&) const = default;
};

// Servers with at least `requested_ht` idle HTs in one socket, ordered by policy.
std::vector<int> FilterServers(const AllocationState& state, int requested_ht, const SelectorPolicy& policy);

// Windows of length requested_ht over the socket's sorted idle HTs. Windows
// holding a sibling pair are dropped when a sibling-free window exists.
std::vector<CandidateHtSet> EnumerateHtSets(const AllocationState& state, int server_id, int socket_idx,
                                            int requested_ht, const SelectorPolicy& policy);

// Both sockets of every filtered server, in server order.
std::vector<CandidateHtSet> EnumerateCandidates(const AllocationState& state, int requested_ht,
                                                const SelectorPolicy& policy);

bool HasSiblingPair(const ClusterTopology& topology, int server_id, const std::vector<int>& ht_ids);

}  // namespace hestia
