#include "hestia/selector.h"

#include <algorithm>

#include "hestia/errors.h"

namespace hestia {

void SelectorPolicy::Validate() const {
  if (step < 1) throw ValidationError("selector: window step must be >= 1");
  if (max_candidates < 1) throw ValidationError("selector: max candidates must be >= 1");
}

bool HasSiblingPair(const ClusterTopology& topology, int server_id, const std::vector<int>& ht_ids) {
  for (std::size_t a = 0; a < ht_ids.size(); ++a) {
    for (std::size_t b = a + 1; b < ht_ids.size(); ++b) {
      if (topology.CoreOf(server_id, ht_ids[a]) == topology.CoreOf(server_id, ht_ids[b])) return true;
    }
  }
  return false;
}

std::vector<int> FilterServers(const AllocationState& state, int requested_ht, const SelectorPolicy& policy) {
  if (requested_ht < 1) throw ValidationError("selector: requested_ht must be >= 1");
  struct Entry {
    int server_id;
    int idle;
  };
  std::vector<Entry> feasible;
  for (const auto& server : state.topology().servers()) {
    bool fits = false;
    for (int s = 0; s < server.sockets && !fits; ++s) fits = state.IdleCount(server.server_id, s) >= requested_ht;
    if (fits) feasible.push_back({server.server_id, state.IdleCount(server.server_id)});
  }
  std::sort(feasible.begin(), feasible.end(), [&](const Entry& a, const Entry& b) {
    if (a.idle != b.idle) return policy.server_policy == ServerPolicy::kSpread ? a.idle > b.idle : a.idle < b.idle;
    return a.server_id < b.server_id;
  });
  std::vector<int> out;
  for (const auto& e : feasible) out.push_back(e.server_id);
  return out;
}

std::vector<CandidateHtSet> EnumerateHtSets(const AllocationState& state, int server_id, int socket_idx,
                                            int requested_ht, const SelectorPolicy& policy) {
  if (requested_ht < 1) throw ValidationError("selector: requested_ht must be >= 1");
  policy.Validate();
  const auto idle = state.IdleHts(server_id, socket_idx);
  std::vector<CandidateHtSet> windows;
  const int n = static_cast<int>(idle.size());
  for (int start = 0; start + requested_ht <= n; start += policy.step) {
    CandidateHtSet c;
    c.server_id = server_id;
    c.socket_idx = socket_idx;
    c.ht_ids.assign(idle.begin() + start, idle.begin() + start + requested_ht);
    c.contains_sibling_pair = HasSiblingPair(state.topology(), server_id, c.ht_ids);
    windows.push_back(std::move(c));
  }
  const bool any_clean =
      std::any_of(windows.begin(), windows.end(), [](const CandidateHtSet& c) { return !c.contains_sibling_pair; });
  if (any_clean) {
    std::erase_if(windows, [](const CandidateHtSet& c) { return c.contains_sibling_pair; });
  }
  if (static_cast<int>(windows.size()) > policy.max_candidates) windows.resize(policy.max_candidates);
  return windows;
}

std::vector<CandidateHtSet> EnumerateCandidates(const AllocationState& state, int requested_ht,
                                                const SelectorPolicy& policy) {
  std::vector<CandidateHtSet> out;
  for (int server_id : FilterServers(state, requested_ht, policy)) {
    for (int s = 0; s < state.topology().server(server_id).sockets; ++s) {
      auto sets = EnumerateHtSets(state, server_id, s, requested_ht, policy);
      out.insert(out.end(), std::make_move_iterator(sets.begin()), std::make_move_iterator(sets.end()));
    }
  }
  return out;
}

}  // namespace hestia
