#include "hestia/schedulers.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hestia/errors.h"

namespace hestia {

std::string ToString(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::kHestia: return "hestia";
    case SchedulerKind::kFirstFit: return "ff";
    case SchedulerKind::kSocketSpread: return "socket-spread";
    case SchedulerKind::kParagonLite: return "paragon";
    case SchedulerKind::kKambadurLite: return "kambadur";
    case SchedulerKind::kRcpuLite: return "rcpu";
  }
  return "unknown";
}

SchedulerKind ParseSchedulerKind(const std::string& name) {
  for (auto k : {SchedulerKind::kHestia, SchedulerKind::kFirstFit, SchedulerKind::kSocketSpread,
                 SchedulerKind::kParagonLite, SchedulerKind::kKambadurLite, SchedulerKind::kRcpuLite}) {
    if (ToString(k) == name) return k;
  }
  throw ValidationError("unknown scheduler '" + name + "'");
}

void SchedulerParams::Validate() const {
  policy.Validate();
  if (!(kambadur_threshold >= 0.0)) throw ValidationError("kambadur threshold must be >= 0");
  if (!(rcpu_reserve >= 0.0 && rcpu_reserve < 1.0)) throw ValidationError("rcpu reserve must be in [0, 1)");
  if (paragon_classes < 1) throw ValidationError("paragon classes must be >= 1");
}

nlohmann::json SchedulerParams::ToJson() const {
  return {{"server_policy", policy.server_policy == ServerPolicy::kSpread ? "spread" : "stack"},
          {"window_step", policy.step},
          {"max_candidates", policy.max_candidates},
          {"kambadur_threshold", kambadur_threshold},
          {"rcpu_reserve", rcpu_reserve},
          {"paragon_classes", paragon_classes}};
}

SchedulerParams SchedulerParams::FromJson(const nlohmann::json& doc) {
  SchedulerParams p;
  const std::string sp = doc.value("server_policy", "spread");
  if (sp == "spread") {
    p.policy.server_policy = ServerPolicy::kSpread;
  } else if (sp == "stack") {
    p.policy.server_policy = ServerPolicy::kStack;
  } else {
    throw ValidationError("server_policy must be spread or stack, got '" + sp + "'");
  }
  p.policy.step = doc.value("window_step", p.policy.step);
  p.policy.max_candidates = doc.value("max_candidates", p.policy.max_candidates);
  p.kambadur_threshold = doc.value("kambadur_threshold", p.kambadur_threshold);
  p.rcpu_reserve = doc.value("rcpu_reserve", p.rcpu_reserve);
  p.paragon_classes = doc.value("paragon_classes", p.paragon_classes);
  p.Validate();
  return p;
}

namespace {

PlacementDecision Reject(const InstanceRequest& r, std::string reason) {
  PlacementDecision d;
  d.instance_id = r.instance_id;
  d.reject_reason = std::move(reason);
  return d;
}

PlacementDecision Accept(const InstanceRequest& r, CandidateHtSet c) {
  PlacementDecision d;
  d.instance_id = r.instance_id;
  d.chosen = std::move(c);
  return d;
}

CandidateHtSet LowestWindow(const AllocationState& state, int server_id, int socket_idx, int requested_ht) {
  const auto idle = state.IdleHts(server_id, socket_idx);
  CandidateHtSet c;
  c.server_id = server_id;
  c.socket_idx = socket_idx;
  c.ht_ids.assign(idle.begin(), idle.begin() + requested_ht);
  c.contains_sibling_pair = HasSiblingPair(state.topology(), server_id, c.ht_ids);
  return c;
}

void CheckRequest(const InstanceRequest& r) {
  if (r.requested_ht < 1) throw ValidationError("request " + std::to_string(r.instance_id) + ": requested_ht < 1");
}

const SelectorPolicy kSpread{};

bool RcpuFits(const AllocationState& state, int server_id, int socket_idx, int requested_ht, double reserve) {
  const int total = state.topology().server(server_id).hts_per_socket();
  const int occupied = state.OccupiedCount(server_id, socket_idx);
  return occupied + requested_ht <= (1.0 - reserve) * total + 1e-9;
}

}  // namespace

PlacementDecision FfPlace(const InstanceRequest& request, const AllocationState& state) {
  CheckRequest(request);
  for (int server_id : FilterServers(state, request.requested_ht, kSpread)) {
    for (int s = 0; s < state.topology().server(server_id).sockets; ++s) {
      if (state.IdleCount(server_id, s) >= request.requested_ht) {
        return Accept(request, LowestWindow(state, server_id, s, request.requested_ht));
      }
    }
  }
  return Reject(request, "capacity");
}

PlacementDecision SocketSpreadPlace(const InstanceRequest& request, const AllocationState& state) {
  CheckRequest(request);
  const auto servers = FilterServers(state, request.requested_ht, kSpread);
  if (servers.empty()) return Reject(request, "capacity");
  const int server_id = servers.front();
  int best = -1;
  for (int s = 0; s < state.topology().server(server_id).sockets; ++s) {
    const int idle = state.IdleCount(server_id, s);
    if (idle >= request.requested_ht && (best < 0 || idle > state.IdleCount(server_id, best))) best = s;
  }
  return Accept(request, LowestWindow(state, server_id, best, request.requested_ht));
}

PlacementDecision RcpuLitePlace(const InstanceRequest& request, const AllocationState& state, double reserve_ratio) {
  CheckRequest(request);
  if (!(reserve_ratio >= 0.0 && reserve_ratio < 1.0)) throw ValidationError("rcpu reserve must be in [0, 1)");
  for (int server_id : FilterServers(state, request.requested_ht, kSpread)) {
    for (int s = 0; s < state.topology().server(server_id).sockets; ++s) {
      if (state.IdleCount(server_id, s) >= request.requested_ht &&
          RcpuFits(state, server_id, s, request.requested_ht, reserve_ratio)) {
        return Accept(request, LowestWindow(state, server_id, s, request.requested_ht));
      }
    }
  }
  return Reject(request, "reserve");
}

PlacementDecision KambadurLitePlace(const InstanceRequest& request, const AllocationState& state,
                                    const SocketUtilizationFn& utilization, double threshold) {
  CheckRequest(request);
  const auto& topo = state.topology();
  for (int server_id : FilterServers(state, request.requested_ht, kSpread)) {
    const auto& server = topo.server(server_id);
    for (int s = 0; s < server.sockets; ++s) {
      const auto idle = state.IdleHts(server_id, s);
      const int n = static_cast<int>(idle.size());
      if (n < request.requested_ht) continue;
      const int first = s * server.hts_per_socket();
      std::vector<double> util;
      for (int start = 0; start + request.requested_ht <= n; ++start) {
        std::vector<int> window(idle.begin() + start, idle.begin() + start + request.requested_ht);
        bool hot = false;
        for (int h : window) {
          for (int sib : topo.Siblings(server_id, h)) {
            if (state.IsIdle(server_id, sib) || std::binary_search(window.begin(), window.end(), sib)) continue;
            if (util.empty()) util = utilization(server_id, s);
            if (util.at(sib - first) > threshold) hot = true;
          }
        }
        if (!hot) {
          CandidateHtSet c{server_id, s, window, HasSiblingPair(topo, server_id, window)};
          return Accept(request, std::move(c));
        }
      }
    }
  }
  return FfPlace(request, state);
}

// --- Paragon-lite -----------------------------------------------------------------

const ParagonProfiles::Centroid& ParagonProfiles::Of(int service_id) const {
  auto it = service_class.find(service_id);
  return it == service_class.end() ? mean : centroids.at(it->second);
}

double ParagonProfiles::Conflict(const Centroid& a, const Centroid& b) {
  return a.Sensitivity() * b.pressure + b.Sensitivity() * a.pressure;
}

ParagonProfiles BuildParagonProfiles(const ServiceCatalog& catalog, int classes) {
  if (classes < 1) throw ValidationError("paragon classes must be >= 1");
  using C = ParagonProfiles::Centroid;
  const auto& services = catalog.services();
  ParagonProfiles out;
  if (services.empty()) return out;
  std::vector<C> points;
  for (const auto& s : services) points.push_back({s.sigma_sc, s.sigma_ss, s.pressure});
  const auto n = points.size();
  for (const auto& p : points) {
    out.mean.sigma_sc += p.sigma_sc / n;
    out.mean.sigma_ss += p.sigma_ss / n;
    out.mean.pressure += p.pressure / n;
  }
  const int k = std::min<int>(classes, static_cast<int>(n));
  // Seed centroids at evenly spaced ranks of sensitivity x pressure.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a].Sensitivity() * points[a].pressure < points[b].Sensitivity() * points[b].pressure;
  });
  for (int c = 0; c < k; ++c) {
    const std::size_t rank = k == 1 ? n / 2 : c * (n - 1) / (k - 1);
    out.centroids.push_back(points[order[rank]]);
  }
  auto dist = [](const C& a, const C& b) {
    return std::pow(a.sigma_sc - b.sigma_sc, 2) + std::pow(a.sigma_ss - b.sigma_ss, 2) +
           std::pow(a.pressure - b.pressure, 2);
  };
  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c) {
        if (dist(points[i], out.centroids[c]) < dist(points[i], out.centroids[best])) best = c;
      }
      if (assign[i] != best) changed = true;
      assign[i] = best;
    }
    if (!changed) break;
    for (int c = 0; c < k; ++c) {
      C sum;
      int count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] != c) continue;
        sum.sigma_sc += points[i].sigma_sc;
        sum.sigma_ss += points[i].sigma_ss;
        sum.pressure += points[i].pressure;
        ++count;
      }
      if (count > 0) out.centroids[c] = {sum.sigma_sc / count, sum.sigma_ss / count, sum.pressure / count};
    }
  }
  for (std::size_t i = 0; i < n; ++i) out.service_class[services[i].service_id] = assign[i];
  return out;
}

PlacementDecision ParagonLitePlace(const InstanceRequest& request, const AllocationState& state, const LoadMap& loads,
                                   const ParagonProfiles& profiles) {
  CheckRequest(request);
  const auto servers = FilterServers(state, request.requested_ht, kSpread);
  if (servers.empty()) return Reject(request, "capacity");
  const int server_id = servers.front();
  const auto& self = profiles.Of(request.service_id);
  int best = -1;
  double best_key = 0.0;
  for (int s = 0; s < state.topology().server(server_id).sockets; ++s) {
    if (state.IdleCount(server_id, s) < request.requested_ht) continue;
    double key = 0.0;
    for (InstanceId id : state.InstancesOn(server_id, s)) {
      auto it = loads.find(id);
      if (it == loads.end()) throw ValidationError("paragon: no load for instance " + std::to_string(id));
      const auto hts = static_cast<double>(state.PlacementOf(id).ht_ids.size());
      key += hts * ParagonProfiles::Conflict(self, profiles.Of(it->second.service_id));
    }
    if (best < 0 || key < best_key) {
      best = s;
      best_key = key;
    }
  }
  return Accept(request, LowestWindow(state, server_id, best, request.requested_ht));
}

// --- Hestia --------------------------------------------------------------------------

PlacementDecision HestiaPlace(const InstanceRequest& request, const AllocationState& state, const LoadMap& loads,
                              const InterferencePredictor& predictor, const SelectorPolicy& policy,
                              WoiCache* cache) {
  CheckRequest(request);
  std::optional<CandidateScore> best;
  for (const auto& candidate : EnumerateCandidates(state, request.requested_ht, policy)) {
    CandidateScore scored = ScoreCandidate(predictor, state, loads, candidate, request, cache);
    if (!best || ScoreLess(scored, *best)) best = std::move(scored);
  }
  if (!best) return Reject(request, "capacity");
  PlacementDecision d = Accept(request, best->candidate);
  d.score = best->socket_score;
  return d;
}

namespace {

class HestiaScheduler : public Scheduler {
 public:
  HestiaScheduler(const InterferencePredictor& predictor, SelectorPolicy policy)
      : predictor_(predictor), policy_(policy), cache_(predictor) {}
  SchedulerKind kind() const override { return SchedulerKind::kHestia; }
  PlacementDecision Place(const InstanceRequest& r, const AllocationState& s, const LoadMap& l) override {
    return HestiaPlace(r, s, l, predictor_, policy_, &cache_);
  }

 private:
  const InterferencePredictor& predictor_;
  SelectorPolicy policy_;
  WoiCache cache_;
};

class FfScheduler : public Scheduler {
 public:
  SchedulerKind kind() const override { return SchedulerKind::kFirstFit; }
  PlacementDecision Place(const InstanceRequest& r, const AllocationState& s, const LoadMap&) override {
    return FfPlace(r, s);
  }
};

class SocketSpreadScheduler : public Scheduler {
 public:
  SchedulerKind kind() const override { return SchedulerKind::kSocketSpread; }
  PlacementDecision Place(const InstanceRequest& r, const AllocationState& s, const LoadMap&) override {
    return SocketSpreadPlace(r, s);
  }
};

class RcpuScheduler : public Scheduler {
 public:
  explicit RcpuScheduler(double reserve) : reserve_(reserve) {}
  SchedulerKind kind() const override { return SchedulerKind::kRcpuLite; }
  PlacementDecision Place(const InstanceRequest& r, const AllocationState& s, const LoadMap&) override {
    return RcpuLitePlace(r, s, reserve_);
  }

 private:
  double reserve_;
};

class ParagonScheduler : public Scheduler {
 public:
  explicit ParagonScheduler(ParagonProfiles profiles) : profiles_(std::move(profiles)) {}
  SchedulerKind kind() const override { return SchedulerKind::kParagonLite; }
  PlacementDecision Place(const InstanceRequest& r, const AllocationState& s, const LoadMap& l) override {
    return ParagonLitePlace(r, s, l, profiles_);
  }

 private:
  ParagonProfiles profiles_;
};

class KambadurScheduler : public Scheduler {
 public:
  KambadurScheduler(const ContentionModel& oracle, double threshold) : oracle_(oracle), threshold_(threshold) {}
  SchedulerKind kind() const override { return SchedulerKind::kKambadurLite; }
  PlacementDecision Place(const InstanceRequest& r, const AllocationState& s, const LoadMap& l) override {
    auto util = [&](int server_id, int socket_idx) {
      const SocketOccupancy socket = SliceSocket(s, l, server_id, socket_idx);
      const auto noise = SocketNoise(oracle_, server_id, socket_idx, socket.size());
      return SolveSocket(socket, oracle_, noise);
    };
    return KambadurLitePlace(r, s, util, threshold_);
  }

 private:
  const ContentionModel& oracle_;
  double threshold_;
};

}  // namespace

std::unique_ptr<Scheduler> MakeScheduler(SchedulerKind kind, const SchedulerParams& params,
                                         const SchedulerDeps& deps) {
  params.Validate();
  switch (kind) {
    case SchedulerKind::kHestia:
      if (!deps.predictor) throw ValidationError("hestia scheduler requires a predictor checkpoint");
      return std::make_unique<HestiaScheduler>(*deps.predictor, params.policy);
    case SchedulerKind::kFirstFit: return std::make_unique<FfScheduler>();
    case SchedulerKind::kSocketSpread: return std::make_unique<SocketSpreadScheduler>();
    case SchedulerKind::kRcpuLite: return std::make_unique<RcpuScheduler>(params.rcpu_reserve);
    case SchedulerKind::kParagonLite:
      if (!deps.catalog) throw ValidationError("paragon scheduler requires a service catalog");
      return std::make_unique<ParagonScheduler>(BuildParagonProfiles(*deps.catalog, params.paragon_classes));
    case SchedulerKind::kKambadurLite:
      if (!deps.oracle) throw ValidationError("kambadur scheduler requires the contention model");
      return std::make_unique<KambadurScheduler>(*deps.oracle, params.kambadur_threshold);
  }
  throw ValidationError("unknown scheduler kind");
}

}  // namespace hestia
