#include "hestia/simulator.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>

#include "hestia/digest.h"
#include "hestia/errors.h"

namespace hestia {

using nlohmann::json;

std::string ToString(InstanceStatus status) {
  switch (status) {
    case InstanceStatus::kPlaced: return "placed";
    case InstanceStatus::kRejected: return "rejected";
    case InstanceStatus::kDeparted: return "departed";
  }
  return "unknown";
}

double CoreEquivalents(const std::vector<InstanceRow>& rows) {
  double total = 0.0;
  for (const auto& r : rows) {
    if (r.status != InstanceStatus::kPlaced) continue;
    total += r.realized * static_cast<double>(r.ht_ids.size()) / r.hts_per_core;
  }
  return total;
}

namespace {

std::vector<ServiceRow> ServiceTable(const std::vector<InstanceRow>& rows) {
  struct Acc {
    int n = 0, n_inc = 0;
    double realized = 0.0, isolated = 0.0, increase = 0.0;
  };
  std::map<int, Acc> acc;
  for (const auto& r : rows) {
    if (r.status != InstanceStatus::kPlaced) continue;
    Acc& a = acc[r.service_id];
    ++a.n;
    a.realized += r.realized;
    a.isolated += r.isolated;
    if (r.isolated > 0.0) {
      a.increase += (r.realized - r.isolated) / r.isolated;
      ++a.n_inc;
    }
  }
  std::vector<ServiceRow> out;
  for (const auto& [id, a] : acc) {
    out.push_back({id, a.n, a.realized / a.n, a.isolated / a.n, a.n_inc ? a.increase / a.n_inc : 0.0});
  }
  return out;
}

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << text;
}

}  // namespace

json SimulationReport::ToJson() const {
  json inst = json::array();
  for (const auto& r : instances) {
    json row = {{"instance_id", r.instance_id}, {"service_id", r.service_id}, {"requested_ht", r.requested_ht},
                {"rps", r.rps},                 {"status", ToString(r.status)}};
    if (r.status == InstanceStatus::kRejected) row["reject_reason"] = r.reject_reason;
    if (r.server_id >= 0) {
      row["server_id"] = r.server_id;
      row["socket_idx"] = r.socket_idx;
      row["ht_ids"] = r.ht_ids;
      row["hts_per_core"] = r.hts_per_core;
    }
    if (r.status == InstanceStatus::kPlaced) {
      row["realized"] = r.realized;
      row["isolated"] = r.isolated;
    }
    if (r.score) row["score"] = *r.score;
    inst.push_back(std::move(row));
  }
  json svc = json::array();
  for (const auto& s : services) {
    svc.push_back({{"service_id", s.service_id},
                   {"instances", s.instances},
                   {"mean_realized", s.mean_realized},
                   {"mean_isolated", s.mean_isolated},
                   {"mean_increase", s.mean_increase}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "simulation_report"},
          {"core_equivalents_definition", "sum over placed instances of realized_util * ht_count / hts_per_core"},
          {"scheduler", scheduler},
          {"seed", seed},
          {"trace_digest", trace_digest},
          {"config", config},
          {"summary", {{"core_equivalents", core_equivalents}, {"rejections", rejections},
                       {"instances", instances.size()}}},
          {"instances", inst},
          {"services", svc}};
}

std::vector<std::filesystem::path> SimulationReport::Write(const std::filesystem::path& dir,
                                                           const std::string& prefix) const {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths = {dir / (prefix + ".json"), dir / (prefix + "_instances.csv"),
                                              dir / (prefix + "_services.csv")};
  WriteText(paths[0], ToJson().dump(2) + "\n");

  std::string csv = "instance_id,service_id,requested_ht,rps,status,server_id,socket_idx,ht_ids,realized,isolated\n";
  for (const auto& r : instances) {
    std::string hts;
    for (std::size_t i = 0; i < r.ht_ids.size(); ++i) hts += (i ? " " : "") + std::to_string(r.ht_ids[i]);
    const bool placed = r.status == InstanceStatus::kPlaced;
    csv += std::to_string(r.instance_id) + "," + std::to_string(r.service_id) + "," +
           std::to_string(r.requested_ht) + "," + Num(r.rps) + "," + ToString(r.status) + "," +
           std::to_string(r.server_id) + "," + std::to_string(r.socket_idx) + "," + hts + "," +
           (placed ? Num(r.realized) : "") + "," + (placed ? Num(r.isolated) : "") + "\n";
  }
  WriteText(paths[1], csv);

  csv = "service_id,instances,mean_realized,mean_isolated,mean_increase\n";
  for (const auto& s : services) {
    csv += std::to_string(s.service_id) + "," + std::to_string(s.instances) + "," + Num(s.mean_realized) + "," +
           Num(s.mean_isolated) + "," + Num(s.mean_increase) + "\n";
  }
  WriteText(paths[2], csv);
  return paths;
}

SimulationReport RunEpisode(const Trace& trace, std::shared_ptr<const ClusterTopology> topology,
                            Scheduler& scheduler, const ContentionModel& oracle, std::uint64_t seed) {
  oracle.Validate();
  AllocationState state(topology);
  LoadMap loads;
  SimulationReport report;
  report.scheduler = ToString(scheduler.kind());
  report.seed = seed;
  report.trace_digest = Sha256Hex(SerializeTrace(trace));

  std::map<InstanceId, std::size_t> row_of;
  for (std::size_t k = 0; k < trace.requests.size(); ++k) {
    const InstanceRequest& req = trace.requests[k];
    for (auto& row : report.instances) {
      const auto& r = trace.requests[row_of.at(row.instance_id)];
      if (row.status == InstanceStatus::kPlaced && r.depart_at && *r.depart_at <= static_cast<std::int64_t>(k)) {
        state.Release(row.instance_id);
        loads.erase(row.instance_id);
        row.status = InstanceStatus::kDeparted;
      }
    }
    if (!oracle.catalog.Has(req.service_id)) {
      throw ValidationError("trace record " + std::to_string(k) + ": undeclared service_id " +
                            std::to_string(req.service_id));
    }
    loads[req.instance_id] = InstanceLoad{req.service_id, req.rps};
    const PlacementDecision d = scheduler.Place(req, state, loads);

    InstanceRow row;
    row.instance_id = req.instance_id;
    row.service_id = req.service_id;
    row.requested_ht = req.requested_ht;
    row.rps = req.rps;
    row.score = d.score;
    if (d.accepted()) {
      const CandidateHtSet& c = *d.chosen;
      if (static_cast<int>(c.ht_ids.size()) != req.requested_ht) {
        throw RuntimeFailure("scheduler returned a candidate of the wrong size");
      }
      state.Bind(req.instance_id, c.server_id, c.ht_ids);
      row.server_id = c.server_id;
      row.socket_idx = c.socket_idx;
      row.ht_ids = c.ht_ids;
      row.hts_per_core = topology->server(c.server_id).hts_per_core;
    } else {
      loads.erase(req.instance_id);
      row.status = InstanceStatus::kRejected;
      row.reject_reason = d.reject_reason;
      ++report.rejections;
    }
    row_of[req.instance_id] = k;
    report.instances.push_back(std::move(row));
  }

  const UtilizationField field = GroundTruth(state, loads, oracle);
  for (auto& row : report.instances) {
    if (row.status != InstanceStatus::kPlaced) continue;
    row.realized = field.InstanceMean(state.PlacementOf(row.instance_id));
    row.isolated = GroundTruthIsolated(loads.at(row.instance_id), topology->server(row.server_id).cpu_model, oracle);
  }
  report.core_equivalents = CoreEquivalents(report.instances);
  report.services = ServiceTable(report.instances);
  return report;
}

double ReductionPercent(double baseline, double candidate) {
  if (!(baseline > 0.0)) throw ValidationError("reduction: baseline must be positive");
  return (baseline - candidate) / baseline * 100.0;
}

Metrics ComputeMetrics(const SimulationReport& report, const SimulationReport* baseline) {
  Metrics m;
  m.scheduler = report.scheduler;
  m.core_equivalents = report.core_equivalents;
  m.rejection_rate =
      report.instances.empty() ? 0.0 : static_cast<double>(report.rejections) / report.instances.size();
  m.services = report.services;
  if (baseline) {
    if (baseline->trace_digest != report.trace_digest) {
      throw ValidationError("metrics: reports were produced from different traces");
    }
    m.reduction_pct = ReductionPercent(baseline->core_equivalents, report.core_equivalents);
  }
  return m;
}

// --- Training data ---------------------------------------------------------------

json CollectConfig::ToJson() const {
  return {{"n_samples", n_samples},
          {"isolated_fraction", isolated_fraction},
          {"min_instances", min_instances},
          {"max_instances", max_instances},
          {"contiguous_fraction", contiguous_fraction},
          {"rps_factor_lo", rps_factor_lo},
          {"rps_factor_hi", rps_factor_hi},
          {"zipf_exponent", zipf_exponent}};
}

CollectConfig CollectConfig::FromJson(const json& doc) {
  CollectConfig c;
  c.n_samples = doc.value("n_samples", c.n_samples);
  c.isolated_fraction = doc.value("isolated_fraction", c.isolated_fraction);
  c.min_instances = doc.value("min_instances", c.min_instances);
  c.max_instances = doc.value("max_instances", c.max_instances);
  c.contiguous_fraction = doc.value("contiguous_fraction", c.contiguous_fraction);
  c.rps_factor_lo = doc.value("rps_factor_lo", c.rps_factor_lo);
  c.rps_factor_hi = doc.value("rps_factor_hi", c.rps_factor_hi);
  c.zipf_exponent = doc.value("zipf_exponent", c.zipf_exponent);
  return c;
}

bool HasSiblingSharing(const SocketOccupancy& socket) {
  for (int base = 0; base + socket.hts_per_core <= socket.size(); base += socket.hts_per_core) {
    for (int a = base; a < base + socket.hts_per_core; ++a) {
      for (int b = a + 1; b < base + socket.hts_per_core; ++b) {
        if (socket.occupant[a] != kIdle && socket.occupant[b] != kIdle && socket.occupant[a] != socket.occupant[b]) {
          return true;
        }
      }
    }
  }
  return false;
}

namespace {

SocketOccupancy RandomSocket(const ServerTopology& server, const ServiceCatalog& catalog, int target,
                             const CollectConfig& config, std::mt19937_64& rng) {
  SocketOccupancy socket;
  socket.cpu_model = server.cpu_model;
  socket.hts_per_core = server.hts_per_core;
  socket.occupant.assign(server.hts_per_socket(), kIdle);
  const auto& services = catalog.services();
  std::vector<double> weights(services.size());
  for (std::size_t i = 0; i < services.size(); ++i) weights[i] = 1.0 / std::pow(i + 1.0, config.zipf_exponent);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::uniform_real_distribution<double> factor(config.rps_factor_lo, config.rps_factor_hi);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (InstanceId id = 0; id < target; ++id) {
    const ServiceSpec& s = services[pick(rng)];
    const int d = std::min(std::uniform_int_distribution<int>(s.ht_min, s.ht_max)(rng), socket.size());
    std::vector<int> idle;
    for (int j = 0; j < socket.size(); ++j) {
      if (socket.occupant[j] == kIdle) idle.push_back(j);
    }
    if (static_cast<int>(idle.size()) < d) break;
    std::vector<int> hts;
    if (coin(rng) < config.contiguous_fraction) {
      const int start = std::uniform_int_distribution<int>(0, static_cast<int>(idle.size()) - d)(rng);
      hts.assign(idle.begin() + start, idle.begin() + start + d);
    } else {
      std::shuffle(idle.begin(), idle.end(), rng);
      hts.assign(idle.begin(), idle.begin() + d);
    }
    for (int h : hts) socket.occupant[h] = id;
    socket.loads[id] = InstanceLoad{s.service_id, s.rps_ref * factor(rng)};
  }
  return socket;
}

}  // namespace

TrainingDataset CollectTrainingData(const ClusterTopology& topology, const PredictorConfig& predictor,
                                    const ContentionModel& oracle, const CollectConfig& config, std::uint64_t seed) {
  if (config.n_samples < 1) throw ValidationError("collect: n_samples must be >= 1");
  if (config.min_instances < 2 || config.max_instances < config.min_instances) {
    throw ValidationError("collect: need 2 <= min_instances <= max_instances");
  }
  if (!(config.isolated_fraction >= 0.1 && config.isolated_fraction <= 1.0)) {
    throw ValidationError("collect: isolated_fraction must be in [0.1, 1]");
  }
  oracle.Validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  TrainingDataset out;
  int sharing = 0;
  for (int i = 0; i < config.n_samples; ++i) {
    const ServerTopology& server = topology.servers()[i % topology.num_servers()];
    const bool isolated = std::floor((i + 1) * config.isolated_fraction) > std::floor(i * config.isolated_fraction);
    SocketOccupancy socket;
    for (int attempt = 0;; ++attempt) {
      const int target =
          isolated ? 1 : std::uniform_int_distribution<int>(config.min_instances, config.max_instances)(rng);
      socket = RandomSocket(server, oracle.catalog, target, config, rng);
      const bool need_sharing = !isolated && sharing < std::ceil(0.2 * (i + 1));
      if (!need_sharing || HasSiblingSharing(socket) || attempt >= 1000) break;
    }
    if (HasSiblingSharing(socket)) ++sharing;

    std::vector<double> eps(socket.size(), 0.0);
    if (oracle.noise_std > 0.0) {
      for (double& e : eps) e = oracle.noise_std * noise(rng);
    }
    const auto u = SolveSocket(socket, oracle, eps);
    TrainingSample sample;
    sample.input = EncodeSocket(socket, predictor);
    for (InstanceId id : socket.Instances()) {
      double sum = 0.0;
      const auto hts = socket.HtsOf(id);
      for (int j : hts) sum += u[j];
      sample.truth[id] = sum / static_cast<double>(hts.size());
    }
    out.samples.push_back(std::move(sample));
  }
  out.provenance = {{"seed", seed},
                    {"noise_std", oracle.noise_std},
                    {"collect", config.ToJson()},
                    {"sibling_sharing_samples", sharing}};
  return out;
}

std::map<InstanceId, double> OraclePredictor::PredictInstances(const SocketInput& input) const {
  SocketOccupancy socket;
  socket.cpu_model = config_.cpu_vocab.at(input.cpu_index);
  socket.hts_per_core = input.hts_per_core;
  socket.occupant = input.occupant;
  for (int j = 0; j < input.size(); ++j) {
    if (input.occupant[j] == kIdle || socket.loads.contains(input.occupant[j])) continue;
    const int service_id = config_.service_vocab.at(input.service_index[j] - 1);
    socket.loads[input.occupant[j]] = InstanceLoad{service_id, input.rps_norm[j] * config_.rps_ref.at(service_id)};
  }
  ContentionModel clean = oracle_;
  clean.noise_std = 0.0;
  const auto u = SolveSocket(socket, clean);
  std::map<InstanceId, double> out;
  for (InstanceId id : input.instances) {
    const auto hts = socket.HtsOf(id);
    double sum = 0.0;
    for (int j : hts) sum += u[j];
    out[id] = sum / static_cast<double>(hts.size());
  }
  return out;
}

}  // namespace hestia
