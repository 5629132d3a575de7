#include "hestia/scorer.h"

#include "hestia/errors.h"

namespace hestia {

double InstanceScore(double cpu_wi, double cpu_woi) {
  if (cpu_woi <= kWoiFloor) {
    throw ValidationError("instance score: CPU_woi " + std::to_string(cpu_woi) + " is at or below the floor");
  }
  return (cpu_wi - cpu_woi) / cpu_woi;
}

double SocketScore(std::span<const WeightedScore> scores) {
  if (scores.empty()) throw ValidationError("socket score: no instances");
  double total_hts = 0.0;
  for (const auto& s : scores) {
    if (s.ht_count < 1) throw ValidationError("socket score: ht count must be >= 1");
    total_hts += s.ht_count;
  }
  double out = 0.0;
  for (const auto& s : scores) out += (s.ht_count / total_hts) * s.score;
  return out;
}

std::map<InstanceId, double> ModelInterference::PredictSocket(const SocketOccupancy& socket) const {
  return model_.PredictInstances(EncodeSocket(socket, model_.config()));
}

double ModelInterference::PredictAlone(const InstanceLoad& load, std::span<const int> local_hts,
                                       const std::string& cpu_model) const {
  return PredictWithoutInterference(model_, load, local_hts, cpu_model);
}

std::map<InstanceId, double> OracleInterference::PredictSocket(const SocketOccupancy& socket) const {
  const auto u = SolveSocket(socket, oracle_);
  std::map<InstanceId, double> out;
  for (InstanceId id : socket.Instances()) {
    const auto hts = socket.HtsOf(id);
    double sum = 0.0;
    for (int j : hts) sum += u[j];
    out[id] = sum / static_cast<double>(hts.size());
  }
  return out;
}

double OracleInterference::PredictAlone(const InstanceLoad& load, std::span<const int>,
                                        const std::string& cpu_model) const {
  return GroundTruthIsolated(load, cpu_model, oracle_);
}

double WoiCache::Get(const InstanceLoad& load, const std::vector<int>& local_hts, const std::string& cpu_model) {
  const auto key = std::make_tuple(load.service_id, load.rps, local_hts, cpu_model);
  auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  const double v = predictor_->PredictAlone(load, local_hts, cpu_model);
  values_.emplace(key, v);
  return v;
}

CandidateScore ScoreCandidate(const InterferencePredictor& predictor, const AllocationState& state, const LoadMap& loads,
                              const CandidateHtSet& candidate, const InstanceRequest& incoming, WoiCache* cache) {
  if (static_cast<int>(candidate.ht_ids.size()) != incoming.requested_ht) {
    throw ValidationError("score: candidate size does not match requested_ht");
  }
  SocketOccupancy socket = SliceSocket(state, loads, candidate.server_id, candidate.socket_idx);
  const int first = state.topology().HtId({candidate.server_id, candidate.socket_idx, 0, 0});
  for (int ht : candidate.ht_ids) {
    auto& slot = socket.occupant.at(ht - first);
    if (slot != kIdle) throw ValidationError("score: candidate HT " + std::to_string(ht) + " is occupied");
    slot = incoming.instance_id;
  }
  socket.loads[incoming.instance_id] = InstanceLoad{incoming.service_id, incoming.rps};

  const auto wi = predictor.PredictSocket(socket);
  WoiCache local(predictor);
  WoiCache& woi_cache = cache ? *cache : local;

  CandidateScore out;
  out.candidate = candidate;
  std::vector<WeightedScore> weighted;
  for (const auto& [id, cpu_wi] : wi) {
    InstanceScoreRow row;
    row.instance_id = id;
    row.cpu_wi = cpu_wi;
    const std::vector<int> hts = socket.HtsOf(id);
    row.ht_count = static_cast<int>(hts.size());
    row.cpu_woi = woi_cache.Get(socket.loads.at(id), hts, socket.cpu_model);
    if (row.cpu_woi <= kWoiFloor) {
      row.absolute_fallback = true;
      row.score = row.cpu_wi - row.cpu_woi;
    } else {
      row.score = InstanceScore(row.cpu_wi, row.cpu_woi);
    }
    weighted.push_back({row.score, row.ht_count});
    out.rows.push_back(row);
  }
  out.socket_score = SocketScore(weighted);
  return out;
}

bool ScoreLess(const CandidateScore& a, const CandidateScore& b) {
  if (a.socket_score != b.socket_score) return a.socket_score < b.socket_score;
  if (a.candidate.server_id != b.candidate.server_id) return a.candidate.server_id < b.candidate.server_id;
  if (a.candidate.socket_idx != b.candidate.socket_idx) return a.candidate.socket_idx < b.candidate.socket_idx;
  return a.candidate.ht_ids.front() < b.candidate.ht_ids.front();
}

}  // namespace hestia
