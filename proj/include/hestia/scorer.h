#pragma once

#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "hestia/oracle.h"
#include "hestia/predictor.h"
#include "hestia/selector.h"
#include "hestia/topology.h"
#include "hestia/workload.h"

namespace hestia {

// Below this CPU_woi the relative increase is replaced by the absolute one.
inline constexpr double kWoiFloor = 0.01;

// (wi - woi) / woi. Throws when woi <= kWoiFloor.
double InstanceScore(double cpu_wi, double cpu_woi);

struct WeightedScore {
  double score = 0.0;
  int ht_count = 1;
};

// HT-weighted mean of per-instance scores.
double SocketScore(std::span<const WeightedScore> scores);

struct InstanceScoreRow {
  InstanceId instance_id = 0;
  double cpu_wi = 0.0;
  double cpu_woi = 0.0;
  double score = 0.0;
  int ht_count = 0;
  bool absolute_fallback = false;
};

struct CandidateScore {
  CandidateHtSet candidate;
  double socket_score = 0.0;
  std::vector<InstanceScoreRow> rows;
};

// Source of CPU_wi / CPU_woi for scoring.
class InterferencePredictor {
 public:
  virtual ~InterferencePredictor() = default;
  // CPU_wi for every instance on the socket.
  virtual std::map<InstanceId, double> PredictSocket(const SocketOccupancy& socket) const = 0;
  // CPU_woi: the instance alone on its socket-local HTs, every other HT idle.
  virtual double PredictAlone(const InstanceLoad& load, std::span<const int> local_hts,
                              const std::string& cpu_model) const = 0;
};

class ModelInterference : public InterferencePredictor {
 public:
  explicit ModelInterference(const AttentionPredictor& model) : model_(model) {}
  std::map<InstanceId, double> PredictSocket(const SocketOccupancy& socket) const override;
  double PredictAlone(const InstanceLoad& load, std::span<const int> local_hts,
                      const std::string& cpu_model) const override;

 private:
  const AttentionPredictor& model_;
};

// Noise-free contention oracle used as a perfect predictor.
class OracleInterference : public InterferencePredictor {
 public:
  explicit OracleInterference(const ContentionModel& oracle) : oracle_(oracle) {}
  std::map<InstanceId, double> PredictSocket(const SocketOccupancy& socket) const override;
  double PredictAlone(const InstanceLoad& load, std::span<const int> local_hts,
                      const std::string& cpu_model) const override;

 private:
  const ContentionModel& oracle_;
};

// Memoized CPU_woi per (service, rps, HT layout, cpu_model).
class WoiCache {
 public:
  explicit WoiCache(const InterferencePredictor& predictor) : predictor_(&predictor) {}
  double Get(const InstanceLoad& load, const std::vector<int>& local_hts, const std::string& cpu_model);

 private:
  const InterferencePredictor* predictor_;
  std::map<std::tuple<int, double, std::vector<int>, std::string>, double> values_;
};

// Scores the socket after hypothetically binding `incoming` to the candidate.
// The state is not modified.
CandidateScore ScoreCandidate(const InterferencePredictor& predictor, const AllocationState& state, const LoadMap& loads,
                              const CandidateHtSet& candidate, const InstanceRequest& incoming,
                              WoiCache* cache = nullptr);

// Deterministic order: score, then server_id, socket_idx, first ht_id.
bool ScoreLess(const CandidateScore& a, const CandidateScore& b);

}  // namespace hestia
