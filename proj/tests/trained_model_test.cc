// Checks that need a predictor trained on the reference scenario.

#include <gtest/gtest.h>

#include <algorithm>
#include <optional>

#include "hestia/experiment.h"
#include "hestia/schedulers.h"
#include "hestia/scorer.h"

namespace hestia {
namespace {

struct Reference {
  ExperimentConfig config;
  Scenario scenario;
  std::optional<TrainedModels> models;
};

const Reference& Trained() {
  static const Reference ref = [] {
    Reference r;
    r.scenario = BuildScenario(r.config);
    r.models.emplace(TrainAttention(r.config, r.scenario));
    return r;
  }();
  return ref;
}

TEST(TrainedModel, LossDecreases) {
  const auto& r = Trained();
  EXPECT_GT(r.models->report.epoch_loss.front(), r.models->report.epoch_loss.back());
  EXPECT_LE(r.models->report.heldout.rmse, 0.03);
}

TEST(TrainedModel, IsolatedPredictionTracksOracle) {
  const auto& r = Trained();
  const auto& model = r.models->attention;
  for (const auto& spec : r.scenario.catalog.services()) {
    for (const auto& cpu : model.config().cpu_vocab) {
      for (int ht : {spec.ht_min, spec.ht_max}) {
        const InstanceLoad load{spec.service_id, spec.rps_ref};
        EXPECT_NEAR(PredictWithoutInterference(model, load, ht, cpu), GroundTruthIsolated(load, cpu, r.scenario.oracle),
                    0.05)
            << "service " << spec.service_id << " on " << cpu << " with " << ht << " HTs";
      }
    }
  }
}

TEST(TrainedModel, IsolatedAtBaseFourTenths) {
  const auto& r = Trained();
  const auto& model = r.models->attention;
  int checked = 0;
  for (const auto& spec : r.scenario.catalog.services()) {
    for (const auto& cpu : model.config().cpu_vocab) {
      // Request rate at which the isolated utilization is exactly 0.4.
      const double factor = 0.4 / (spec.base_util * r.scenario.catalog.SpeedFactor(cpu));
      if (factor < 0.6 || factor > 1.4) continue;
      const InstanceLoad load{spec.service_id, spec.rps_ref * factor};
      ASSERT_NEAR(GroundTruthIsolated(load, cpu, r.scenario.oracle), 0.4, 1e-12);
      EXPECT_NEAR(PredictWithoutInterference(model, load, 2, cpu), 0.4, 0.03) << "service " << spec.service_id;
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(TrainedModel, MonotoneInRps) {
  const auto& r = Trained();
  const auto& model = r.models->attention;
  for (const auto& spec : r.scenario.catalog.services()) {
    const std::string& cpu = model.config().cpu_vocab.front();
    const double lo = PredictWithoutInterference(model, {spec.service_id, 0.7 * spec.rps_ref}, 2, cpu);
    const double hi = PredictWithoutInterference(model, {spec.service_id, 1.4 * spec.rps_ref}, 2, cpu);
    EXPECT_GE(hi, lo - 0.02) << "service " << spec.service_id;
  }
}

// Most core-sensitive service, and the heaviest neighbor.
std::pair<int, int> SensitiveAndAggressive(const ServiceCatalog& catalog) {
  const auto& s = catalog.services();
  const auto sensitive = std::max_element(s.begin(), s.end(), [](const auto& a, const auto& b) {
    return a.sigma_sc < b.sigma_sc;
  });
  const auto aggressive = std::max_element(s.begin(), s.end(), [](const auto& a, const auto& b) {
    return a.pressure * a.base_util < b.pressure * b.base_util;
  });
  return {sensitive->service_id, aggressive->service_id};
}

TEST(TrainedModel, EmptySocketScoresNearZero) {
  const auto& r = Trained();
  const ModelInterference predictor(r.models->attention);
  const AllocationState state(r.scenario.topology);
  for (const auto& spec : r.scenario.catalog.services()) {
    const InstanceRequest req{1, spec.service_id, 2, spec.rps_ref, {}};
    const LoadMap loads = {{1, {spec.service_id, spec.rps_ref}}};
    const auto s = ScoreCandidate(predictor, state, loads, {0, 1, {17, 18}, false}, req);
    EXPECT_LE(std::abs(s.socket_score), 0.05);
  }
}

TEST(TrainedModel, EmptyCoreBeatsHotSibling) {
  const auto& r = Trained();
  const ModelInterference predictor(r.models->attention);
  const auto [sensitive, aggressive] = SensitiveAndAggressive(r.scenario.catalog);
  AllocationState state(r.scenario.topology);
  state.Bind(1, 0, std::vector<int>{0, 2});
  const LoadMap loads = {{1, {aggressive, 1.4 * r.scenario.catalog.Get(aggressive).rps_ref}},
                         {2, {sensitive, r.scenario.catalog.Get(sensitive).rps_ref}}};
  const InstanceRequest req{2, sensitive, 2, loads.at(2).rps, {}};
  const auto shared = ScoreCandidate(predictor, state, loads, {0, 0, {1, 3}, false}, req);
  const auto clean = ScoreCandidate(predictor, state, loads, {0, 0, {8, 10}, false}, req);
  EXPECT_LT(clean.socket_score, shared.socket_score);
}

TEST(TrainedModel, HestiaPicksColdSocket) {
  const auto& r = Trained();
  const ModelInterference predictor(r.models->attention);
  const auto [sensitive, aggressive] = SensitiveAndAggressive(r.scenario.catalog);
  AllocationState state(r.scenario.topology);
  LoadMap loads;
  InstanceId next = 10;
  // Every server but the last is full.
  for (int s = 0; s + 1 < r.scenario.topology->num_servers(); ++s) {
    std::vector<int> all(32);
    for (int h = 0; h < 32; ++h) all[h] = h;
    state.Bind(next, s, std::vector<int>(all.begin(), all.begin() + 16));
    loads[next++] = {sensitive, 1000.0};
    state.Bind(next, s, std::vector<int>(all.begin() + 16, all.end()));
    loads[next++] = {sensitive, 1000.0};
  }
  const int last = r.scenario.topology->num_servers() - 1;
  // Socket 0: ten HTs of the aggressive service, one per instance pair of cores.
  for (int h = 0; h < 10; h += 2) {
    state.Bind(next, last, std::vector<int>{h, h + 1});
    loads[next++] = {aggressive, 1.4 * r.scenario.catalog.Get(aggressive).rps_ref};
  }
  // Socket 1: ten HTs of the quietest load.
  const auto& services = r.scenario.catalog.services();
  const int quiet = std::min_element(services.begin(), services.end(), [](const auto& a, const auto& b) {
                      return a.pressure * a.base_util < b.pressure * b.base_util;
                    })->service_id;
  for (int h = 16; h < 26; h += 2) {
    state.Bind(next, last, std::vector<int>{h, h + 1});
    loads[next++] = {quiet, 0.6 * r.scenario.catalog.Get(quiet).rps_ref};
  }
  const InstanceRequest req{1, sensitive, 2, r.scenario.catalog.Get(sensitive).rps_ref, {}};
  loads[1] = {sensitive, req.rps};
  const auto d = HestiaPlace(req, state, loads, predictor, {});
  ASSERT_TRUE(d.accepted());
  EXPECT_EQ(d.chosen->server_id, last);
  EXPECT_EQ(d.chosen->socket_idx, 1);
}

}  // namespace
}  // namespace hestia
