#include <gtest/gtest.h>

#include <random>

#include "hestia/errors.h"
#include "hestia/oracle.h"
#include "hestia/schedulers.h"
#include "hestia/selector.h"
#include "test_util.h"

namespace hestia {
namespace {

using testing::Catalog;
using testing::Svc;
using testing::Topo;

InstanceRequest Req(InstanceId id, int ht, int service = 0) { return {id, service, ht, 1.0, {}}; }

std::vector<int> Hts(const PlacementDecision& d) { return d.chosen ? d.chosen->ht_ids : std::vector<int>{}; }

// Random partially filled cluster with single-socket instances.
AllocationState RandomState(std::shared_ptr<const ClusterTopology> topo, std::mt19937_64& rng, LoadMap* loads = nullptr,
                            int services = 1) {
  AllocationState state(topo);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  InstanceId next = 1000;
  for (const auto& server : topo->servers()) {
    const double fill = U(rng);
    for (int h = 0; h < server.total_hts(); ++h) {
      if (U(rng) < fill) {
        state.Bind(next, server.server_id, std::vector<int>{h});
        if (loads) (*loads)[next] = {static_cast<int>(next % services), 1.0};
        ++next;
      }
    }
  }
  return state;
}

TEST(SchedulerKind, NamesRoundTrip) {
  for (auto k : {SchedulerKind::kHestia, SchedulerKind::kFirstFit, SchedulerKind::kSocketSpread,
                 SchedulerKind::kParagonLite, SchedulerKind::kKambadurLite, SchedulerKind::kRcpuLite}) {
    EXPECT_EQ(ParseSchedulerKind(ToString(k)), k);
  }
  EXPECT_THROW(ParseSchedulerKind("best"), ValidationError);
}

TEST(SchedulerParams, ValidateAndJson) {
  SchedulerParams p;
  p.rcpu_reserve = 0.25;
  p.policy.server_policy = ServerPolicy::kStack;
  const auto q = SchedulerParams::FromJson(p.ToJson());
  EXPECT_EQ(q.rcpu_reserve, 0.25);
  EXPECT_EQ(q.policy.server_policy, ServerPolicy::kStack);
  p.rcpu_reserve = 1.0;
  EXPECT_THROW(p.Validate(), ValidationError);
  p.rcpu_reserve = 0.1;
  p.paragon_classes = 0;
  EXPECT_THROW(p.Validate(), ValidationError);
}

TEST(FirstFit, IdOrder) {
  AllocationState state(Topo(1, 2, 4));
  EXPECT_EQ(Hts(FfPlace(Req(1, 2), state)), (std::vector<int>{0, 1}));
  state.Bind(9, 0, std::vector<int>{1});
  EXPECT_EQ(Hts(FfPlace(Req(1, 2), state)), (std::vector<int>{0, 2}));
  EXPECT_EQ(Hts(FfPlace(Req(1, 8), state)), (std::vector<int>{8, 9, 10, 11, 12, 13, 14, 15}));
  EXPECT_FALSE(FfPlace(Req(1, 9), state).accepted());
  EXPECT_EQ(FfPlace(Req(1, 9), state).reject_reason, "capacity");
}

TEST(SocketSpread, MostIdleSocket) {
  AllocationState state(Topo(1, 2, 4));
  EXPECT_EQ(SocketSpreadPlace(Req(1, 2), state).chosen->socket_idx, 0);
  state.Bind(9, 0, std::vector<int>{0, 1, 2, 3});  // socket 0: 4 idle, socket 1: 8
  state.Bind(8, 0, std::vector<int>{8, 9});        // socket 1: 6 idle
  const auto d = SocketSpreadPlace(Req(1, 2), state);
  EXPECT_EQ(d.chosen->socket_idx, 1);
  EXPECT_EQ(Hts(d), (std::vector<int>{10, 11}));
  EXPECT_FALSE(SocketSpreadPlace(Req(1, 7), state).accepted());
}

TEST(Rcpu, ReserveBoundary) {
  const auto topo = Topo(1, 2, 8);
  AllocationState state(topo);
  for (int h = 0; h < 12; ++h) state.Bind(100 + h, 0, std::vector<int>{h});
  auto d = RcpuLitePlace(Req(1, 2), state, 0.125);
  ASSERT_TRUE(d.accepted());
  EXPECT_EQ(d.chosen->socket_idx, 0);
  state.Bind(200, 0, std::vector<int>{12});
  d = RcpuLitePlace(Req(1, 2), state, 0.125);
  ASSERT_TRUE(d.accepted());
  EXPECT_EQ(d.chosen->socket_idx, 1);
  for (int h = 16; h < 29; ++h) state.Bind(300 + h, 0, std::vector<int>{h});
  EXPECT_FALSE(RcpuLitePlace(Req(1, 2), state, 0.125).accepted());
}

TEST(Rcpu, ZeroReserveIsFirstFit) {
  std::mt19937_64 rng(1);
  const auto topo = Topo(4, 2, 4);
  for (int trial = 0; trial < 300; ++trial) {
    const auto state = RandomState(topo, rng);
    const int ht = 1 + static_cast<int>(rng() % 8);
    const auto a = RcpuLitePlace(Req(1, ht), state, 0.0), b = FfPlace(Req(1, ht), state);
    EXPECT_EQ(a.chosen, b.chosen);
  }
}

TEST(Kambadur, ThresholdRule) {
  const auto topo = Topo(1, 1, 4);
  AllocationState state(topo);
  state.Bind(9, 0, std::vector<int>{1});
  std::vector<double> util(8, 0.0);
  util[1] = 0.8;
  auto snapshot = [&](int, int) { return util; };
  // FF would take {0, 2}; HT 0's sibling runs hot.
  EXPECT_EQ(Hts(FfPlace(Req(1, 2), state)), (std::vector<int>{0, 2}));
  EXPECT_EQ(Hts(KambadurLitePlace(Req(1, 2), state, snapshot, 0.5)), (std::vector<int>{2, 3}));
  util[1] = 0.3;
  EXPECT_EQ(Hts(KambadurLitePlace(Req(1, 2), state, snapshot, 0.5)), (std::vector<int>{0, 2}));
}

TEST(Kambadur, AllHotFallsBackToFirstFit) {
  const auto topo = Topo(1, 1, 2);
  AllocationState state(topo);
  state.Bind(9, 0, std::vector<int>{0});
  state.Bind(8, 0, std::vector<int>{2});
  auto hot = [](int, int) { return std::vector<double>(4, 0.9); };
  EXPECT_EQ(KambadurLitePlace(Req(1, 1), state, hot, 0.5).chosen, FfPlace(Req(1, 1), state).chosen);
}

TEST(Kambadur, IdleSiblingsOrThresholdOneMatchFirstFit) {
  std::mt19937_64 rng(2);
  const auto topo = Topo(3, 2, 4);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto state = RandomState(topo, rng);
    auto snapshot = [&](int, int) {
      std::vector<double> u(8);
      for (double& v : u) v = U(rng);
      return u;
    };
    const int ht = 1 + static_cast<int>(rng() % 6);
    EXPECT_EQ(KambadurLitePlace(Req(1, ht), state, snapshot, 1.0).chosen, FfPlace(Req(1, ht), state).chosen);
  }
  const AllocationState empty(topo);
  auto none = [](int, int) -> std::vector<double> { throw std::logic_error("no busy siblings to look up"); };
  EXPECT_EQ(KambadurLitePlace(Req(1, 3), empty, none, 0.5).chosen, FfPlace(Req(1, 3), empty).chosen);
}

ServiceCatalog TwoClassCatalog() {
  return Catalog({Svc(0, 0.3, 0.45, 0.3, 1.0), Svc(1, 0.3, 0.44, 0.29, 0.95), Svc(2, 0.3, 0.05, 0.02, 0.1),
                  Svc(3, 0.3, 0.06, 0.01, 0.12)});
}

TEST(Paragon, TwoClassesSeparate) {
  const auto profiles = BuildParagonProfiles(TwoClassCatalog(), 2);
  ASSERT_EQ(profiles.centroids.size(), 2u);
  EXPECT_EQ(profiles.service_class.at(0), profiles.service_class.at(1));
  EXPECT_EQ(profiles.service_class.at(2), profiles.service_class.at(3));
  EXPECT_NE(profiles.service_class.at(0), profiles.service_class.at(2));
  EXPECT_EQ(&profiles.Of(42), &profiles.mean);
}

TEST(Paragon, AggressivePrefersQuietSocket) {
  const auto profiles = BuildParagonProfiles(TwoClassCatalog(), 2);
  AllocationState state(Topo(1, 2, 4));
  state.Bind(1, 0, std::vector<int>{0, 1, 2});     // aggressive on socket 0
  state.Bind(2, 0, std::vector<int>{8, 9, 10, 11});  // quiet on socket 1, fewer idle HTs
  const LoadMap loads = {{1, {0, 1.0}}, {2, {2, 1.0}}, {5, {1, 1.0}}};
  const auto d = ParagonLitePlace(Req(5, 2, 1), state, loads, profiles);
  EXPECT_EQ(d.chosen->socket_idx, 1);
  EXPECT_EQ(SocketSpreadPlace(Req(5, 2, 1), state).chosen->socket_idx, 0);
}

TEST(Paragon, SingleClassIsSocketSpread) {
  const auto profiles = BuildParagonProfiles(TwoClassCatalog(), 1);
  std::mt19937_64 rng(3);
  const auto topo = Topo(3, 2, 4);
  for (int trial = 0; trial < 300; ++trial) {
    LoadMap loads;
    const auto state = RandomState(topo, rng, &loads, 4);
    const int ht = 1 + static_cast<int>(rng() % 6);
    loads[1] = {1, 1.0};
    EXPECT_EQ(ParagonLitePlace(Req(1, ht, 1), state, loads, profiles).chosen,
              SocketSpreadPlace(Req(1, ht, 1), state).chosen);
  }
}

class HestiaTest : public ::testing::Test {
 protected:
  ContentionModel oracle{TwoClassCatalog(), 0.0, 0};
  OracleInterference predictor{oracle};
};

TEST_F(HestiaTest, EmptyClusterTieBreak) {
  const AllocationState state(Topo(3, 2, 4));
  const LoadMap loads = {{1, {0, 1.0}}};
  const auto d = HestiaPlace(Req(1, 2), state, loads, predictor, {});
  ASSERT_TRUE(d.accepted());
  EXPECT_EQ(d.chosen->server_id, 0);
  EXPECT_EQ(d.chosen->socket_idx, 0);
  EXPECT_EQ(d.chosen->ht_ids, (std::vector<int>{1, 2}));  // first sibling-free window
  EXPECT_DOUBLE_EQ(*d.score, 0.0);
  const auto profiles = BuildParagonProfiles(TwoClassCatalog(), 2);
  const auto p = ParagonLitePlace(Req(1, 2), state, loads, profiles);
  EXPECT_EQ(p.chosen->server_id, d.chosen->server_id);
  EXPECT_EQ(p.chosen->socket_idx, d.chosen->socket_idx);
}

TEST_F(HestiaTest, ColdSocketForSensitiveService) {
  AllocationState state(Topo(1, 2, 4));
  LoadMap loads;
  for (int h = 0; h < 6; ++h) {
    state.Bind(10 + h, 0, std::vector<int>{h});
    loads[10 + h] = {0, 1.3};
  }
  for (int h = 8; h < 14; ++h) {
    state.Bind(10 + h, 0, std::vector<int>{h});
    loads[10 + h] = {2, 0.6};
  }
  loads[1] = {0, 1.0};
  const auto d = HestiaPlace(Req(1, 2), state, loads, predictor, {});
  EXPECT_EQ(d.chosen->socket_idx, 1);
}

TEST_F(HestiaTest, ArgminOverAllCandidates) {
  std::mt19937_64 rng(4);
  const auto topo = Topo(2, 2, 2);
  for (int trial = 0; trial < 100; ++trial) {
    LoadMap loads;
    const auto state = RandomState(topo, rng, &loads, 4);
    const int ht = 1 + static_cast<int>(rng() % 3);
    loads[1] = {static_cast<int>(rng() % 4), 1.0};
    const auto d = HestiaPlace(Req(1, ht, loads[1].service_id), state, loads, predictor, {});
    const auto all = EnumerateCandidates(state, ht, {});
    ASSERT_EQ(d.accepted(), !all.empty());
    for (const auto& c : all) {
      EXPECT_LE(*d.score, ScoreCandidate(predictor, state, loads, c, Req(1, ht, loads[1].service_id)).socket_score);
    }
  }
}

TEST_F(HestiaTest, RejectsWithoutCapacity) {
  AllocationState state(Topo(1, 2, 2));
  state.Bind(5, 0, std::vector<int>{0, 1});
  state.Bind(6, 0, std::vector<int>{4});
  const LoadMap loads = {{5, {0, 1.0}}, {6, {0, 1.0}}, {1, {0, 1.0}}};
  const auto d = HestiaPlace(Req(1, 4), state, loads, predictor, {});
  EXPECT_FALSE(d.accepted());
  EXPECT_EQ(d.reject_reason, "capacity");
}

TEST(MakeScheduler, MissingDependencies) {
  EXPECT_THROW(MakeScheduler(SchedulerKind::kHestia, {}, {}), ValidationError);
  EXPECT_THROW(MakeScheduler(SchedulerKind::kKambadurLite, {}, {}), ValidationError);
  EXPECT_THROW(MakeScheduler(SchedulerKind::kParagonLite, {}, {}), ValidationError);
  EXPECT_EQ(MakeScheduler(SchedulerKind::kFirstFit, {}, {})->kind(), SchedulerKind::kFirstFit);
}

}  // namespace
}  // namespace hestia
