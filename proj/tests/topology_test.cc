#include <gtest/gtest.h>

#include <filesystem>

#include "hestia/errors.h"
#include "hestia/topology.h"
#include "test_util.h"

namespace hestia {
namespace {

using testing::Topo;

TEST(Topology, OneServerIndexFormula) {
  const auto topo = Topo(1, 2, 2);
  EXPECT_EQ(topo->total_hts(), 8);
  for (int h = 0; h < 4; ++h) EXPECT_EQ(topo->SocketOf(0, h), 0);
  for (int h = 4; h < 8; ++h) EXPECT_EQ(topo->SocketOf(0, h), 1);
  EXPECT_EQ(topo->HtId({0, 1, 1, 1}), 7);
}

TEST(Topology, TwoServersShareLocalIds) {
  const auto topo = Topo(2, 2, 2);
  EXPECT_EQ(topo->total_hts(), 16);
  EXPECT_EQ(topo->HtId({1, 0, 0, 0}), 0);
  EXPECT_EQ(topo->HtId({1, 1, 1, 1}), 7);
}

TEST(Topology, RejectsBadDimensions) {
  EXPECT_THROW(ClusterTopology({{0, "cpu", 2, 0, 2}}), ValidationError);
  EXPECT_THROW(ClusterTopology({{0, "cpu", 0, 2, 2}}), ValidationError);
  EXPECT_THROW(ClusterTopology({{1, "cpu", 1, 2, 2}}), ValidationError);
  EXPECT_THROW(BuildTopology(nlohmann::json{{"servers", {{{"server_id", 0}, {"cpu_model", "x"}, {"sockets", 1}}}}}),
               ValidationError);
}

TEST(Topology, HtIdRoundTrip) {
  const auto topo = Topo(3, 2, 4, 2);
  for (int s = 0; s < 3; ++s) {
    for (int h = 0; h < 16; ++h) {
      const HtRef r = topo->Resolve(s, h);
      EXPECT_TRUE(topo->Contains(r));
      EXPECT_EQ(topo->HtId(r), h);
    }
  }
  EXPECT_FALSE(topo->Contains({0, 2, 0, 0}));
  EXPECT_FALSE(topo->Contains({3, 0, 0, 0}));
}

TEST(Topology, NeighborClasses) {
  const auto topo = Topo(2, 2, 2);
  const HtRef h0 = topo->Resolve(0, 0);
  EXPECT_EQ(ClassifyNeighbors(*topo, h0, topo->Resolve(0, 0)), NeighborClass::kSelf);
  EXPECT_EQ(ClassifyNeighbors(*topo, h0, topo->Resolve(0, 1)), NeighborClass::kSharingCore);
  EXPECT_EQ(ClassifyNeighbors(*topo, h0, topo->Resolve(0, 2)), NeighborClass::kSharingSocket);
  EXPECT_EQ(ClassifyNeighbors(*topo, h0, topo->Resolve(0, 4)), NeighborClass::kOppositeSocket);
  EXPECT_EQ(ClassifyNeighbors(*topo, h0, topo->Resolve(1, 0)), NeighborClass::kDifferentServer);
  EXPECT_THROW(ClassifyNeighbors(*topo, h0, HtRef{5, 0, 0, 0}), ValidationError);
}

TEST(Topology, SiblingsAreAdjacent) {
  const auto topo = Topo(1, 1, 4, 2);
  EXPECT_EQ(topo->Siblings(0, 2), std::vector<int>{3});
  EXPECT_EQ(topo->Siblings(0, 5), std::vector<int>{4});
  const auto smt4 = Topo(1, 1, 2, 4);
  EXPECT_EQ(smt4->Siblings(0, 5), (std::vector<int>{4, 6, 7}));
}

TEST(Topology, SaveLoadRoundTrip) {
  const auto topo = Topo(3, 2, 8);
  const auto path = std::filesystem::temp_directory_path() / "hestia_topology_test.json";
  SaveTopology(*topo, path);
  EXPECT_EQ(LoadTopology(path), *topo);
  std::filesystem::remove(path);
}

TEST(AllocationState, IdleHts) {
  AllocationState state(Topo(1, 2, 2));
  EXPECT_EQ(state.IdleHts(0, 0), (std::vector<int>{0, 1, 2, 3}));
  state.Bind(1, 0, std::vector<int>{1});
  EXPECT_EQ(state.IdleHts(0, 0), (std::vector<int>{0, 2, 3}));
  state.Bind(2, 0, std::vector<int>{0, 2, 3});
  EXPECT_TRUE(state.IdleHts(0, 0).empty());
  EXPECT_EQ(state.IdleCount(0, 1), 4);
  EXPECT_EQ(state.IdleCount(0), 4);
  EXPECT_EQ(state.InstancesOn(0, 0), (std::vector<InstanceId>{1, 2}));
}

TEST(AllocationState, BindReleaseInverse) {
  const AllocationState empty(Topo(1, 2, 2));
  const std::vector<HtRef> hts = {{0, 0, 0, 0}, {0, 0, 0, 1}};
  const AllocationState bound = Bind(empty, 1, hts);
  EXPECT_FALSE(bound == empty);
  EXPECT_EQ(bound.Occupant(0, 1), 1);
  EXPECT_EQ(bound.PlacementOf(1).ht_ids, (std::vector<int>{0, 1}));
  const AllocationState released = Release(bound, 1);
  EXPECT_TRUE(released == empty);
  EXPECT_EQ(released.Fingerprint(), empty.Fingerprint());
}

TEST(AllocationState, BindErrors) {
  AllocationState state(Topo(1, 2, 2));
  state.Bind(1, 0, std::vector<int>{1});
  EXPECT_THROW(state.Bind(2, 0, std::vector<int>{1}), ValidationError);
  EXPECT_THROW(state.Bind(3, 0, std::vector<int>{3, 4}), ValidationError);
  EXPECT_THROW(state.Bind(1, 0, std::vector<int>{2}), ValidationError);
  EXPECT_THROW(state.Bind(4, 0, std::vector<int>{}), ValidationError);
  EXPECT_THROW(state.Bind(5, 0, std::vector<int>{8}), ValidationError);
  EXPECT_THROW(state.Release(9), ValidationError);
  // Failed binds leave the state untouched.
  EXPECT_EQ(state.IdleHts(0, 0), (std::vector<int>{0, 2, 3}));
}

}  // namespace
}  // namespace hestia
