#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hestia/errors.h"
#include "hestia/oracle.h"
#include "test_util.h"

namespace hestia {
namespace {

using testing::Catalog;
using testing::Socket;
using testing::Svc;

// Unclamped fixed point by Gaussian elimination on (I - A) u = b, built
// directly from the coupling definition.
std::vector<double> LinearSolve(const SocketOccupancy& s, const ServiceCatalog& cat) {
  const int n = s.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n + 1, 0.0));
  for (int j = 0; j < n; ++j) {
    m[j][j] = 1.0;
    if (s.occupant[j] == kIdle) continue;
    const auto& load = s.loads.at(s.occupant[j]);
    const ServiceSpec& spec = cat.Get(load.service_id);
    m[j][n] = cat.SpeedFactor(s.cpu_model) * spec.BaseAt(load.rps);
    int n_sc = 0, n_ss = 0;
    for (int h = 0; h < n; ++h) {
      if (s.occupant[h] == kIdle || s.occupant[h] == s.occupant[j]) continue;
      (h / s.hts_per_core == j / s.hts_per_core ? n_sc : n_ss)++;
    }
    for (int h = 0; h < n; ++h) {
      if (s.occupant[h] == kIdle || s.occupant[h] == s.occupant[j]) continue;
      const double p = cat.Get(s.loads.at(s.occupant[h]).service_id).pressure;
      const bool same_core = h / s.hts_per_core == j / s.hts_per_core;
      m[j][h] -= same_core ? spec.sigma_sc * p / n_sc : spec.sigma_ss * p / n_ss;
    }
  }
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    }
    std::swap(m[c], m[piv]);
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (int k = c; k <= n; ++k) m[r][k] -= f * m[c][k];
    }
  }
  std::vector<double> u(n);
  for (int j = 0; j < n; ++j) u[j] = m[j][n] / m[j][j];
  return u;
}

ContentionModel Model(ServiceCatalog cat, double noise = 0.0) { return {std::move(cat), noise, 0}; }

TEST(Oracle, SiblingClosedForm) {
  const auto model = Model(Catalog({Svc(0, 0.3, 0.5, 0.0)}));
  const auto u = SolveSocket(Socket({1, 2}, {{1, {0, 1.0}}, {2, {0, 1.0}}}), model);
  EXPECT_NEAR(u[0], 0.6, 1e-10);
  EXPECT_NEAR(u[1], 0.6, 1e-10);
}

TEST(Oracle, IsolatedInstanceSeesNoCoupling) {
  const auto model = Model(Catalog({Svc(0, 0.4, 0.45, 0.3)}));
  const auto u = SolveSocket(Socket({1, 1, 1, kIdle}, {{1, {0, 1.0}}}), model);
  EXPECT_DOUBLE_EQ(u[0], 0.4);
  EXPECT_DOUBLE_EQ(u[1], 0.4);
  EXPECT_DOUBLE_EQ(u[2], 0.4);
  EXPECT_DOUBLE_EQ(u[3], 0.0);
}

TEST(Oracle, IsolatedSpeedFactor) {
  const auto model = Model(Catalog({Svc(0, 0.4, 0.2, 0.1)}, {{"fast", 1.0}, {"slow", 1.25}}));
  EXPECT_DOUBLE_EQ(GroundTruthIsolated({0, 1.0}, "fast", model), 0.4);
  EXPECT_DOUBLE_EQ(GroundTruthIsolated({0, 1.0}, "slow", model), 0.5);
  EXPECT_THROW(GroundTruthIsolated({0, 1.0}, "other", model), ValidationError);
}

TEST(Oracle, IsolatedMatchesGroundTruthOnSoleInstance) {
  const auto cat = GenerateCatalog(CatalogGenConfig{}, 1000);
  const auto model = Model(cat);
  auto topo = testing::Topo(1, 2, 8, 2, "xeon-8163");
  for (const auto& s : cat.services()) {
    AllocationState state(topo);
    state.Bind(0, 0, std::vector<int>{3, 4, 5});
    const LoadMap loads = {{0, {s.service_id, 900.0}}};
    const auto field = GroundTruth(state, loads, model);
    EXPECT_NEAR(field.InstanceMean(state.PlacementOf(0)), GroundTruthIsolated(loads.at(0), "xeon-8163", model),
                1e-12);
  }
}

TEST(Oracle, MonotoneInSigmaSs) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<ServiceSpec> lo, hi;
    for (int s = 0; s < 3; ++s) {
      const double sc = 0.1 + 0.3 * U(rng), ss = 0.05 + 0.2 * U(rng);
      lo.push_back(Svc(s, 0.1 + 0.5 * U(rng), sc, ss, 0.3 + 0.7 * U(rng)));
      hi.push_back(lo.back());
      hi.back().sigma_ss = 2 * ss;
    }
    std::vector<InstanceId> occ(8, kIdle);
    LoadMap loads;
    for (int h = 0; h < 8; ++h) {
      const int id = static_cast<int>(U(rng) * 5) - 1;
      if (id < 0) continue;
      occ[h] = id;
      loads[id] = {id % 3, 0.6 + 0.8 * U(rng)};
    }
    const auto a = SolveSocket(Socket(occ, loads), Model(Catalog(lo)));
    const auto b = SolveSocket(Socket(occ, loads), Model(Catalog(hi)));
    for (int h = 0; h < 8; ++h) EXPECT_GE(b[h], a[h] - 1e-12);
  }
}

TEST(Oracle, MatchesLinearSolveAwayFromClamp) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ServiceSpec> specs;
    for (int s = 0; s < 4; ++s) {
      const double sc = 0.5 * U(rng);
      specs.push_back(Svc(s, 0.05 + 0.35 * U(rng), sc, (0.99 - sc) * U(rng) * 0.5, U(rng)));
    }
    const auto cat = Catalog(specs);
    std::vector<InstanceId> occ(12, kIdle);
    LoadMap loads;
    for (int h = 0; h < 12; ++h) {
      const int id = static_cast<int>(U(rng) * 7) - 1;
      if (id < 0) continue;
      occ[h] = id;
      loads[id] = {id % 4, 0.5 + U(rng)};
    }
    const auto sock = Socket(occ, loads);
    const auto want = LinearSolve(sock, cat);
    if (*std::max_element(want.begin(), want.end()) >= 1.0) continue;
    ++compared;
    const auto got = SolveSocket(sock, Model(cat));
    for (int h = 0; h < 12; ++h) EXPECT_NEAR(got[h], want[h], 1e-10);
  }
  EXPECT_GT(compared, 200);
}

TEST(Oracle, DeterministicNoise) {
  const auto cat = Catalog({Svc(0, 0.3, 0.3, 0.1)});
  const auto a = SocketNoise(Model(cat, 0.01), 3, 1, 16);
  EXPECT_EQ(a, SocketNoise(Model(cat, 0.01), 3, 1, 16));
  EXPECT_NE(a, SocketNoise(Model(cat, 0.01), 3, 0, 16));
  EXPECT_EQ(SocketNoise(Model(cat, 0.0), 3, 1, 4), std::vector<double>(4, 0.0));
  EXPECT_THROW(SolveSocket(Socket({1, 1}, {{1, {0, 1.0}}}), Model(cat), std::vector<double>{0.0}), ValidationError);
}

TEST(Oracle, ClampsToUnitInterval) {
  const auto model = Model(Catalog({Svc(0, 0.9, 0.49, 0.49)}));
  const auto u = SolveSocket(Socket({1, 2, 3, 4}, {{1, {0, 1.2}}, {2, {0, 1.0}}, {3, {0, 1.0}}, {4, {0, 1.0}}}), model);
  for (double v : u) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_DOUBLE_EQ(u[0], 1.0);
}

TEST(Oracle, MissingLoadRejected) {
  const auto model = Model(Catalog({Svc(0, 0.3, 0.3, 0.1)}));
  EXPECT_THROW(SolveSocket(Socket({1, 2}, {{1, {0, 1.0}}}), model), ValidationError);
  EXPECT_THROW(SolveSocket(Socket({1, 2, 3}, {{1, {0, 1.0}}, {2, {0, 1.0}}, {3, {0, 1.0}}}), model),
               ValidationError);
}

}  // namespace
}  // namespace hestia
