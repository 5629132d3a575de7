#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>

#include "hestia/errors.h"
#include "hestia/workload.h"
#include "test_util.h"

namespace hestia {
namespace {

using testing::Catalog;
using testing::Svc;

TEST(CpuUtilization, Formula) {
  EXPECT_DOUBLE_EQ(CpuUtilization(6.0, 3, 4.0), 0.5);
  EXPECT_DOUBLE_EQ(CpuUtilization(0.0, 2, 10.0), 0.0);
  EXPECT_DOUBLE_EQ(CpuUtilization(8.0, 2, 4.0), 1.0);
  EXPECT_THROW(CpuUtilization(1.0, 0, 1.0), ValidationError);
  EXPECT_THROW(CpuUtilization(1.0, 1, 0.0), ValidationError);
}

TEST(Catalog, RejectsNonContractiveService) {
  EXPECT_THROW(Catalog({Svc(0, 0.3, 0.6, 0.4)}), ValidationError);
  EXPECT_THROW(Catalog({Svc(0, 0.3, 0.2, 0.1), Svc(0, 0.3, 0.2, 0.1)}), ValidationError);
  EXPECT_THROW(Catalog({Svc(0, 0.3, 0.2, 0.1)}, {{"cpu", 0.0}}), ValidationError);
  EXPECT_NO_THROW(Catalog({Svc(0, 0.3, 0.5, 0.49)}));
}

TEST(Catalog, GeneratorContractionGuard) {
  CatalogGenConfig c;
  c.sigma_sc_hi = 0.8;
  c.sigma_ss_hi = 0.25;
  EXPECT_THROW(GenerateCatalog(c, 1), ValidationError);
}

TEST(Catalog, GeneratedDefaultsHonorHierarchy) {
  const ServiceCatalog cat = GenerateCatalog(CatalogGenConfig{}, 1000);
  ASSERT_EQ(cat.size(), 12u);
  for (const auto& s : cat.services()) {
    EXPECT_LT(s.sigma_sc + s.sigma_ss, 1.0);
    EXPECT_GT(s.sigma_sc, s.sigma_ss);
    EXPECT_GT(s.sigma_ss, 0.0);
    EXPECT_LE(s.ht_min, s.ht_max);
  }
  EXPECT_EQ(GenerateCatalog(CatalogGenConfig{}, 1000), cat);
  EXPECT_EQ(ServiceCatalog::FromJson(cat.ToJson()), cat);
}

TEST(Trace, SameSeedSameSerialization) {
  const ServiceCatalog cat = GenerateCatalog(CatalogGenConfig{}, 3);
  TraceGenConfig g;
  g.ht_budget = 300;
  EXPECT_EQ(SerializeTrace(GenerateTrace(cat, g, 7)), SerializeTrace(GenerateTrace(cat, g, 7)));
  EXPECT_NE(SerializeTrace(GenerateTrace(cat, g, 7)), SerializeTrace(GenerateTrace(cat, g, 8)));
}

TEST(Trace, ExplicitCounts) {
  const ServiceCatalog cat = Catalog({Svc(4, 0.3, 0.2, 0.1, 1.0, 2, 3)});
  TraceGenConfig g;
  g.mix = TraceGenConfig::Mix::kCounts;
  g.instance_counts = {5};
  g.rps_factor_lo = g.rps_factor_hi = 1.0;
  const Trace t = GenerateTrace(cat, g, 0);
  ASSERT_EQ(t.requests.size(), 5u);
  for (const auto& r : t.requests) {
    EXPECT_EQ(r.service_id, 4);
    EXPECT_DOUBLE_EQ(r.rps, 1.0);
    EXPECT_GE(r.requested_ht, 2);
    EXPECT_LE(r.requested_ht, 3);
  }
}

TEST(Trace, ZipfTotalMatchesConfiguredSum) {
  CatalogGenConfig cg;
  cg.n_services = 10;
  const ServiceCatalog cat = GenerateCatalog(cg, 5);
  TraceGenConfig g;
  g.mix = TraceGenConfig::Mix::kZipfTotal;
  g.total_instances = 137;
  EXPECT_EQ(GenerateTrace(cat, g, 2).requests.size(), 137u);
  const auto counts = ZipfCounts(10, 137, 1.0);
  EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), 0), 137);
  EXPECT_TRUE(std::is_sorted(counts.rbegin(), counts.rend()));
}

TEST(Trace, HtBudgetNotExceeded) {
  const ServiceCatalog cat = GenerateCatalog(CatalogGenConfig{}, 3);
  TraceGenConfig g;
  g.ht_budget = 448;
  int used = 0;
  for (const auto& r : GenerateTrace(cat, g, 1).requests) used += r.requested_ht;
  EXPECT_LE(used, 448);
  EXPECT_GT(used, 440);
}

TEST(Trace, SaveLoadRoundTrip) {
  const ServiceCatalog cat = GenerateCatalog(CatalogGenConfig{}, 3);
  TraceGenConfig g;
  g.ht_budget = 100;
  Trace t = GenerateTrace(cat, g, 11);
  t.requests[1].depart_at = 5;
  const auto path = std::filesystem::temp_directory_path() / "hestia_trace_test.jsonl";
  SaveTrace(t, path);
  EXPECT_EQ(LoadTrace(path, &cat), t);
  std::filesystem::remove(path);
}

TEST(Trace, ParseErrorsNameTheRecord) {
  const std::string header = R"({"kind":"trace","schema_version":1,"seed":0})";
  const std::string ok = R"({"instance_id":0,"service_id":0,"requested_ht":2,"rps":1.0})";
  const std::string missing = R"({"instance_id":1,"service_id":0,"rps":1.0})";
  try {
    ParseTrace(header + "\n" + ok + "\n" + missing + "\n");
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("requested_ht"), std::string::npos) << e.what();
  }
  const ServiceCatalog cat = Catalog({Svc(3, 0.3, 0.2, 0.1)});
  EXPECT_THROW(ParseTrace(header + "\n" + ok + "\n", &cat), ValidationError);
  EXPECT_THROW(ParseTrace(header + "\n" + ok + "\n" + ok + "\n"), ValidationError);
  EXPECT_THROW(ParseTrace(""), ValidationError);
}

TEST(SliceSocket, LocalIndexing) {
  AllocationState state(testing::Topo(1, 2, 2));
  state.Bind(7, 0, std::vector<int>{5, 6});
  const LoadMap loads = {{7, {0, 1.0}}};
  const SocketOccupancy s = SliceSocket(state, loads, 0, 1);
  EXPECT_EQ(s.occupant, (std::vector<InstanceId>{kIdle, 7, 7, kIdle}));
  EXPECT_EQ(s.HtsOf(7), (std::vector<int>{1, 2}));
  EXPECT_EQ(s.Instances(), std::vector<InstanceId>{7});
  EXPECT_EQ(s.cpu_model, "cpu");
}

}  // namespace
}  // namespace hestia
