#include "hestia/workload.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "hestia/errors.h"

namespace hestia {

using nlohmann::json;

double ServiceSpec::BaseAt(double rps) const {
  return std::clamp(base_util * (rps / rps_ref), 0.0, 1.0);
}

namespace {

void ValidateService(const ServiceSpec& s) {
  const std::string who = "service " + std::to_string(s.service_id);
  if (s.base_util < 0.0 || s.base_util > 1.0) throw ValidationError(who + ": base_util outside [0,1]");
  if (!(s.rps_ref > 0.0)) throw ValidationError(who + ": rps_ref must be positive");
  if (s.sigma_sc < 0.0 || s.sigma_ss < 0.0) throw ValidationError(who + ": sigma_sc/sigma_ss must be >= 0");
  if (s.sigma_sc + s.sigma_ss >= 1.0) {
    throw ValidationError(who + ": sigma_sc + sigma_ss must be < 1 (contraction)");
  }
  if (s.pressure < 0.0 || s.pressure > 1.0) throw ValidationError(who + ": pressure outside [0,1]");
  if (s.ht_min < 1 || s.ht_max < s.ht_min) throw ValidationError(who + ": invalid ht_demand_range");
}

}  // namespace

ServiceCatalog::ServiceCatalog(std::vector<ServiceSpec> services, std::map<std::string, double> cpu_speed)
    : services_(std::move(services)), cpu_speed_(std::move(cpu_speed)) {
  if (services_.empty()) throw ValidationError("catalog: no services");
  for (std::size_t i = 0; i < services_.size(); ++i) {
    ValidateService(services_[i]);
    if (!index_.emplace(services_[i].service_id, i).second) {
      throw ValidationError("catalog: duplicate service_id " + std::to_string(services_[i].service_id));
    }
  }
  for (const auto& [model, gamma] : cpu_speed_) {
    if (!(gamma > 0.0)) throw ValidationError("catalog: cpu_model " + model + " needs a positive speed factor");
  }
}

const ServiceSpec& ServiceCatalog::Get(int service_id) const {
  auto it = index_.find(service_id);
  if (it == index_.end()) throw ValidationError("unknown service_id " + std::to_string(service_id));
  return services_[it->second];
}

double ServiceCatalog::SpeedFactor(const std::string& cpu_model) const {
  auto it = cpu_speed_.find(cpu_model);
  if (it == cpu_speed_.end()) throw ValidationError("unknown cpu_model " + cpu_model);
  return it->second;
}

json ServiceCatalog::ToJson() const {
  json services = json::array();
  for (const auto& s : services_) {
    services.push_back({{"service_id", s.service_id},
                        {"name", s.name},
                        {"base_util", s.base_util},
                        {"rps_ref", s.rps_ref},
                        {"sigma_sc", s.sigma_sc},
                        {"sigma_ss", s.sigma_ss},
                        {"pressure", s.pressure},
                        {"ht_demand_range", {s.ht_min, s.ht_max}}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "catalog"},
          {"services", services},
          {"cpu_models", cpu_speed_}};
}

ServiceCatalog ServiceCatalog::FromJson(const json& doc) {
  if (!doc.is_object() || !doc.contains("services")) throw ValidationError("catalog: missing 'services'");
  if (doc.value("schema_version", 0) != kSchemaVersion) throw ValidationError("catalog: unsupported schema_version");
  std::vector<ServiceSpec> services;
  const auto& arr = doc["services"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    try {
      const auto& r = arr[i];
      ServiceSpec s;
      s.service_id = r.at("service_id").get<int>();
      s.name = r.value("name", "svc" + std::to_string(s.service_id));
      s.base_util = r.at("base_util").get<double>();
      s.rps_ref = r.at("rps_ref").get<double>();
      s.sigma_sc = r.at("sigma_sc").get<double>();
      s.sigma_ss = r.at("sigma_ss").get<double>();
      s.pressure = r.value("pressure", 1.0);
      const auto& range = r.at("ht_demand_range");
      s.ht_min = range.at(0).get<int>();
      s.ht_max = range.at(1).get<int>();
      services.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ValidationError("catalog: service record " + std::to_string(i) + ": " + e.what());
    }
  }
  std::map<std::string, double> speed;
  if (doc.contains("cpu_models")) speed = doc["cpu_models"].get<std::map<std::string, double>>();
  return ServiceCatalog(std::move(services), std::move(speed));
}

ServiceCatalog LoadCatalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open catalog file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("catalog file " + path.string() + ": " + e.what());
  }
  return ServiceCatalog::FromJson(doc);
}

void SaveCatalog(const ServiceCatalog& catalog, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << catalog.ToJson().dump(2) << "\n";
}

json CatalogGenConfig::ToJson() const {
  return {{"n_services", n_services},
          {"base", {base_lo, base_hi}},
          {"sigma_sc", {sigma_sc_lo, sigma_sc_hi}},
          {"sigma_ss", {sigma_ss_lo, sigma_ss_hi}},
          {"pressure", {pressure_lo, pressure_hi}},
          {"rps_ref", rps_ref},
          {"ht_min", {ht_min_lo, ht_min_hi}},
          {"ht_span", {ht_span_lo, ht_span_hi}},
          {"cpu_models", cpu_speed}};
}

CatalogGenConfig CatalogGenConfig::FromJson(const json& doc) {
  CatalogGenConfig c;
  auto range = [&doc](const char* key, double& lo, double& hi) {
    if (doc.contains(key)) {
      lo = doc[key].at(0).get<double>();
      hi = doc[key].at(1).get<double>();
    }
  };
  auto irange = [&doc](const char* key, int& lo, int& hi) {
    if (doc.contains(key)) {
      lo = doc[key].at(0).get<int>();
      hi = doc[key].at(1).get<int>();
    }
  };
  c.n_services = doc.value("n_services", c.n_services);
  range("base", c.base_lo, c.base_hi);
  range("sigma_sc", c.sigma_sc_lo, c.sigma_sc_hi);
  range("sigma_ss", c.sigma_ss_lo, c.sigma_ss_hi);
  range("pressure", c.pressure_lo, c.pressure_hi);
  c.rps_ref = doc.value("rps_ref", c.rps_ref);
  irange("ht_min", c.ht_min_lo, c.ht_min_hi);
  irange("ht_span", c.ht_span_lo, c.ht_span_hi);
  if (doc.contains("cpu_models")) c.cpu_speed = doc["cpu_models"].get<std::map<std::string, double>>();
  return c;
}

ServiceCatalog GenerateCatalog(const CatalogGenConfig& c, std::uint64_t seed) {
  if (c.n_services < 1) throw ValidationError("catalog generator: n_services must be >= 1");
  if (c.base_lo > c.base_hi || c.sigma_sc_lo > c.sigma_sc_hi || c.sigma_ss_lo > c.sigma_ss_hi ||
      c.pressure_lo > c.pressure_hi || c.ht_min_lo > c.ht_min_hi || c.ht_span_lo > c.ht_span_hi) {
    throw ValidationError("catalog generator: empty parameter range");
  }
  if (c.sigma_sc_hi + c.sigma_ss_hi >= 1.0) {
    throw ValidationError("catalog generator: sigma_sc_hi + sigma_ss_hi must be < 1 (contraction)");
  }
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto uniform_int = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::vector<ServiceSpec> services;
  for (int i = 0; i < c.n_services; ++i) {
    ServiceSpec s;
    s.service_id = i;
    s.name = "svc" + std::to_string(i);
    s.base_util = uniform(c.base_lo, c.base_hi);
    s.rps_ref = c.rps_ref;
    s.sigma_sc = uniform(c.sigma_sc_lo, c.sigma_sc_hi);
    // Keep the core sibling the stronger coupling whenever the ranges allow it.
    const double ss_hi = std::max(c.sigma_ss_lo, std::min(c.sigma_ss_hi, s.sigma_sc));
    s.sigma_ss = uniform(c.sigma_ss_lo, ss_hi);
    s.pressure = uniform(c.pressure_lo, c.pressure_hi);
    s.ht_min = uniform_int(c.ht_min_lo, c.ht_min_hi);
    s.ht_max = s.ht_min + uniform_int(c.ht_span_lo, c.ht_span_hi);
    services.push_back(s);
  }
  return ServiceCatalog(std::move(services), c.cpu_speed);
}

json TraceGenConfig::ToJson() const {
  json j = {{"zipf_exponent", zipf_exponent}, {"rps_factor", {rps_factor_lo, rps_factor_hi}}};
  switch (mix) {
    case Mix::kCounts:
      j["mix"] = "counts";
      j["instance_counts"] = instance_counts;
      break;
    case Mix::kZipfTotal:
      j["mix"] = "zipf_total";
      j["total_instances"] = total_instances;
      break;
    case Mix::kHtBudget:
      j["mix"] = "ht_budget";
      j["ht_budget"] = ht_budget;
      break;
  }
  return j;
}

TraceGenConfig TraceGenConfig::FromJson(const json& doc) {
  TraceGenConfig c;
  const std::string mix = doc.value("mix", "ht_budget");
  if (mix == "counts") {
    c.mix = Mix::kCounts;
    c.instance_counts = doc.at("instance_counts").get<std::vector<int>>();
  } else if (mix == "zipf_total") {
    c.mix = Mix::kZipfTotal;
    c.total_instances = doc.at("total_instances").get<int>();
  } else if (mix == "ht_budget") {
    c.mix = Mix::kHtBudget;
    c.ht_budget = doc.at("ht_budget").get<int>();
  } else {
    throw ValidationError("trace generator: unknown mix '" + mix + "'");
  }
  c.zipf_exponent = doc.value("zipf_exponent", c.zipf_exponent);
  if (doc.contains("rps_factor")) {
    c.rps_factor_lo = doc["rps_factor"].at(0).get<double>();
    c.rps_factor_hi = doc["rps_factor"].at(1).get<double>();
  }
  return c;
}

std::vector<int> ZipfCounts(int n, int total, double exponent) {
  if (n < 1 || total < 0) throw ValidationError("zipf counts: need n >= 1 and total >= 0");
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 1.0 / std::pow(i + 1.0, exponent);
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<int> counts(n);
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (int i = 0; i < n; ++i) {
    const double exact = total * w[i] / sum;
    counts[i] = static_cast<int>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - counts[i], i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; assigned < total; ++k, ++assigned) counts[remainders[k].second] += 1;
  return counts;
}

Trace GenerateTrace(const ServiceCatalog& catalog, const TraceGenConfig& config, std::uint64_t seed) {
  if (catalog.size() == 0) throw ValidationError("trace generator: empty service mix");
  if (config.rps_factor_lo < 0.0 || config.rps_factor_hi < config.rps_factor_lo) {
    throw ValidationError("trace generator: invalid rps_factor range");
  }
  std::mt19937_64 rng(seed);
  const auto& services = catalog.services();
  const int n = static_cast<int>(services.size());

  auto draw_rps = [&](const ServiceSpec& s) {
    const double f = config.rps_factor_lo == config.rps_factor_hi
                         ? config.rps_factor_lo
                         : std::uniform_real_distribution<double>(config.rps_factor_lo, config.rps_factor_hi)(rng);
    return s.rps_ref * f;
  };
  auto draw_ht = [&](const ServiceSpec& s) {
    return std::uniform_int_distribution<int>(s.ht_min, s.ht_max)(rng);
  };

  Trace trace;
  trace.seed = seed;
  trace.generator = config.ToJson();

  if (config.mix == TraceGenConfig::Mix::kHtBudget) {
    if (config.ht_budget < 1) throw ValidationError("trace generator: ht_budget must be >= 1");
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = 1.0 / std::pow(i + 1.0, config.zipf_exponent);
    std::discrete_distribution<int> pick(w.begin(), w.end());
    int used = 0;
    while (true) {
      const ServiceSpec& s = services[pick(rng)];
      const int ht = draw_ht(s);
      if (used + ht > config.ht_budget) break;
      used += ht;
      InstanceRequest r;
      r.instance_id = static_cast<InstanceId>(trace.requests.size());
      r.service_id = s.service_id;
      r.requested_ht = ht;
      r.rps = draw_rps(s);
      trace.requests.push_back(r);
    }
    return trace;
  }

  std::vector<int> counts;
  if (config.mix == TraceGenConfig::Mix::kCounts) {
    counts = config.instance_counts;
    if (static_cast<int>(counts.size()) != n) {
      throw ValidationError("trace generator: instance_counts needs one entry per service");
    }
    for (int c : counts) {
      if (c < 1) throw ValidationError("trace generator: instance counts must be >= 1");
    }
  } else {
    if (config.total_instances < 1) throw ValidationError("trace generator: total_instances must be >= 1");
    counts = ZipfCounts(n, config.total_instances, config.zipf_exponent);
  }
  std::vector<int> order;
  for (int i = 0; i < n; ++i) order.insert(order.end(), counts[i], i);
  std::shuffle(order.begin(), order.end(), rng);
  for (int idx : order) {
    const ServiceSpec& s = services[idx];
    InstanceRequest r;
    r.instance_id = static_cast<InstanceId>(trace.requests.size());
    r.service_id = s.service_id;
    r.requested_ht = draw_ht(s);
    r.rps = draw_rps(s);
    trace.requests.push_back(r);
  }
  return trace;
}

std::string SerializeTrace(const Trace& trace) {
  std::ostringstream out;
  json header = {{"schema_version", kSchemaVersion},
                 {"kind", "trace"},
                 {"seed", trace.seed},
                 {"generator", trace.generator},
                 {"count", trace.requests.size()}};
  out << header.dump() << "\n";
  for (const auto& r : trace.requests) {
    json rec = {{"instance_id", r.instance_id},
                {"service_id", r.service_id},
                {"requested_ht", r.requested_ht},
                {"rps", r.rps}};
    if (r.depart_at) rec["depart_at"] = *r.depart_at;
    out << rec.dump() << "\n";
  }
  return out.str();
}

Trace ParseTrace(const std::string& text, const ServiceCatalog* catalog) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("trace: empty file");
  Trace trace;
  try {
    const json header = json::parse(line);
    if (header.value("kind", "") != "trace") throw ValidationError("trace: header kind is not 'trace'");
    if (header.value("schema_version", 0) != kSchemaVersion) {
      throw ValidationError("trace: unsupported schema_version");
    }
    trace.seed = header.value("seed", std::uint64_t{0});
    trace.generator = header.value("generator", json::object());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("trace: bad header: ") + e.what());
  }
  std::set<InstanceId> ids;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::string where = "trace record " + std::to_string(index);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    for (const char* key : {"instance_id", "service_id", "requested_ht", "rps"}) {
      if (!rec.contains(key)) throw ValidationError(where + ": missing " + key);
    }
    InstanceRequest r;
    try {
      r.instance_id = rec["instance_id"].get<InstanceId>();
      r.service_id = rec["service_id"].get<int>();
      r.requested_ht = rec["requested_ht"].get<int>();
      r.rps = rec["rps"].get<double>();
      if (rec.contains("depart_at")) r.depart_at = rec["depart_at"].get<std::int64_t>();
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (r.requested_ht < 1) throw ValidationError(where + ": requested_ht must be >= 1");
    if (r.rps < 0.0) throw ValidationError(where + ": rps must be >= 0");
    if (r.instance_id < 0) throw ValidationError(where + ": instance_id must be >= 0");
    if (!ids.insert(r.instance_id).second) throw ValidationError(where + ": duplicate instance_id");
    if (catalog && !catalog->Has(r.service_id)) {
      throw ValidationError(where + ": undeclared service_id " + std::to_string(r.service_id));
    }
    trace.requests.push_back(r);
    ++index;
  }
  return trace;
}

void SaveTrace(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << SerializeTrace(trace);
}

Trace LoadTrace(const std::filesystem::path& path, const ServiceCatalog* catalog) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open trace file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseTrace(buf.str(), catalog);
}

LoadMap LoadsOf(const Trace& trace) {
  LoadMap loads;
  for (const auto& r : trace.requests) loads[r.instance_id] = {r.service_id, r.rps};
  return loads;
}

std::vector<InstanceId> SocketOccupancy::Instances() const {
  std::set<InstanceId> ids;
  for (InstanceId o : occupant) {
    if (o != kIdle) ids.insert(o);
  }
  return {ids.begin(), ids.end()};
}

std::vector<int> SocketOccupancy::HtsOf(InstanceId id) const {
  std::vector<int> out;
  for (int j = 0; j < size(); ++j) {
    if (occupant[j] == id) out.push_back(j);
  }
  return out;
}

SocketOccupancy SliceSocket(const AllocationState& state, const LoadMap& loads, int server_id,
                            int socket_idx) {
  const auto& server = state.topology().server(server_id);
  if (socket_idx < 0 || socket_idx >= server.sockets) {
    throw ValidationError("socket " + std::to_string(socket_idx) + " out of range");
  }
  SocketOccupancy slice;
  slice.cpu_model = server.cpu_model;
  slice.hts_per_core = server.hts_per_core;
  const int first = socket_idx * server.hts_per_socket();
  for (int h = first; h < first + server.hts_per_socket(); ++h) {
    const InstanceId o = state.Occupant(server_id, h);
    slice.occupant.push_back(o);
    if (o != kIdle && !slice.loads.contains(o)) {
      auto it = loads.find(o);
      if (it == loads.end()) throw ValidationError("no load recorded for instance " + std::to_string(o));
      slice.loads.emplace(o, it->second);
    }
  }
  return slice;
}

double CpuUtilization(double cpu_time, int requested_ht, double elapsed) {
  if (requested_ht < 1) throw ValidationError("cpu_utilization: requested_ht must be >= 1");
  if (!(elapsed > 0.0)) throw ValidationError("cpu_utilization: elapsed must be positive");
  if (cpu_time < 0.0) throw ValidationError("cpu_utilization: cpu_time must be >= 0");
  const double u = cpu_time / (requested_ht * elapsed);
  if (u > 1.0 + 1e-9) throw ValidationError("cpu_utilization: exceeds 1, accounting is inconsistent");
  return std::min(u, 1.0);
}

}  // namespace hestia
