#include "hestia/predictor.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include "hestia/errors.h"

namespace hestia {

using nlohmann::json;
using nn::Matrix;

// --- PredictorConfig -----------------------------------------------------------

int PredictorConfig::ServiceIndex(int service_id) const {
  auto it = std::find(service_vocab.begin(), service_vocab.end(), service_id);
  if (it == service_vocab.end()) throw ValidationError("predictor: unknown service_id " + std::to_string(service_id));
  return static_cast<int>(it - service_vocab.begin()) + 1;
}

int PredictorConfig::CpuIndex(const std::string& cpu_model) const {
  auto it = std::find(cpu_vocab.begin(), cpu_vocab.end(), cpu_model);
  if (it == cpu_vocab.end()) throw ValidationError("predictor: unknown cpu_model " + cpu_model);
  return static_cast<int>(it - cpu_vocab.begin());
}

void PredictorConfig::Validate() const {
  if (embed_dim < 2) throw ValidationError("predictor: embed_dim must be >= 2");
  if (key_dim < 1 || ffn_hidden < 1 || mlp_hidden < 1) throw ValidationError("predictor: dimensions must be >= 1");
  if (cpu_vocab.empty()) throw ValidationError("predictor: empty cpu_model vocabulary");
  if (service_vocab.empty()) throw ValidationError("predictor: empty service vocabulary");
  if (hts_per_core < 1 || socket_hts < hts_per_core || socket_hts % hts_per_core != 0) {
    throw ValidationError("predictor: socket_hts must be a positive multiple of hts_per_core");
  }
  for (int id : service_vocab) {
    auto it = rps_ref.find(id);
    if (it == rps_ref.end() || !(it->second > 0.0)) {
      throw ValidationError("predictor: missing rps_ref for service " + std::to_string(id));
    }
  }
}

json PredictorConfig::ToJson() const {
  json refs = json::array();
  for (const auto& [id, ref] : rps_ref) refs.push_back({id, ref});
  return {{"n_services", n_services()}, {"service_vocab", service_vocab}, {"rps_ref", refs},
          {"cpu_vocab", cpu_vocab},     {"embed_dim", embed_dim},         {"key_dim", key_dim},
          {"ffn_hidden", ffn_hidden},   {"mlp_hidden", mlp_hidden},       {"skip_connections", skip_connections},
          {"socket_hts", socket_hts},   {"hts_per_core", hts_per_core}};
}

PredictorConfig PredictorConfig::FromJson(const json& doc) {
  PredictorConfig c;
  try {
    c.service_vocab = doc.at("service_vocab").get<std::vector<int>>();
    for (const auto& pair : doc.at("rps_ref")) c.rps_ref[pair.at(0).get<int>()] = pair.at(1).get<double>();
    c.cpu_vocab = doc.at("cpu_vocab").get<std::vector<std::string>>();
    c.embed_dim = doc.value("embed_dim", c.embed_dim);
    c.key_dim = doc.value("key_dim", c.key_dim);
    c.ffn_hidden = doc.value("ffn_hidden", c.ffn_hidden);
    c.mlp_hidden = doc.value("mlp_hidden", c.mlp_hidden);
    c.skip_connections = doc.value("skip_connections", c.skip_connections);
    c.socket_hts = doc.value("socket_hts", c.socket_hts);
    c.hts_per_core = doc.value("hts_per_core", c.hts_per_core);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("predictor config: ") + e.what());
  }
  c.Validate();
  return c;
}

PredictorConfig PredictorConfig::ForCatalog(const ServiceCatalog& catalog, int socket_hts, int hts_per_core) {
  PredictorConfig c;
  for (const auto& s : catalog.services()) {
    c.service_vocab.push_back(s.service_id);
    c.rps_ref[s.service_id] = s.rps_ref;
  }
  for (const auto& [model, gamma] : catalog.cpu_speed()) c.cpu_vocab.push_back(model);
  c.socket_hts = socket_hts;
  c.hts_per_core = hts_per_core;
  c.Validate();
  return c;
}

// --- Encoding ------------------------------------------------------------------------

std::vector<int> SocketInput::HtsOf(InstanceId id) const {
  std::vector<int> out;
  for (int j = 0; j < size(); ++j) {
    if (occupant[j] == id) out.push_back(j);
  }
  return out;
}

SocketInput EncodeSocket(const SocketOccupancy& socket, const PredictorConfig& config) {
  SocketInput in;
  in.cpu_index = config.CpuIndex(socket.cpu_model);
  in.hts_per_core = socket.hts_per_core;
  in.occupant = socket.occupant;
  in.instances = socket.Instances();
  for (InstanceId o : socket.occupant) {
    if (o == kIdle) {
      in.service_index.push_back(0);
      in.rps_norm.push_back(0.0);
      continue;
    }
    auto it = socket.loads.find(o);
    if (it == socket.loads.end()) throw ValidationError("encode: missing load for instance " + std::to_string(o));
    in.service_index.push_back(config.ServiceIndex(it->second.service_id));
    in.rps_norm.push_back(it->second.rps / config.rps_ref.at(it->second.service_id));
  }
  return in;
}

PredictionOutput MakePrediction(const SocketInput& input, const Matrix& raw) {
  PredictionOutput out;
  out.per_ht.resize(input.size());
  for (int j = 0; j < input.size(); ++j) out.per_ht[j] = std::clamp(raw(j, 0), 0.0, 1.0);
  for (InstanceId id : input.instances) {
    double sum = 0.0;
    int m = 0;
    for (int j = 0; j < input.size(); ++j) {
      if (input.occupant[j] == id) {
        sum += out.per_ht[j];
        ++m;
      }
    }
    out.per_instance[id] = sum / m;
  }
  return out;
}

namespace {

// Columns after the embedding: normalized rps, then the cpu_model one-hot.
Matrix ContextColumns(const SocketInput& input, int cpu_vocab) {
  Matrix extra(input.size(), 1 + cpu_vocab);
  for (int j = 0; j < input.size(); ++j) {
    extra(j, 0) = input.rps_norm[j];
    extra(j, 1 + input.cpu_index) = 1.0;
  }
  return extra;
}

void CheckCommon(const SocketInput& input, const PredictorConfig& config) {
  const int n = input.size();
  if (n == 0) throw ValidationError("predictor: empty socket input");
  if (static_cast<int>(input.rps_norm.size()) != n || static_cast<int>(input.occupant.size()) != n) {
    throw ValidationError("predictor: inconsistent socket input");
  }
  if (input.cpu_index < 0 || input.cpu_index >= static_cast<int>(config.cpu_vocab.size())) {
    throw ValidationError("predictor: cpu index out of range");
  }
  for (int s : input.service_index) {
    if (s < 0 || s >= config.n_services()) throw ValidationError("predictor: service index out of range");
  }
}

}  // namespace

// --- AttentionPredictor ----------------------------------------------------------------

AttentionPredictor::AttentionPredictor(PredictorConfig config, std::uint64_t init_seed)
    : config_(std::move(config)) {
  config_.Validate();
  const int d_tok = config_.token_dim();
  const int d_k = config_.key_dim;
  embed_ = nn::Embedding("embed", config_.n_services(), config_.embed_dim);
  sc_attn_ = nn::AttentionLayer("sc_attn", d_tok, d_k);
  ffn_ = nn::FeedForward("ffn", config_.skip_connections ? d_k + d_tok : d_k, config_.ffn_hidden, d_k);
  ss_attn_ = nn::AttentionLayer("ss_attn", d_k, d_k);
  head_ = nn::FeedForward("head", config_.skip_connections ? 2 * d_k : d_k, config_.mlp_hidden, 1);
  std::mt19937_64 rng(init_seed);
  embed_.Init(rng);
  sc_attn_.Init(rng);
  ffn_.Init(rng);
  ss_attn_.Init(rng);
  head_.Init(rng);
}

void AttentionPredictor::CheckInput(const SocketInput& input) const {
  CheckCommon(input, config_);
  if (input.hts_per_core < 1 || input.size() % input.hts_per_core != 0) {
    throw ValidationError("predictor: socket size is not a multiple of hts_per_core");
  }
}

Matrix AttentionPredictor::Tokens(const SocketInput& input) const {
  CheckInput(input);
  return nn::ConcatCols(embed_.Forward(input.service_index),
                        ContextColumns(input, static_cast<int>(config_.cpu_vocab.size())));
}

Matrix AttentionPredictor::ForwardRaw(const SocketInput& input) const {
  Tape tape;
  return ForwardRaw(input, tape);
}

Matrix AttentionPredictor::ForwardRaw(const SocketInput& input, Tape& tape) const {
  CheckInput(input);
  const Matrix tokens = nn::ConcatCols(embed_.Forward(input.service_index, tape.embed),
                                       ContextColumns(input, static_cast<int>(config_.cpu_vocab.size())));
  const auto core_mask = nn::AttentionMask::BlockDiagonal(input.size(), input.hts_per_core);
  const Matrix sc_e = sc_attn_.Forward(tokens, &core_mask, tape.sc);
  const Matrix sc_h = ffn_.Forward(config_.skip_connections ? nn::ConcatCols(sc_e, tokens) : sc_e, tape.ffn);
  const Matrix ss_h = ss_attn_.Forward(sc_h, nullptr, tape.ss);
  return head_.Forward(config_.skip_connections ? nn::ConcatCols(ss_h, sc_h) : ss_h, tape.head);
}

void AttentionPredictor::Backward(const Matrix& d_out, const Tape& tape) {
  const int d_k = config_.key_dim;
  Matrix d_head_in = head_.Backward(d_out, tape.head);
  Matrix d_ss = std::move(d_head_in);
  Matrix d_sc_h_skip;
  if (config_.skip_connections) std::tie(d_ss, d_sc_h_skip) = nn::SplitCols(d_ss, d_k);
  Matrix d_sc_h = ss_attn_.Backward(d_ss, tape.ss);
  if (config_.skip_connections) nn::AddInPlace(d_sc_h, d_sc_h_skip);
  Matrix d_ffn_in = ffn_.Backward(d_sc_h, tape.ffn);
  Matrix d_sc_e = std::move(d_ffn_in);
  Matrix d_tokens_skip;
  if (config_.skip_connections) std::tie(d_sc_e, d_tokens_skip) = nn::SplitCols(d_sc_e, d_k);
  Matrix d_tokens = sc_attn_.Backward(d_sc_e, tape.sc);
  if (config_.skip_connections) nn::AddInPlace(d_tokens, d_tokens_skip);
  embed_.Backward(nn::SplitCols(d_tokens, config_.embed_dim).first, tape.embed);
}

PredictionOutput AttentionPredictor::Forward(const SocketInput& input) const {
  return MakePrediction(input, ForwardRaw(input));
}

std::map<InstanceId, double> AttentionPredictor::PredictInstances(const SocketInput& input) const {
  return Forward(input).per_instance;
}

Matrix AttentionPredictor::CoreStage(const SocketInput& input) const {
  const Matrix tokens = Tokens(input);
  const auto core_mask = nn::AttentionMask::BlockDiagonal(input.size(), input.hts_per_core);
  return sc_attn_.Forward(tokens, &core_mask);
}

std::vector<nn::Parameter*> AttentionPredictor::Parameters() {
  std::vector<nn::Parameter*> out;
  embed_.CollectParameters(out);
  sc_attn_.CollectParameters(out);
  ffn_.CollectParameters(out);
  ss_attn_.CollectParameters(out);
  head_.CollectParameters(out);
  return out;
}

std::vector<const nn::Parameter*> AttentionPredictor::Parameters() const {
  std::vector<const nn::Parameter*> out;
  embed_.CollectParameters(out);
  sc_attn_.CollectParameters(out);
  ffn_.CollectParameters(out);
  ss_attn_.CollectParameters(out);
  head_.CollectParameters(out);
  return out;
}

// --- MlpPredictor -------------------------------------------------------------------------

MlpPredictor::MlpPredictor(PredictorConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  config_.Validate();
  const int flat = config_.socket_hts * (config_.embed_dim + 1) + static_cast<int>(config_.cpu_vocab.size());
  embed_ = nn::Embedding("mlp_embed", config_.n_services(), config_.embed_dim);
  net_ = nn::FeedForward("mlp", flat, config_.mlp_hidden, config_.socket_hts);
  std::mt19937_64 rng(init_seed);
  embed_.Init(rng);
  net_.Init(rng);
}

Matrix MlpPredictor::Flatten(const SocketInput& input, const Matrix& embedded) const {
  const int e = config_.embed_dim;
  const int n = input.size();
  Matrix flat(1, n * (e + 1) + static_cast<int>(config_.cpu_vocab.size()));
  for (int j = 0; j < n; ++j) {
    for (int c = 0; c < e; ++c) flat(0, j * (e + 1) + c) = embedded(j, c);
    flat(0, j * (e + 1) + e) = input.rps_norm[j];
  }
  flat(0, n * (e + 1) + input.cpu_index) = 1.0;
  return flat;
}

Matrix MlpPredictor::ForwardRaw(const SocketInput& input) const {
  Tape tape;
  return ForwardRaw(input, tape);
}

Matrix MlpPredictor::ForwardRaw(const SocketInput& input, Tape& tape) const {
  CheckCommon(input, config_);
  if (input.size() != config_.socket_hts) {
    throw ValidationError("mlp predictor: socket has " + std::to_string(input.size()) + " HTs, expected " +
                          std::to_string(config_.socket_hts));
  }
  const Matrix row = net_.Forward(Flatten(input, embed_.Forward(input.service_index, tape.embed)), tape.net);
  Matrix out(input.size(), 1);
  for (int j = 0; j < input.size(); ++j) out(j, 0) = row(0, j);
  return out;
}

void MlpPredictor::Backward(const Matrix& d_out, const Tape& tape) {
  const int n = d_out.rows();
  const int e = config_.embed_dim;
  Matrix d_row(1, n);
  for (int j = 0; j < n; ++j) d_row(0, j) = d_out(j, 0);
  const Matrix d_flat = net_.Backward(d_row, tape.net);
  Matrix d_embed(n, e);
  for (int j = 0; j < n; ++j) {
    for (int c = 0; c < e; ++c) d_embed(j, c) = d_flat(0, j * (e + 1) + c);
  }
  embed_.Backward(d_embed, tape.embed);
}

PredictionOutput MlpPredictor::Forward(const SocketInput& input) const {
  return MakePrediction(input, ForwardRaw(input));
}

std::map<InstanceId, double> MlpPredictor::PredictInstances(const SocketInput& input) const {
  return Forward(input).per_instance;
}

std::vector<nn::Parameter*> MlpPredictor::Parameters() {
  std::vector<nn::Parameter*> out;
  embed_.CollectParameters(out);
  net_.CollectParameters(out);
  return out;
}

std::vector<const nn::Parameter*> MlpPredictor::Parameters() const {
  std::vector<const nn::Parameter*> out;
  embed_.CollectParameters(out);
  net_.CollectParameters(out);
  return out;
}

// --- AvgPredictor ------------------------------------------------------------------------------

AvgPredictor::AvgPredictor(std::map<int, std::vector<double>> history) {
  for (const auto& [service, values] : history) {
    if (values.empty()) continue;
    mean_[service] = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
}

AvgPredictor AvgPredictor::FromSamples(std::span<const TrainingSample> samples) {
  std::map<int, std::vector<double>> history;
  for (const auto& s : samples) {
    for (const auto& [id, truth] : s.truth) history[s.input.service_index[s.input.HtsOf(id).front()]].push_back(truth);
  }
  return AvgPredictor(std::move(history));
}

double AvgPredictor::PredictService(int service_index) const {
  auto it = mean_.find(service_index);
  if (it == mean_.end()) throw ValidationError("avg predictor: unseen service index " + std::to_string(service_index));
  return it->second;
}

std::map<InstanceId, double> AvgPredictor::PredictInstances(const SocketInput& input) const {
  std::map<InstanceId, double> out;
  for (InstanceId id : input.instances) out[id] = PredictService(input.service_index[input.HtsOf(id).front()]);
  return out;
}

// --- Training and evaluation ----------------------------------------------------------------------

json TrainConfig::ToJson() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"cosine_decay", cosine_decay},
          {"seed", seed}};
}

TrainConfig TrainConfig::FromJson(const json& doc) {
  TrainConfig c;
  c.epochs = doc.value("epochs", c.epochs);
  c.batch_size = doc.value("batch_size", c.batch_size);
  c.learning_rate = doc.value("learning_rate", c.learning_rate);
  c.cosine_decay = doc.value("cosine_decay", c.cosine_decay);
  c.seed = doc.value("seed", c.seed);
  return c;
}

json TrainReport::ToJson() const {
  return {{"schema_version", kSchemaVersion},
          {"kind", "train_report"},
          {"epoch_loss", epoch_loss},
          {"final_train_mse", final_train_mse},
          {"heldout", {{"mae", heldout.mae}, {"rmse", heldout.rmse}, {"instances", heldout.count}}},
          {"seed", seed},
          {"config", config_snapshot}};
}

ErrorMetrics ComputeErrors(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.size() != truths.size()) throw ValidationError("evaluate: prediction/truth count mismatch");
  if (predictions.empty()) throw ValidationError("evaluate: empty test set");
  ErrorMetrics m;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - truths[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  m.count = predictions.size();
  m.mae = abs_sum / static_cast<double>(m.count);
  m.rmse = std::sqrt(sq_sum / static_cast<double>(m.count));
  return m;
}

ErrorMetrics Evaluate(const UtilizationPredictor& predictor, std::span<const TrainingSample> test_set) {
  std::vector<double> preds, truths;
  for (const auto& sample : test_set) {
    const auto p = predictor.PredictInstances(sample.input);
    for (const auto& [id, truth] : sample.truth) {
      preds.push_back(p.at(id));
      truths.push_back(truth);
    }
  }
  return ComputeErrors(preds, truths);
}

double InstanceMse(const SocketInput& input, const Matrix& raw, const std::map<InstanceId, double>& truth,
                   Matrix* d_raw) {
  if (d_raw) *d_raw = Matrix(input.size(), 1);
  if (input.instances.empty()) return 0.0;
  const double k = static_cast<double>(input.instances.size());
  double loss = 0.0;
  for (InstanceId id : input.instances) {
    auto it = truth.find(id);
    if (it == truth.end()) throw ValidationError("loss: no target for instance " + std::to_string(id));
    const auto hts = input.HtsOf(id);
    double pred = 0.0;
    for (int j : hts) pred += raw(j, 0);
    pred /= static_cast<double>(hts.size());
    const double err = pred - it->second;
    loss += err * err / k;
    if (d_raw) {
      for (int j : hts) (*d_raw)(j, 0) = 2.0 * err / (k * static_cast<double>(hts.size()));
    }
  }
  return loss;
}

namespace {

template <class Model>
TrainReport TrainImpl(Model& model, std::span<const TrainingSample> train_set,
                      std::span<const TrainingSample> heldout_set, const TrainConfig& config) {
  if (train_set.empty()) throw ValidationError("train: empty dataset");
  if (config.epochs < 1 || config.batch_size < 1) throw ValidationError("train: epochs and batch_size must be >= 1");
  for (const auto& s : train_set) {
    for (const auto& [id, t] : s.truth) {
      if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("train: target outside [0,1]");
    }
  }
  nn::Adam optimizer(model.Parameters(), nn::AdamConfig{.learning_rate = config.learning_rate});
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  report.seed = config.seed;
  report.config_snapshot = {{"train", config.ToJson()}, {"model", model.config().ToJson()}, {"kind", model.name()}};
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.cosine_decay) {
      optimizer.set_learning_rate(config.learning_rate * 0.5 *
                                  (1.0 + std::cos(std::numbers::pi * epoch / static_cast<double>(config.epochs))));
    }
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double scale = 1.0 / static_cast<double>(end - start);
      optimizer.ZeroGrad();
      for (std::size_t b = start; b < end; ++b) {
        const TrainingSample& sample = train_set[order[b]];
        typename Model::Tape tape;
        const Matrix raw = model.ForwardRaw(sample.input, tape);
        Matrix d_raw;
        const double loss = InstanceMse(sample.input, raw, sample.truth, &d_raw);
        if (!std::isfinite(loss)) {
          throw RuntimeFailure("train: non-finite loss at epoch " + std::to_string(epoch) + ", sample " +
                               std::to_string(order[b]));
        }
        epoch_loss += loss;
        for (double& g : d_raw.values()) g *= scale;
        model.Backward(d_raw, tape);
      }
      optimizer.Step();
    }
    report.epoch_loss.push_back(epoch_loss / static_cast<double>(train_set.size()));
  }
  double total = 0.0;
  for (const auto& sample : train_set) total += InstanceMse(sample.input, model.ForwardRaw(sample.input), sample.truth, nullptr);
  report.final_train_mse = total / static_cast<double>(train_set.size());
  if (!heldout_set.empty()) report.heldout = Evaluate(model, heldout_set);
  return report;
}

}  // namespace

TrainReport Train(AttentionPredictor& model, std::span<const TrainingSample> train_set,
                  std::span<const TrainingSample> heldout_set, const TrainConfig& config) {
  return TrainImpl(model, train_set, heldout_set, config);
}

TrainReport Train(MlpPredictor& model, std::span<const TrainingSample> train_set,
                  std::span<const TrainingSample> heldout_set, const TrainConfig& config) {
  return TrainImpl(model, train_set, heldout_set, config);
}

SocketOccupancy IsolatedSocket(const PredictorConfig& config, const InstanceLoad& load,
                               std::span<const int> local_hts, const std::string& cpu_model) {
  if (local_hts.empty()) throw ValidationError("isolated socket: no HTs");
  constexpr InstanceId kAlone = 0;
  SocketOccupancy socket;
  socket.cpu_model = cpu_model;
  socket.hts_per_core = config.hts_per_core;
  socket.occupant.assign(config.socket_hts, kIdle);
  for (int j : local_hts) {
    if (j < 0 || j >= config.socket_hts || socket.occupant[j] != kIdle) {
      throw ValidationError("isolated socket: invalid HT " + std::to_string(j));
    }
    socket.occupant[j] = kAlone;
  }
  socket.loads[kAlone] = load;
  return socket;
}

double PredictWithoutInterference(const AttentionPredictor& model, const InstanceLoad& load,
                                  std::span<const int> local_hts, const std::string& cpu_model) {
  const SocketInput input = EncodeSocket(IsolatedSocket(model.config(), load, local_hts, cpu_model), model.config());
  return model.Forward(input).per_instance.begin()->second;
}

double PredictWithoutInterference(const AttentionPredictor& model, const InstanceLoad& load, int ht_count,
                                  const std::string& cpu_model) {
  if (ht_count < 1 || ht_count > model.config().socket_hts) {
    throw ValidationError("isolated socket: ht_count " + std::to_string(ht_count) + " does not fit a socket");
  }
  std::vector<int> hts(ht_count);
  std::iota(hts.begin(), hts.end(), 0);
  return PredictWithoutInterference(model, load, hts, cpu_model);
}

// --- Checkpoints -----------------------------------------------------------------------------------

namespace {

template <class Model>
void SaveImpl(const Model& model, const char* kind, const std::filesystem::path& path, const json& provenance) {
  const auto params = model.Parameters();
  json doc = {{"schema_version", kSchemaVersion},
              {"kind", "checkpoint"},
              {"model", kind},
              {"config", model.config().ToJson()},
              {"provenance", provenance},
              {"tensors", nn::TensorsToJson(params)}};
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << doc.dump() << "\n";
}

json ReadCheckpoint(const std::filesystem::path& path, const char* kind) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint " + path.string() + ": " + e.what());
  }
  if (doc.value("kind", "") != "checkpoint" || doc.value("model", "") != kind) {
    throw ValidationError("checkpoint " + path.string() + " is not a " + kind + " checkpoint");
  }
  if (doc.value("schema_version", 0) != kSchemaVersion) throw ValidationError("checkpoint: unsupported schema_version");
  return doc;
}

}  // namespace

void SaveCheckpoint(const AttentionPredictor& model, const std::filesystem::path& path, const json& provenance) {
  SaveImpl(model, "attention", path, provenance);
}

AttentionPredictor LoadCheckpoint(const std::filesystem::path& path) {
  const json doc = ReadCheckpoint(path, "attention");
  AttentionPredictor model(PredictorConfig::FromJson(doc.at("config")));
  nn::TensorsFromJson(doc.at("tensors"), model.Parameters());
  return model;
}

void SaveCheckpoint(const MlpPredictor& model, const std::filesystem::path& path, const json& provenance) {
  SaveImpl(model, "mlp", path, provenance);
}

MlpPredictor LoadMlpCheckpoint(const std::filesystem::path& path) {
  const json doc = ReadCheckpoint(path, "mlp");
  MlpPredictor model(PredictorConfig::FromJson(doc.at("config")));
  nn::TensorsFromJson(doc.at("tensors"), model.Parameters());
  return model;
}

}  // namespace hestia
