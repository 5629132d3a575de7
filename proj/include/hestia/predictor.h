#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hestia/nn.h"
#include "hestia/workload.h"
#include "json.hpp"

namespace hestia {

struct PredictorConfig {
  std::vector<int> service_vocab;        // embedding row = position + 1; row 0 is Idle
  std::map<int, double> rps_ref;         // per service_id, for rps normalization
  std::vector<std::string> cpu_vocab;    // one-hot order
  int embed_dim = 8;
  int key_dim = 16;
  int ffn_hidden = 32;
  int mlp_hidden = 16;
  bool skip_connections = true;
  int socket_hts = 16;  // tokens per socket for the flat MLP and the no-interference query
  int hts_per_core = 2;

  int n_services() const { return static_cast<int>(service_vocab.size()) + 1; }
  int token_dim() const { return embed_dim + 1 + static_cast<int>(cpu_vocab.size()); }
  int ServiceIndex(int service_id) const;
  int CpuIndex(const std::string& cpu_model) const;
  void Validate() const;

  nlohmann::json ToJson() const;
  static PredictorConfig FromJson(const nlohmann::json& doc);
  // Vocabularies from a catalog, default dimensions.
  static PredictorConfig ForCatalog(const ServiceCatalog& catalog, int socket_hts, int hts_per_core);

  bool operator==(const PredictorConfig&) const = default;
};

// Per-HT token sequence of one socket, in socket-local ht order.
struct SocketInput {
  std::vector<int> service_index;  // 0 = Idle
  std::vector<double> rps_norm;    // 0 for Idle
  int cpu_index = 0;
  int hts_per_core = 2;
  std::vector<InstanceId> occupant;
  std::vector<InstanceId> instances;  // ascending

  int size() const { return static_cast<int>(service_index.size()); }
  std::vector<int> HtsOf(InstanceId id) const;
};

SocketInput EncodeSocket(const SocketOccupancy& socket, const PredictorConfig& config);

struct PredictionOutput {
  std::vector<double> per_ht;                 // clamped to [0, 1]
  std::map<InstanceId, double> per_instance;  // mean of the instance's per_ht values
};

// Builds PredictionOutput from raw per-HT values (clamps, then averages per instance).
PredictionOutput MakePrediction(const SocketInput& input, const nn::Matrix& raw);

// Common read-only interface for evaluation and scoring.
class UtilizationPredictor {
 public:
  virtual ~UtilizationPredictor() = default;
  virtual std::string name() const = 0;
  virtual std::map<InstanceId, double> PredictInstances(const SocketInput& input) const = 0;
};

struct TrainingSample {
  SocketInput input;
  std::map<InstanceId, double> truth;  // CPU_Truth per instance in the socket
};

// Hierarchical self-attention model:
//   tokens I = [embedding(service), rps, one-hot(cpu_model)]
//   SC_E = attention over each core's sibling HTs (block-diagonal mask)
//   SC_H = FFN(SC_E)            (FFN input is [SC_E, I] with skip connections)
//   SS_H = attention over all socket HTs
//   CPU_j = MLP(SS_H)_j         (head input is [SS_H, SC_H] with skip connections)
class AttentionPredictor : public UtilizationPredictor {
 public:
  struct Tape {
    nn::Embedding::Cache embed;
    nn::AttentionLayer::Cache sc;
    nn::FeedForward::Cache ffn;
    nn::AttentionLayer::Cache ss;
    nn::FeedForward::Cache head;
  };

  explicit AttentionPredictor(PredictorConfig config, std::uint64_t init_seed = 0);

  const PredictorConfig& config() const { return config_; }
  std::string name() const override { return "attention"; }

  nn::Matrix Tokens(const SocketInput& input) const;
  // Unclamped per-HT outputs (tokens x 1).
  nn::Matrix ForwardRaw(const SocketInput& input) const;
  nn::Matrix ForwardRaw(const SocketInput& input, Tape& tape) const;
  void Backward(const nn::Matrix& d_out, const Tape& tape);

  PredictionOutput Forward(const SocketInput& input) const;
  std::map<InstanceId, double> PredictInstances(const SocketInput& input) const override;

  // Outputs of the SC stage (SC_E) only, for mask-locality checks.
  nn::Matrix CoreStage(const SocketInput& input) const;

  std::vector<nn::Parameter*> Parameters();
  std::vector<const nn::Parameter*> Parameters() const;

 private:
  void CheckInput(const SocketInput& input) const;

  PredictorConfig config_;
  nn::Embedding embed_;
  nn::AttentionLayer sc_attn_;
  nn::FeedForward ffn_;
  nn::AttentionLayer ss_attn_;
  nn::FeedForward head_;
};

// Baseline: flat MLP over the concatenated token features of a fixed-size socket.
class MlpPredictor : public UtilizationPredictor {
 public:
  struct Tape {
    nn::Embedding::Cache embed;
    nn::FeedForward::Cache net;
  };

  explicit MlpPredictor(PredictorConfig config, std::uint64_t init_seed = 0);

  const PredictorConfig& config() const { return config_; }
  std::string name() const override { return "mlp"; }

  nn::Matrix ForwardRaw(const SocketInput& input) const;
  nn::Matrix ForwardRaw(const SocketInput& input, Tape& tape) const;
  void Backward(const nn::Matrix& d_out, const Tape& tape);

  PredictionOutput Forward(const SocketInput& input) const;
  std::map<InstanceId, double> PredictInstances(const SocketInput& input) const override;

  std::vector<nn::Parameter*> Parameters();
  std::vector<const nn::Parameter*> Parameters() const;

 private:
  nn::Matrix Flatten(const SocketInput& input, const nn::Matrix& embedded) const;

  PredictorConfig config_;
  nn::Embedding embed_;
  nn::FeedForward net_;
};

// Baseline: each service's historical mean utilization, ignoring neighbors.
class AvgPredictor : public UtilizationPredictor {
 public:
  AvgPredictor() = default;
  // history: service_index -> realized utilizations
  explicit AvgPredictor(std::map<int, std::vector<double>> history);
  static AvgPredictor FromSamples(std::span<const TrainingSample> samples);

  std::string name() const override { return "avg"; }
  double PredictService(int service_index) const;
  std::map<InstanceId, double> PredictInstances(const SocketInput& input) const override;

 private:
  std::map<int, double> mean_;
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 3e-3;
  bool cosine_decay = true;
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& doc);
};

struct ErrorMetrics {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;
};

ErrorMetrics ComputeErrors(std::span<const double> predictions, std::span<const double> truths);
ErrorMetrics Evaluate(const UtilizationPredictor& predictor, std::span<const TrainingSample> test_set);

struct TrainReport {
  std::vector<double> epoch_loss;  // instance-level MSE on the training set, per epoch
  double final_train_mse = 0.0;
  ErrorMetrics heldout;
  std::uint64_t seed = 0;
  nlohmann::json config_snapshot;

  nlohmann::json ToJson() const;
};

// Instance-level MSE of one socket: (1/k) sum_i (mean_{j in i} raw_j - truth_i)^2.
// Fills d_raw (tokens x 1) with the gradient when non-null.
double InstanceMse(const SocketInput& input, const nn::Matrix& raw, const std::map<InstanceId, double>& truth,
                   nn::Matrix* d_raw);

TrainReport Train(AttentionPredictor& model, std::span<const TrainingSample> train_set,
                  std::span<const TrainingSample> heldout_set, const TrainConfig& config);
TrainReport Train(MlpPredictor& model, std::span<const TrainingSample> train_set,
                  std::span<const TrainingSample> heldout_set, const TrainConfig& config);

// CPU_woi: forward on a socket holding only this instance, on the given
// socket-local HTs. The ht_count overload uses HTs 0..ht_count-1.
double PredictWithoutInterference(const AttentionPredictor& model, const InstanceLoad& load,
                                  std::span<const int> local_hts, const std::string& cpu_model);
double PredictWithoutInterference(const AttentionPredictor& model, const InstanceLoad& load, int ht_count,
                                  const std::string& cpu_model);
SocketOccupancy IsolatedSocket(const PredictorConfig& config, const InstanceLoad& load,
                               std::span<const int> local_hts, const std::string& cpu_model);

// `provenance` (seeds, experiment config) is stored alongside the tensors.
void SaveCheckpoint(const AttentionPredictor& model, const std::filesystem::path& path,
                    const nlohmann::json& provenance = nlohmann::json::object());
AttentionPredictor LoadCheckpoint(const std::filesystem::path& path);
void SaveCheckpoint(const MlpPredictor& model, const std::filesystem::path& path,
                    const nlohmann::json& provenance = nlohmann::json::object());
MlpPredictor LoadMlpCheckpoint(const std::filesystem::path& path);

}  // namespace hestia
