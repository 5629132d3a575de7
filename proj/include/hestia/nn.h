#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace hestia::nn {

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  void Fill(double v);
  bool AllFinite() const;
  bool SameShape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Matrix MatMul(const Matrix& a, const Matrix& b);        // a * b
Matrix MatMulTransA(const Matrix& a, const Matrix& b);  // a^T * b
Matrix MatMulTransB(const Matrix& a, const Matrix& b);  // a * b^T
void AddInPlace(Matrix& into, const Matrix& add);
Matrix ConcatCols(const Matrix& a, const Matrix& b);
// Splits columns [0, left_cols) and [left_cols, cols).
std::pair<Matrix, Matrix> SplitCols(const Matrix& m, int left_cols);

// Row-wise softmax with row-max subtraction.
Matrix SoftmaxRows(const Matrix& logits);

// Boolean attention mask: allowed(i, j) means token i may attend to token j.
class AttentionMask {
 public:
  AttentionMask() = default;
  explicit AttentionMask(int n, bool fill = true) : n_(n), allowed_(static_cast<std::size_t>(n) * n, fill) {}

  int size() const { return n_; }
  bool allowed(int i, int j) const { return allowed_[static_cast<std::size_t>(i) * n_ + j]; }
  void set(int i, int j, bool v) { allowed_[static_cast<std::size_t>(i) * n_ + j] = v; }

  // Tokens grouped in consecutive blocks of `block` attend only within their block.
  static AttentionMask BlockDiagonal(int n, int block);

 private:
  int n_ = 0;
  std::vector<bool> allowed_;
};

// A named learnable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}
  void ZeroGrad() { grad.Fill(0.0); }
};

// Scaled uniform (Glorot) initialization.
void InitGlorot(Matrix& m, std::mt19937_64& rng);

class Linear {
 public:
  struct Cache {
    bool valid = false;
    Matrix input;
  };

  Linear() = default;
  Linear(const std::string& name, int in, int out);

  int in_dim() const { return weight_.value.rows(); }
  int out_dim() const { return weight_.value.cols(); }

  Matrix Forward(const Matrix& x) const;
  Matrix Forward(const Matrix& x, Cache& cache) const;
  Matrix Backward(const Matrix& dy, const Cache& cache);

  void Init(std::mt19937_64& rng);
  void CollectParameters(std::vector<Parameter*>& out) { out.push_back(&weight_); out.push_back(&bias_); }
  void CollectParameters(std::vector<const Parameter*>& out) const { out.push_back(&weight_); out.push_back(&bias_); }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  Parameter weight_;  // in x out
  Parameter bias_;    // 1 x out
};

struct ReluCache {
  bool valid = false;
  Matrix input;
};
Matrix Relu(const Matrix& x);
Matrix Relu(const Matrix& x, ReluCache& cache);
Matrix ReluBackward(const Matrix& dy, const ReluCache& cache);

// Single-head scaled dot-product self-attention:
// softmax((X Wq)(X Wk)^T / sqrt(d_k)) (X Wv), masked logits excluded.
class AttentionLayer {
 public:
  struct Cache {
    bool valid = false;
    Matrix input, q, k, v, weights;
  };

  AttentionLayer() = default;
  AttentionLayer(const std::string& name, int d_in, int d_k);

  int in_dim() const { return wq_.value.rows(); }
  int key_dim() const { return wq_.value.cols(); }

  Matrix Forward(const Matrix& x, const AttentionMask* mask = nullptr) const;
  Matrix Forward(const Matrix& x, const AttentionMask* mask, Cache& cache) const;
  Matrix Backward(const Matrix& dy, const Cache& cache);

  void Init(std::mt19937_64& rng);
  void CollectParameters(std::vector<Parameter*>& out) { out.insert(out.end(), {&wq_, &wk_, &wv_}); }
  void CollectParameters(std::vector<const Parameter*>& out) const { out.insert(out.end(), {&wq_, &wk_, &wv_}); }
  Parameter& wq() { return wq_; }
  Parameter& wk() { return wk_; }
  Parameter& wv() { return wv_; }

 private:
  Parameter wq_, wk_, wv_;  // d_in x d_k
};

// Affine -> ReLU -> affine, applied to each row independently.
class FeedForward {
 public:
  struct Cache {
    Linear::Cache first;
    ReluCache relu;
    Linear::Cache second;
  };

  FeedForward() = default;
  FeedForward(const std::string& name, int in, int hidden, int out);

  int in_dim() const { return first_.in_dim(); }
  int out_dim() const { return second_.out_dim(); }

  Matrix Forward(const Matrix& x) const;
  Matrix Forward(const Matrix& x, Cache& cache) const;
  Matrix Backward(const Matrix& dy, const Cache& cache);

  void Init(std::mt19937_64& rng);
  void CollectParameters(std::vector<Parameter*>& out);
  void CollectParameters(std::vector<const Parameter*>& out) const;

 private:
  Linear first_, second_;
};

// Row lookup into a learnable table.
class Embedding {
 public:
  struct Cache {
    bool valid = false;
    std::vector<int> indices;
  };

  Embedding() = default;
  Embedding(const std::string& name, int vocab, int dim);

  int vocab() const { return table_.value.rows(); }
  int dim() const { return table_.value.cols(); }

  Matrix Forward(std::span<const int> indices) const;
  Matrix Forward(std::span<const int> indices, Cache& cache) const;
  void Backward(const Matrix& dy, const Cache& cache);

  void Init(std::mt19937_64& rng);
  void CollectParameters(std::vector<Parameter*>& out) { out.push_back(&table_); }
  void CollectParameters(std::vector<const Parameter*>& out) const { out.push_back(&table_); }

 private:
  Parameter table_;
};

// f(x) = sum of squares, and its gradient 2x.
double SquaredNorm(const Matrix& x);
Matrix SquaredNormGrad(const Matrix& x);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig config = {});

  void Step();
  void ZeroGrad();
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  double learning_rate() const { return config_.learning_rate; }
  std::int64_t steps() const { return step_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig config_;
  std::vector<Matrix> m_, v_;
  std::int64_t step_ = 0;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t checked = 0;
};

// Compares analytic gradients already stored in params against central
// differences of `loss`. Relative error is |a - n| / max(|a|, |n|, floor).
GradientCheckResult CheckGradients(std::span<Parameter* const> params, const std::function<double()>& loss,
                                   double step = 1e-5, double floor = 1e-7);

nlohmann::json TensorsToJson(std::span<const Parameter* const> params);
// Loads values by name; shapes and the name set must match exactly.
void TensorsFromJson(const nlohmann::json& tensors, std::span<Parameter* const> params);

}  // namespace hestia::nn
