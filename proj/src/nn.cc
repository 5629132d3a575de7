#include "hestia/nn.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "hestia/errors.h"

namespace hestia::nn {

namespace {

std::string Shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void RequireFinite(const Matrix& m, const char* where) {
  if (!m.AllFinite()) throw RuntimeFailure(std::string(where) + ": non-finite input");
}

}  // namespace

Matrix::Matrix(int rows, int cols, double fill) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw ValidationError("matrix: negative dimension");
  data_.assign(static_cast<std::size_t>(rows) * cols, fill);
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ ? static_cast<int>(rows.begin()->size()) : 0;
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != cols_) throw ValidationError("matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

void Matrix::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix MatMul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ValidationError("matmul: " + Shape(a) + " * " + Shape(b));
  Matrix out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (int j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix MatMulTransA(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ValidationError("matmul: " + Shape(a) + "^T * " + Shape(b));
  Matrix out(a.cols(), b.cols());
  for (int k = 0; k < a.rows(); ++k) {
    for (int i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      for (int j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
    }
  }
  return out;
}

Matrix MatMulTransB(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ValidationError("matmul: " + Shape(a) + " * " + Shape(b) + "^T");
  Matrix out(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
  }
  return out;
}

void AddInPlace(Matrix& into, const Matrix& add) {
  if (!into.SameShape(add)) throw ValidationError("add: " + Shape(into) + " vs " + Shape(add));
  auto dst = into.values();
  auto src = add.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Matrix ConcatCols(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ValidationError("concat: " + Shape(a) + " | " + Shape(b));
  Matrix out(a.rows(), a.cols() + b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
    for (int j = 0; j < b.cols(); ++j) out(i, a.cols() + j) = b(i, j);
  }
  return out;
}

std::pair<Matrix, Matrix> SplitCols(const Matrix& m, int left_cols) {
  if (left_cols < 0 || left_cols > m.cols()) throw ValidationError("split: bad column count");
  Matrix left(m.rows(), left_cols), right(m.rows(), m.cols() - left_cols);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j < left_cols) {
        left(i, j) = m(i, j);
      } else {
        right(i, j - left_cols) = m(i, j);
      }
    }
  }
  return {std::move(left), std::move(right)};
}

Matrix SoftmaxRows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < logits.cols(); ++j) mx = std::max(mx, logits(i, j));
    double sum = 0.0;
    for (int j = 0; j < logits.cols(); ++j) {
      const double e = std::isinf(logits(i, j)) && logits(i, j) < 0 ? 0.0 : std::exp(logits(i, j) - mx);
      out(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < logits.cols(); ++j) out(i, j) /= sum;
  }
  return out;
}

AttentionMask AttentionMask::BlockDiagonal(int n, int block) {
  if (block < 1 || n % block != 0) throw ValidationError("mask: sequence length not a multiple of block");
  AttentionMask m(n, false);
  for (int i = 0; i < n; ++i) {
    for (int j = (i / block) * block; j < (i / block + 1) * block; ++j) m.set(i, j, true);
  }
  return m;
}

void InitGlorot(Matrix& m, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (m.rows() + m.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : m.values()) v = dist(rng);
}

// --- Linear ---------------------------------------------------------------

Linear::Linear(const std::string& name, int in, int out)
    : weight_(name + ".weight", Matrix(in, out)), bias_(name + ".bias", Matrix(1, out)) {
  if (in < 1 || out < 1) throw ValidationError("linear " + name + ": dimensions must be >= 1");
}

void Linear::Init(std::mt19937_64& rng) {
  InitGlorot(weight_.value, rng);
  bias_.value.Fill(0.0);
}

Matrix Linear::Forward(const Matrix& x) const {
  RequireFinite(x, "linear");
  Matrix y = MatMul(x, weight_.value);
  for (int i = 0; i < y.rows(); ++i) {
    for (int j = 0; j < y.cols(); ++j) y(i, j) += bias_.value(0, j);
  }
  return y;
}

Matrix Linear::Forward(const Matrix& x, Cache& cache) const {
  Matrix y = Forward(x);
  cache.input = x;
  cache.valid = true;
  return y;
}

Matrix Linear::Backward(const Matrix& dy, const Cache& cache) {
  if (!cache.valid) throw RuntimeFailure("linear: backward before forward");
  AddInPlace(weight_.grad, MatMulTransA(cache.input, dy));
  for (int i = 0; i < dy.rows(); ++i) {
    for (int j = 0; j < dy.cols(); ++j) bias_.grad(0, j) += dy(i, j);
  }
  return MatMulTransB(dy, weight_.value);
}

// --- ReLU -------------------------------------------------------------------

Matrix Relu(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.values()) v = std::max(v, 0.0);
  return y;
}

Matrix Relu(const Matrix& x, ReluCache& cache) {
  cache.input = x;
  cache.valid = true;
  return Relu(x);
}

Matrix ReluBackward(const Matrix& dy, const ReluCache& cache) {
  if (!cache.valid) throw RuntimeFailure("relu: backward before forward");
  Matrix dx = dy;
  auto in = cache.input.values();
  auto d = dx.values();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (in[i] <= 0.0) d[i] = 0.0;
  }
  return dx;
}

// --- Attention --------------------------------------------------------------

AttentionLayer::AttentionLayer(const std::string& name, int d_in, int d_k)
    : wq_(name + ".wq", Matrix(d_in, d_k)),
      wk_(name + ".wk", Matrix(d_in, d_k)),
      wv_(name + ".wv", Matrix(d_in, d_k)) {
  if (d_in < 1 || d_k < 1) throw ValidationError("attention " + name + ": dimensions must be >= 1");
}

void AttentionLayer::Init(std::mt19937_64& rng) {
  InitGlorot(wq_.value, rng);
  InitGlorot(wk_.value, rng);
  InitGlorot(wv_.value, rng);
}

Matrix AttentionLayer::Forward(const Matrix& x, const AttentionMask* mask) const {
  Cache scratch;
  return Forward(x, mask, scratch);
}

Matrix AttentionLayer::Forward(const Matrix& x, const AttentionMask* mask, Cache& cache) const {
  if (x.cols() != in_dim()) {
    throw ValidationError("attention: input has " + std::to_string(x.cols()) + " features, expected " +
                          std::to_string(in_dim()));
  }
  RequireFinite(x, "attention");
  const int n = x.rows();
  if (mask) {
    if (mask->size() != n) throw ValidationError("attention: mask does not match sequence length");
    for (int i = 0; i < n; ++i) {
      bool any = false;
      for (int j = 0; j < n && !any; ++j) any = mask->allowed(i, j);
      if (!any) throw ValidationError("attention: mask row " + std::to_string(i) + " admits no token");
    }
  }
  cache.input = x;
  cache.q = MatMul(x, wq_.value);
  cache.k = MatMul(x, wk_.value);
  cache.v = MatMul(x, wv_.value);
  Matrix logits = MatMulTransB(cache.q, cache.k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(key_dim()));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      logits(i, j) = (mask && !mask->allowed(i, j)) ? -std::numeric_limits<double>::infinity()
                                                     : logits(i, j) * scale;
    }
  }
  cache.weights = SoftmaxRows(logits);
  cache.valid = true;
  return MatMul(cache.weights, cache.v);
}

Matrix AttentionLayer::Backward(const Matrix& dy, const Cache& c) {
  if (!c.valid) throw RuntimeFailure("attention: backward before forward");
  const int n = c.weights.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(key_dim()));
  Matrix dv = MatMulTransA(c.weights, dy);  // A^T dY
  Matrix da = MatMulTransB(dy, c.v);        // dY V^T
  Matrix ds(n, n);
  for (int i = 0; i < n; ++i) {
    double dot = 0.0;
    for (int j = 0; j < n; ++j) dot += da(i, j) * c.weights(i, j);
    for (int j = 0; j < n; ++j) ds(i, j) = c.weights(i, j) * (da(i, j) - dot) * scale;
  }
  Matrix dq = MatMul(ds, c.k);
  Matrix dk = MatMulTransA(ds, c.q);
  AddInPlace(wq_.grad, MatMulTransA(c.input, dq));
  AddInPlace(wk_.grad, MatMulTransA(c.input, dk));
  AddInPlace(wv_.grad, MatMulTransA(c.input, dv));
  Matrix dx = MatMulTransB(dq, wq_.value);
  AddInPlace(dx, MatMulTransB(dk, wk_.value));
  AddInPlace(dx, MatMulTransB(dv, wv_.value));
  return dx;
}

// --- FeedForward -------------------------------------------------------------

FeedForward::FeedForward(const std::string& name, int in, int hidden, int out)
    : first_(name + ".0", in, hidden), second_(name + ".1", hidden, out) {}

void FeedForward::Init(std::mt19937_64& rng) {
  first_.Init(rng);
  second_.Init(rng);
}

Matrix FeedForward::Forward(const Matrix& x) const { return second_.Forward(Relu(first_.Forward(x))); }

Matrix FeedForward::Forward(const Matrix& x, Cache& cache) const {
  Matrix h = first_.Forward(x, cache.first);
  return second_.Forward(Relu(h, cache.relu), cache.second);
}

Matrix FeedForward::Backward(const Matrix& dy, const Cache& cache) {
  Matrix dh = second_.Backward(dy, cache.second);
  return first_.Backward(ReluBackward(dh, cache.relu), cache.first);
}

void FeedForward::CollectParameters(std::vector<Parameter*>& out) {
  first_.CollectParameters(out);
  second_.CollectParameters(out);
}

void FeedForward::CollectParameters(std::vector<const Parameter*>& out) const {
  first_.CollectParameters(out);
  second_.CollectParameters(out);
}

// --- Embedding ---------------------------------------------------------------

Embedding::Embedding(const std::string& name, int vocab, int dim) : table_(name + ".table", Matrix(vocab, dim)) {
  if (vocab < 1 || dim < 1) throw ValidationError("embedding " + name + ": dimensions must be >= 1");
}

void Embedding::Init(std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(dim())));
  for (double& v : table_.value.values()) v = dist(rng);
}

Matrix Embedding::Forward(std::span<const int> indices) const {
  Matrix out(static_cast<int>(indices.size()), dim());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || idx >= vocab()) throw ValidationError("embedding: index " + std::to_string(idx) + " out of range");
    for (int j = 0; j < dim(); ++j) out(static_cast<int>(i), j) = table_.value(idx, j);
  }
  return out;
}

Matrix Embedding::Forward(std::span<const int> indices, Cache& cache) const {
  Matrix out = Forward(indices);
  cache.indices.assign(indices.begin(), indices.end());
  cache.valid = true;
  return out;
}

void Embedding::Backward(const Matrix& dy, const Cache& cache) {
  if (!cache.valid) throw RuntimeFailure("embedding: backward before forward");
  for (std::size_t i = 0; i < cache.indices.size(); ++i) {
    for (int j = 0; j < dim(); ++j) table_.grad(cache.indices[i], j) += dy(static_cast<int>(i), j);
  }
}

double SquaredNorm(const Matrix& x) {
  double s = 0.0;
  for (double v : x.values()) s += v * v;
  return s;
}

Matrix SquaredNormGrad(const Matrix& x) {
  Matrix g = x;
  for (double& v : g.values()) v *= 2.0;
  return g;
}

// --- Adam ----------------------------------------------------------------------

Adam::Adam(std::vector<Parameter*> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void Adam::ZeroGrad() {
  for (Parameter* p : params_) p->ZeroGrad();
}

void Adam::Step() {
  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (!p.grad.SameShape(p.value) || !m_[i].SameShape(p.value)) {
      throw ValidationError("adam: shape mismatch for " + p.name);
    }
    auto w = p.value.values();
    auto g = p.grad.values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      w[k] -= config_.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.epsilon);
    }
  }
}

// --- Gradient check --------------------------------------------------------------

GradientCheckResult CheckGradients(std::span<Parameter* const> params, const std::function<double()>& loss,
                                   double step, double floor) {
  GradientCheckResult result;
  for (Parameter* p : params) {
    auto w = p->value.values();
    auto g = p->grad.values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double saved = w[k];
      w[k] = saved + step;
      const double up = loss();
      w[k] = saved - step;
      const double down = loss();
      w[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(numeric), std::abs(g[k]), floor});
      const double rel = std::abs(numeric - g[k]) / denom;
      ++result.checked;
      if (!(rel <= result.max_relative_error)) {
        result.max_relative_error = rel;
        result.worst_parameter = p->name + "[" + std::to_string(k) + "]";
      }
    }
  }
  return result;
}

// --- Serialization -------------------------------------------------------------

nlohmann::json TensorsToJson(std::span<const Parameter* const> params) {
  nlohmann::json out = nlohmann::json::array();
  for (const Parameter* p : params) {
    out.push_back({{"name", p->name},
                   {"rows", p->value.rows()},
                   {"cols", p->value.cols()},
                   {"values", std::vector<double>(p->value.values().begin(), p->value.values().end())}});
  }
  return out;
}

void TensorsFromJson(const nlohmann::json& tensors, std::span<Parameter* const> params) {
  std::map<std::string, const nlohmann::json*> by_name;
  for (const auto& t : tensors) by_name[t.at("name").get<std::string>()] = &t;
  if (by_name.size() != params.size()) throw ValidationError("checkpoint: tensor count does not match model");
  for (Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw ValidationError("checkpoint: missing tensor " + p->name);
    const auto& t = *it->second;
    if (t.at("rows").get<int>() != p->value.rows() || t.at("cols").get<int>() != p->value.cols()) {
      throw ValidationError("checkpoint: shape mismatch for " + p->name);
    }
    const auto values = t.at("values").get<std::vector<double>>();
    if (values.size() != p->value.size()) throw ValidationError("checkpoint: value count mismatch for " + p->name);
    std::copy(values.begin(), values.end(), p->value.values().begin());
    p->ZeroGrad();
  }
}

}  // namespace hestia::nn
