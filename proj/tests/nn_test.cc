#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hestia/nn.h"

namespace hestia::nn {
namespace {

Matrix Random(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> N(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.values()) v = N(rng);
  return m;
}

TEST(Softmax, ClosedForms) {
  const Matrix s = SoftmaxRows({{0.0, 0.0}, {1000.0, 1000.0}, {std::log(1.0), std::log(3.0)}, {-1000.0, 1000.0}});
  EXPECT_DOUBLE_EQ(s(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(s(1, 1), 0.5);
  EXPECT_NEAR(s(2, 0), 0.25, 1e-15);
  EXPECT_NEAR(s(2, 1), 0.75, 1e-15);
  EXPECT_EQ(s(3, 0), 0.0);
  EXPECT_EQ(s(3, 1), 1.0);
  EXPECT_TRUE(s.AllFinite());
}

TEST(Attention, SingleTokenReturnsValueRow) {
  std::mt19937_64 rng(1);
  AttentionLayer layer("a", 5, 3);
  layer.Init(rng);
  const Matrix x = Random(1, 5, rng);
  const Matrix v = MatMul(x, layer.wv().value);
  EXPECT_EQ(layer.Forward(x), v);
}

TEST(Attention, IdenticalTokensSplitEvenly) {
  std::mt19937_64 rng(2);
  AttentionLayer layer("a", 4, 3);
  layer.Init(rng);
  Matrix x = Random(1, 4, rng);
  x = Matrix({{x(0, 0), x(0, 1), x(0, 2), x(0, 3)}, {x(0, 0), x(0, 1), x(0, 2), x(0, 3)}});
  AttentionLayer::Cache cache;
  layer.Forward(x, nullptr, cache);
  for (int i = 0; i < 2; ++i) {
    EXPECT_DOUBLE_EQ(cache.weights(i, 0), 0.5);
    EXPECT_DOUBLE_EQ(cache.weights(i, 1), 0.5);
  }
}

TEST(Attention, MatchesStraightLineFormula) {
  std::mt19937_64 rng(3);
  AttentionLayer layer("a", 6, 4);
  layer.Init(rng);
  const Matrix x = Random(4, 6, rng);
  const Matrix& wq = layer.wq().value;
  const Matrix& wk = layer.wk().value;
  const Matrix& wv = layer.wv().value;
  const Matrix got = layer.Forward(x);
  for (int i = 0; i < 4; ++i) {
    double logits[4], z = 0.0;
    for (int j = 0; j < 4; ++j) {
      double dot = 0.0;
      for (int d = 0; d < 4; ++d) {
        double q = 0.0, k = 0.0;
        for (int c = 0; c < 6; ++c) {
          q += x(i, c) * wq(c, d);
          k += x(j, c) * wk(c, d);
        }
        dot += q * k;
      }
      logits[j] = std::exp(dot / 2.0);
      z += logits[j];
    }
    for (int d = 0; d < 4; ++d) {
      double out = 0.0;
      for (int j = 0; j < 4; ++j) {
        double v = 0.0;
        for (int c = 0; c < 6; ++c) v += x(j, c) * wv(c, d);
        out += logits[j] / z * v;
      }
      EXPECT_NEAR(got(i, d), out, 1e-12);
    }
  }
}

TEST(Attention, BlockDiagonalMask) {
  const AttentionMask m = AttentionMask::BlockDiagonal(6, 2);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) EXPECT_EQ(m.allowed(i, j), i / 2 == j / 2);
  }
}

TEST(Attention, FullyMaskedRowIsRejected) {
  std::mt19937_64 rng(4);
  AttentionLayer layer("a", 3, 2);
  layer.Init(rng);
  AttentionMask mask(2, true);
  mask.set(1, 0, false);
  mask.set(1, 1, false);
  EXPECT_THROW(layer.Forward(Random(2, 3, rng), &mask), std::exception);
}

TEST(Backward, SquaredNormGradient) {
  const Matrix x = {{1.0, 2.0}};
  EXPECT_DOUBLE_EQ(SquaredNorm(x), 5.0);
  EXPECT_EQ(SquaredNormGrad(x), Matrix({{2.0, 4.0}}));
}

// Gradient check through every layer type composed: embedding -> attention
// -> ffn -> linear, loss = squared norm of the output.
TEST(Backward, ComposedLayersMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  Embedding emb("e", 4, 3);
  AttentionLayer attn("a", 3, 5);
  FeedForward ffn("f", 5, 7, 4);
  Linear out("o", 4, 1);
  emb.Init(rng);
  attn.Init(rng);
  ffn.Init(rng);
  out.Init(rng);
  const std::vector<int> idx = {0, 2, 3, 2, 1, 1};
  const AttentionMask mask = AttentionMask::BlockDiagonal(6, 2);
  std::vector<Parameter*> params;
  emb.CollectParameters(params);
  attn.CollectParameters(params);
  ffn.CollectParameters(params);
  out.CollectParameters(params);

  auto loss = [&] {
    return SquaredNorm(out.Forward(ffn.Forward(attn.Forward(emb.Forward(idx), &mask))));
  };
  for (Parameter* p : params) p->ZeroGrad();
  Embedding::Cache ce;
  AttentionLayer::Cache ca;
  FeedForward::Cache cf;
  Linear::Cache co;
  const Matrix y = out.Forward(ffn.Forward(attn.Forward(emb.Forward(idx, ce), &mask, ca), cf), co);
  emb.Backward(attn.Backward(ffn.Backward(out.Backward(SquaredNormGrad(y), co), cf), ca), ce);
  const auto r = CheckGradients(params, loss);
  EXPECT_LE(r.max_relative_error, 1e-6) << r.worst_parameter;
  EXPECT_GT(r.checked, 100u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::mt19937_64 rng(6);
  Parameter p("w", Random(3, 3, rng));
  const Matrix before = p.value;
  Adam opt({&p}, {0.1});
  for (int i = 0; i < 5; ++i) {
    opt.ZeroGrad();
    opt.Step();
  }
  EXPECT_EQ(p.value, before);
}

TEST(Adam, ConstantGradientDescends) {
  Parameter p("w", Matrix({{0.0, 0.0}}));
  Adam opt({&p}, {0.01});
  for (int i = 0; i < 50; ++i) {
    p.grad = Matrix({{1.5, -0.2}});
    opt.Step();
  }
  EXPECT_LT(p.value(0, 0), 0.0);
  EXPECT_GT(p.value(0, 1), 0.0);
  EXPECT_EQ(opt.steps(), 50);
}

TEST(Adam, Deterministic) {
  auto run = [] {
    std::mt19937_64 rng(7);
    Linear l("l", 3, 2);
    l.Init(rng);
    std::vector<Parameter*> params;
    l.CollectParameters(params);
    Adam opt(params, {0.05});
    const Matrix x = Random(4, 3, rng);
    for (int i = 0; i < 20; ++i) {
      opt.ZeroGrad();
      Linear::Cache c;
      const Matrix y = l.Forward(x, c);
      l.Backward(SquaredNormGrad(y), c);
      opt.Step();
    }
    return l.weight().value;
  };
  EXPECT_EQ(run(), run());
}

TEST(Tensors, JsonRoundTripAndMismatch) {
  std::mt19937_64 rng(8);
  Linear a("l", 3, 2), b("l", 3, 2), c("l", 2, 2);
  a.Init(rng);
  std::vector<const Parameter*> src;
  a.CollectParameters(src);
  std::vector<Parameter*> dst, bad;
  b.CollectParameters(dst);
  c.CollectParameters(bad);
  const auto doc = TensorsToJson(src);
  TensorsFromJson(doc, dst);
  EXPECT_EQ(a.weight().value, b.weight().value);
  EXPECT_EQ(a.bias().value, b.bias().value);
  EXPECT_THROW(TensorsFromJson(doc, bad), std::exception);
}

}  // namespace
}  // namespace hestia::nn
