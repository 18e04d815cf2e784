#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "arnet/error.hpp"
#include "arnet/gradcheck.hpp"
#include "arnet/graph.hpp"
#include "arnet/ops.hpp"
#include "arnet/optim.hpp"
#include "arnet/params.hpp"
#include "arnet/rng.hpp"

using namespace arnet;

namespace {

Tensor seq(std::vector<double> v, std::size_t c = 1) {
  const std::size_t t = v.size() / c;
  return Tensor({t, c}, std::move(v));
}

std::vector<double> values(Graph& g, Var v) { return g.value(v).values(); }

Tensor random_tensor(Rng& rng, Shape s, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(s));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Direct definition of the strided, dilated cross-correlation.
std::vector<double> naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride,
                               std::size_t dil) {
  const std::size_t t = x.dim(0), c_in = x.dim(1), c_out = w.dim(0), k = w.dim(2);
  const std::size_t t_out = (t - dil * (k - 1) - 1) / stride + 1;
  std::vector<double> out(t_out * c_out);
  for (std::size_t i = 0; i < t_out; ++i)
    for (std::size_t o = 0; o < c_out; ++o) {
      double s = b[o];
      for (std::size_t c = 0; c < c_in; ++c)
        for (std::size_t j = 0; j < k; ++j) s += x.at(i * stride + j * dil, c) * w.at(o, c, j);
      out[i * c_out + o] = s;
    }
  return out;
}

}  // namespace

TEST_CASE("tensor invariants") {
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.at(1, 2) == 1.5);
  CHECK_FALSE(t.has_grad());
  t.grad()[0] = 2.0;
  CHECK(t.grad().size() == t.size());
  t.zero_grad();
  CHECK(t.grad()[0] == 0.0);
  CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK(t.reshaped({3, 2}).dim(0) == 3);
  CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
  t[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("rng is reproducible and maps draws portably") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(a.draws() == 100);
  std::mt19937_64 ref(7);
  Rng c(7);
  const double u = c.uniform();
  CHECK(u == static_cast<double>(ref() >> 11) * 0x1.0p-53);
  Rng d(9);
  for (int i = 0; i < 1000; ++i) {
    const auto v = d.uniform_int(-2, 3);
    CHECK(v >= -2);
    CHECK(v <= 3);
  }
  CHECK(mix_seed(1, 2) != mix_seed(1, 3));
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
}

TEST_CASE("conv1d examples") {
  Graph g;
  Var y = ops::conv1d(g, g.constant(seq({1, 2, 3, 4, 5, 6})), g.constant(Tensor({1, 1, 3}, 1.0)),
                      g.constant(Tensor({1})), 3);
  CHECK(values(g, y) == std::vector<double>{6, 15});

  Var id = ops::conv1d(g, g.constant(seq({0.5, -2, 7})), g.constant(Tensor({1, 1, 1}, 1.0)), g.constant(Tensor({1})));
  CHECK(values(g, id) == std::vector<double>{0.5, -2, 7});

  Var z = ops::conv1d(g, g.constant(Tensor({10, 2})), g.constant(Tensor({3, 2, 4}, 0.3)), g.constant(Tensor({3})), 2);
  CHECK(g.value(z).shape() == Shape{4, 3});
  for (double v : g.value(z).data()) CHECK(v == 0.0);
}

TEST_CASE("conv1d rejects bad shapes with both shapes in the message") {
  Graph g;
  try {
    ops::conv1d(g, g.constant(Tensor({5, 2})), g.constant(Tensor({1, 3, 3})), g.constant(Tensor({1})));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[1 x 3 x 3]") != std::string::npos);
    CHECK(msg.find("[5 x 2]") != std::string::npos);
  }
  CHECK_THROWS_AS(ops::conv1d(g, g.constant(Tensor({2, 1})), g.constant(Tensor({1, 1, 3})), g.constant(Tensor({1}))),
                  ShapeError);
}

TEST_CASE("conv1d matches the naive loop over random shapes") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const std::size_t stride = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const std::size_t dil = static_cast<std::size_t>(rng.uniform_int(1, 3));
    const std::size_t c_in = static_cast<std::size_t>(rng.uniform_int(1, 3));
    const std::size_t c_out = static_cast<std::size_t>(rng.uniform_int(1, 3));
    const std::size_t t = dil * (k - 1) + 1 + static_cast<std::size_t>(rng.uniform_int(0, 12));
    const Tensor x = random_tensor(rng, {t, c_in});
    const Tensor w = random_tensor(rng, {c_out, c_in, k});
    const Tensor b = random_tensor(rng, {c_out});
    Graph g;
    Var y = ops::conv1d(g, g.constant(x), g.constant(w), g.constant(b), stride, dil);
    const auto expect = naive_conv(x, w, b, stride, dil);
    REQUIRE(g.value(y).size() == expect.size());
    CHECK(g.value(y).dim(0) == (t - dil * (k - 1) - 1) / stride + 1);
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(g.value(y)[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
}

TEST_CASE("batched conv1d equals per-utterance conv1d") {
  Rng rng(3);
  const Tensor x = random_tensor(rng, {3, 9, 2});
  const Tensor w = random_tensor(rng, {4, 2, 3});
  const Tensor b = random_tensor(rng, {4});
  Graph g;
  const Tensor& y = g.value(ops::conv1d(g, g.constant(x), g.constant(w), g.constant(b), 2));
  for (std::size_t u = 0; u < 3; ++u) {
    Tensor xu({9, 2});
    for (std::size_t i = 0; i < 18; ++i) xu[i] = x[u * 18 + i];
    const auto ref = naive_conv(xu, w, b, 2, 1);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y[u * ref.size() + i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("maxpool1d examples and bounds") {
  Graph g;
  CHECK(values(g, ops::maxpool1d(g, g.constant(seq({3, 1, 4, 1, 5, 9})), 3, 3)) == std::vector<double>{4, 9});
  CHECK(values(g, ops::maxpool1d(g, g.constant(seq({2, -1, 5})), 1, 1)) == std::vector<double>{2, -1, 5});
  for (double v : values(g, ops::maxpool1d(g, g.constant(Tensor({7, 2}, 1.25)), 2, 2))) CHECK(v == 1.25);
  CHECK_THROWS_AS(ops::maxpool1d(g, g.constant(seq({1, 2})), 3, 1), ShapeError);

  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const std::size_t s = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const std::size_t t = k + static_cast<std::size_t>(rng.uniform_int(0, 10));
    const Tensor x = random_tensor(rng, {t, 2});
    Graph h;
    const Tensor& y = h.value(ops::maxpool1d(h, h.constant(x), k, s));
    CHECK(y.dim(0) == (t - k) / s + 1);
    for (std::size_t c = 0; c < 2; ++c) {
      double lo = x.at(0, c), hi = x.at(0, c);
      for (std::size_t i = 0; i < t; ++i) {
        lo = std::min(lo, x.at(i, c));
        hi = std::max(hi, x.at(i, c));
      }
      for (std::size_t i = 0; i < y.dim(0); ++i) {
        double m = x.at(i * s, c);
        for (std::size_t j = 1; j < k; ++j) m = std::max(m, x.at(i * s + j, c));
        CHECK(y.at(i, c) == m);
        CHECK(y.at(i, c) <= hi);
        CHECK(y.at(i, c) >= lo);
      }
    }
  }
}

TEST_CASE("maxpool1d routes gradient to the earliest argmax") {
  Graph g;
  Var x = g.variable(seq({2, 5, 5, 1}));
  g.backward(ops::sum(g, ops::maxpool1d(g, x, 4, 4)));
  CHECK(std::vector<double>(g.grad(x).begin(), g.grad(x).end()) == std::vector<double>{0, 1, 0, 0});
}

TEST_CASE("batchnorm train normalizes and updates running statistics") {
  Rng rng(8);
  const Tensor x = random_tensor(rng, {16, 3}, -4.0, 9.0);
  Tensor mean({3}), var({3}, 1.0);
  Graph g;
  Var y = ops::batchnorm(g, g.constant(x), g.constant(Tensor({3}, 1.0)), g.constant(Tensor({3})), {&mean, &var},
                         ops::BnMode::train);
  const Tensor& out = g.value(y);
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0, v = 0, xm = 0, xv = 0;
    for (std::size_t t = 0; t < 16; ++t) {
      m += out.at(t, c);
      xm += x.at(t, c);
    }
    m /= 16;
    xm /= 16;
    for (std::size_t t = 0; t < 16; ++t) {
      v += (out.at(t, c) - m) * (out.at(t, c) - m);
      xv += (x.at(t, c) - xm) * (x.at(t, c) - xm);
    }
    v /= 16;
    xv /= 16;
    CHECK(std::abs(m) < 1e-9);
    // Population variance with eps inside the root: xv / (xv + eps).
    CHECK(std::abs(v - 1.0) < 1e-6);
    CHECK(v == doctest::Approx(xv / (xv + ops::kBnEpsilon)).epsilon(1e-12));
    CHECK(mean[c] == doctest::Approx(0.1 * xm).epsilon(1e-12));
    CHECK(var[c] == doctest::Approx(0.9 + 0.1 * xv).epsilon(1e-12));
  }
}

TEST_CASE("batchnorm trivial cases") {
  Graph g;
  Tensor mean({2}), var({2}, 1.0);
  Tensor x({5, 2});
  for (std::size_t t = 0; t < 5; ++t) {
    x.at(t, 0) = 3.0;
    x.at(t, 1) = -7.0;
  }
  for (double v : values(g, ops::batchnorm(g, g.constant(x), g.constant(Tensor({2}, 1.0)), g.constant(Tensor({2})),
                                           {&mean, &var}, ops::BnMode::train)))
    CHECK(v == 0.0);

  const Tensor xi = seq({0.5, -1.5, 2.0, 4.0}, 2);
  const auto y = values(g, ops::batchnorm_infer(g, g.constant(xi), g.constant(Tensor({2}, 1.0)), g.constant(Tensor({2})),
                                                Tensor({2}), Tensor({2}, 1.0)));
  for (std::size_t i = 0; i < 4; ++i) CHECK(y[i] == doctest::Approx(xi[i] / std::sqrt(1.0 + ops::kBnEpsilon)).epsilon(1e-15));

  CHECK_THROWS_AS(ops::batchnorm(g, g.constant(Tensor({5, 3})), g.constant(Tensor({2}, 1.0)), g.constant(Tensor({2})),
                                 {&mean, &var}, ops::BnMode::train),
                  ShapeError);
  CHECK_THROWS_AS(ops::batchnorm(g, g.constant(Tensor({1, 2})), g.constant(Tensor({2}, 1.0)), g.constant(Tensor({2})),
                                 {&mean, &var}, ops::BnMode::train),
                  ShapeError);
}

TEST_CASE("batchnorm statistics span the batch or each utterance") {
  Rng rng(4);
  const Tensor x = random_tensor(rng, {2, 6, 1});
  Graph g;
  Tensor m1({1}), v1({1}, 1.0), m2({1}), v2({1}, 1.0);
  const Tensor& per_utt = g.value(ops::batchnorm(g, g.constant(x), g.constant(Tensor({1}, 1.0)), g.constant(Tensor({1})),
                                                 {&m1, &v1}, ops::BnMode::train, ops::BnStats::utterance));
  for (std::size_t u = 0; u < 2; ++u) {
    double m = 0;
    for (std::size_t t = 0; t < 6; ++t) m += per_utt[u * 6 + t];
    CHECK(std::abs(m / 6) < 1e-12);
  }
  const Tensor& batch = g.value(ops::batchnorm(g, g.constant(x), g.constant(Tensor({1}, 1.0)), g.constant(Tensor({1})),
                                               {&m2, &v2}, ops::BnMode::train, ops::BnStats::batch));
  double m = 0;
  for (double v : batch.data()) m += v;
  CHECK(std::abs(m / 12) < 1e-12);
}

TEST_CASE("leaky_relu examples") {
  Graph g;
  CHECK(values(g, ops::leaky_relu(g, g.constant(Tensor({3}, std::vector<double>{5.0, -1.0, 0.0})))) ==
        std::vector<double>{5.0, -0.01, 0.0});
}

TEST_CASE("gru examples") {
  Graph g;
  const std::size_t h = 3, c = 2;
  Var zero_out = ops::gru(g, g.constant(Tensor({4, c})),
                          {g.constant(Tensor({3 * h, c}, 0.7)), g.constant(Tensor({3 * h, h}, -0.4)),
                           g.constant(Tensor({3 * h})), g.constant(Tensor({3 * h}))});
  CHECK(g.value(zero_out).shape() == Shape{h});
  for (double v : g.value(zero_out).data()) CHECK(v == 0.0);

  // Scalar T=1 case evaluated by hand from the gate equations.
  const double x = 0.8, wir = 0.3, wiz = -0.6, win = 1.1, bir = 0.1, biz = 0.2, bin = -0.3, bhr = 0.05, bhz = -0.1,
               bhn = 0.4;
  Var y = ops::gru(g, g.constant(Tensor({1, 1}, {x})),
                   {g.constant(Tensor({3, 1}, {wir, wiz, win})), g.constant(Tensor({3, 1}, {0.9, -0.2, 0.5})),
                    g.constant(Tensor({3}, {bir, biz, bin})), g.constant(Tensor({3}, {bhr, bhz, bhn}))});
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double r = sig(wir * x + bir + bhr);
  const double z = sig(wiz * x + biz + bhz);
  const double n = std::tanh(win * x + bin + r * bhn);
  CHECK(std::abs(g.value(y)[0] - (1.0 - z) * n) < 1e-12);

  // A saturated update gate keeps the zero initial state through any input.
  Rng rng(2);
  Tensor b_ih({3 * h});
  for (std::size_t i = h; i < 2 * h; ++i) b_ih[i] = 50.0;
  Var frozen = ops::gru(g, g.constant(random_tensor(rng, {6, c})),
                        {g.constant(random_tensor(rng, {3 * h, c})), g.constant(random_tensor(rng, {3 * h, h})),
                         g.constant(b_ih), g.constant(Tensor({3 * h}))});
  for (double v : g.value(frozen).data()) CHECK(std::abs(v) < 1e-20);

  CHECK_THROWS_AS(ops::gru(g, g.constant(Tensor({2, c})),
                           {g.constant(Tensor({3 * h, c + 1})), g.constant(Tensor({3 * h, h})),
                            g.constant(Tensor({3 * h})), g.constant(Tensor({3 * h}))}),
                  ShapeError);
}

TEST_CASE("linear examples") {
  Graph g;
  CHECK(values(g, ops::linear(g, g.constant(Tensor({2}, {1, 1})), g.constant(Tensor({2, 2}, {1, 2, 3, 4})),
                              g.constant(Tensor({2})))) == std::vector<double>{3, 7});
  CHECK(values(g, ops::linear(g, g.constant(Tensor({2})), g.constant(Tensor({2, 2}, {1, 2, 3, 4})),
                              g.constant(Tensor({2}, {0.5, -1})))) == std::vector<double>{0.5, -1});
  CHECK(values(g, ops::linear(g, g.constant(Tensor({2}, {4, -2})), g.constant(Tensor({2, 2}, {1, 0, 0, 1})),
                              g.constant(Tensor({2})))) == std::vector<double>{4, -2});
  CHECK_THROWS_AS(ops::linear(g, g.constant(Tensor({3})), g.constant(Tensor({2, 2})), g.constant(Tensor({2}))),
                  ShapeError);
}

TEST_CASE("stats_pooling examples") {
  Graph g;
  const auto s = values(g, ops::stats_pooling(g, g.constant(seq({1, 3}))));
  CHECK(s[0] == 2.0);
  CHECK(s[1] == doctest::Approx(std::sqrt(1.0 + 1e-5)).epsilon(1e-15));
  const auto c = values(g, ops::stats_pooling(g, g.constant(Tensor({4, 2}, 0.25))));
  CHECK(c == std::vector<double>{0.25, 0.25, std::sqrt(1e-5), std::sqrt(1e-5)});
  const auto one = values(g, ops::stats_pooling(g, g.constant(seq({-3, 8}, 2))));
  CHECK(one == std::vector<double>{-3, 8, std::sqrt(1e-5), std::sqrt(1e-5)});
}

TEST_CASE("softmax cross-entropy examples") {
  Graph g;
  const int zero[] = {0}, one[] = {1};
  CHECK(g.value(ops::softmax_cross_entropy(g, g.constant(Tensor({2})), zero))[0] == doctest::Approx(std::log(2.0)));
  CHECK(g.value(ops::softmax_cross_entropy(g, g.constant(Tensor({2})), one))[0] == doctest::Approx(std::log(2.0)));
  CHECK(g.value(ops::softmax_cross_entropy(g, g.constant(Tensor({2}, {100, -100})), zero))[0] < 1e-8);
  CHECK(g.value(ops::softmax_cross_entropy(g, g.constant(Tensor({2}, {1, 0})), one))[0] ==
        doctest::Approx(1.0 + std::log(1.0 + std::exp(-1.0))).epsilon(1e-14));
  const int bad[] = {2};
  CHECK_THROWS_AS(ops::softmax_cross_entropy(g, g.constant(Tensor({2})), bad), ShapeError);

  Graph h;
  Var z = h.variable(Tensor({2}, {0.3, -1.2}));
  h.backward(ops::softmax_cross_entropy(h, z, one));
  const double p0 = std::exp(0.3) / (std::exp(0.3) + std::exp(-1.2));
  CHECK(h.grad(z)[0] == doctest::Approx(p0).epsilon(1e-14));
  CHECK(h.grad(z)[1] == doctest::Approx(1.0 - p0 - 1.0).epsilon(1e-14));

  // Weighted mean divides by the weight sum.
  Graph w;
  const int labels[] = {0, 1};
  const double weights[] = {3.0, 1.0};
  const double l0 = std::log(1.0 + std::exp(-2.0)), l1 = std::log(1.0 + std::exp(1.0));
  CHECK(w.value(ops::softmax_cross_entropy(w, w.constant(Tensor({2, 2}, {2, 0, 1, 0})), labels, weights))[0] ==
        doctest::Approx((3.0 * l0 + l1) / 4.0).epsilon(1e-14));
}

TEST_CASE("backward basics") {
  Graph g;
  Var x = g.variable(Tensor({2, 3}, 0.4));
  Var unused = g.variable(Tensor({2}, 1.0));
  g.backward(ops::sum(g, x));
  for (double v : g.grad(x)) CHECK(v == 1.0);
  for (double v : g.grad(unused)) CHECK(v == 0.0);
  CHECK_THROWS_AS(g.backward(ops::sum(g, x)), std::logic_error);

  Graph empty;
  CHECK_THROWS_AS(empty.backward(Var{}), std::logic_error);

  Graph nonscalar;
  Var v = nonscalar.variable(Tensor({2}));
  CHECK_THROWS(nonscalar.backward(v));
}

TEST_CASE("two composed linears match the single equivalent linear") {
  Rng rng(21);
  const Tensor x = random_tensor(rng, {3});
  const Tensor a = random_tensor(rng, {4, 3}), ab = random_tensor(rng, {4});
  const Tensor b = random_tensor(rng, {2, 4}), bb = random_tensor(rng, {2});
  Tensor m({2, 3}), mb({2});
  for (std::size_t i = 0; i < 2; ++i) {
    mb[i] = bb[i];
    for (std::size_t k = 0; k < 4; ++k) mb[i] += b.at(i, k) * ab[k];
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 4; ++k) m.at(i, j) += b.at(i, k) * a.at(k, j);
  }
  const Tensor coeff({2}, {0.7, -1.3});
  Graph g1;
  Var x1 = g1.variable(x);
  g1.backward(ops::weighted_sum(g1, ops::linear(g1, ops::linear(g1, x1, g1.constant(a), g1.constant(ab)), g1.constant(b),
                                                g1.constant(bb)),
                                coeff));
  Graph g2;
  Var x2 = g2.variable(x);
  g2.backward(ops::weighted_sum(g2, ops::linear(g2, x2, g2.constant(m), g2.constant(mb)), coeff));
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(g1.grad(x1)[i] - g2.grad(x2)[i]) < 1e-10);
}

TEST_CASE("parameter leaves accumulate into the store and views stay read-only") {
  ParamStore ps;
  Tensor& w = ps.add("w", Tensor({2}, {1.0, 2.0}));
  Graph g;
  Var p = g.parameter(w);
  Var v = g.view(w);
  CHECK_FALSE(g.requires_grad(v));
  g.backward(ops::sum(g, ops::concat(g, p, v)));
  CHECK(w.grad()[0] == 1.0);
  CHECK(w.grad()[1] == 1.0);
  CHECK_THROWS_AS(ps.add("w", Tensor({1})), ConfigError);
}

TEST_CASE("ops are deterministic") {
  Rng rng(99);
  const Tensor x = random_tensor(rng, {12, 3});
  const Tensor w = random_tensor(rng, {9, 3}), u = random_tensor(rng, {9, 3}), b1 = random_tensor(rng, {9}),
               b2 = random_tensor(rng, {9});
  auto run = [&] {
    Graph g;
    Var xv = g.variable(x);
    Var y = ops::gru(g, ops::maxpool1d(g, xv, 2, 2), {g.constant(w), g.constant(u), g.constant(b1), g.constant(b2)});
    g.backward(ops::sum(g, y));
    return std::make_pair(g.value(y).values(), std::vector<double>(g.grad(xv).begin(), g.grad(xv).end()));
  };
  CHECK(run() == run());
}

TEST_CASE("adam first step, zero gradient and determinism") {
  ParamStore ps;
  ps.add("a", Tensor({3}, {1.0, -2.0, 0.5}));
  ps.add("stats", Tensor({1}, 5.0), false);
  ps.get("a").grad()[0] = 0.3;
  ps.get("a").grad()[1] = -40.0;
  ps.get("a").grad()[2] = 0.0;
  ps.get("stats").grad()[0] = 1.0;
  OptimizerState st;
  adam_step(ps, st);
  CHECK(st.step == 1);
  CHECK(ps.get("a")[0] == doctest::Approx(1.0 - 0.001).epsilon(1e-7));
  CHECK(ps.get("a")[1] == doctest::Approx(-2.0 + 0.001).epsilon(1e-7));
  CHECK(ps.get("a")[2] == 0.5);
  CHECK(ps.get("stats")[0] == 5.0);
  CHECK(st.first_moment.at("a").size() == 3);
  adam_step(ps, st);
  CHECK(st.step == 2);

  auto run = [] {
    ParamStore p;
    p.add("x", Tensor({2}, {0.1, 0.2}));
    p.get("x").grad()[0] = 0.5;
    p.get("x").grad()[1] = -0.25;
    OptimizerState s;
    adam_step(p, s);
    adam_step(p, s);
    return p.get("x").values();
  };
  CHECK(run() == run());
}

TEST_CASE("adam rejects non-finite gradients naming the parameter") {
  ParamStore ps;
  ps.add("good", Tensor({1}, 1.0)).grad()[0] = 1.0;
  ps.add("bad.weight", Tensor({2}, 1.0)).grad()[1] = std::numeric_limits<double>::infinity();
  OptimizerState st;
  try {
    adam_step(ps, st);
    FAIL("expected domain_error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("bad.weight") != std::string::npos);
  }
  CHECK(ps.get("good")[0] == 1.0);
  CHECK(st.step == 0);
}

TEST_CASE("frozen tensors are untouched by adam") {
  ParamStore ps;
  ps.add("aux.w", Tensor({2}, 0.0)).grad()[0] = 1.0;
  ps.add("main.w", Tensor({2}, 0.0)).grad()[0] = 1.0;
  ps.freeze_prefix("aux.");
  OptimizerState st;
  adam_step(ps, st);
  CHECK(ps.get("aux.w")[0] == 0.0);
  CHECK(ps.get("main.w")[0] != 0.0);
}

TEST_CASE("finite-difference suite passes on every op") {
  const auto report = gradcheck::run();
  for (const auto& r : report.ops) {
    INFO(r.op);
    CHECK(r.instances >= (r.op == "arnet_miniature" ? 2u : 100u));
    CHECK(r.max_rel_error < 1e-4);
  }
  CHECK(report.passed());
}

TEST_CASE("fault injection is caught and named") {
  gradcheck::Options opts;
  opts.instances = 5;
  opts.inject_fault = "linear";
  const auto report = gradcheck::run(opts);
  CHECK_FALSE(report.passed());
  for (const auto& r : report.ops) CHECK(r.passed == (r.op != "linear"));
  opts.inject_fault = "no_such_op";
  CHECK_THROWS_AS(gradcheck::run(opts), ConfigError);
}
