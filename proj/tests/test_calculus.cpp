#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace relucalc;
using testutil::hat;
using testutil::ref_eval;

namespace {

std::mt19937_64& rng() {
  static std::mt19937_64 r(20240601);
  return r;
}

void expect_vec_near(const std::vector<double>& a, const std::vector<double>& b, double tol = 1e-10) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(testutil::close_rel(a[i], b[i], tol)) << a[i] << " vs " << b[i];
}

}  // namespace

TEST(Compose, HatOfHatAtQuarter) { EXPECT_EQ(evaluate(compose(hat(), hat()), 0.25), 1.0); }

TEST(Compose, IdentityOuterIsTransparent) {
  auto phi = testutil::random_net(rng(), 1, 1, 3);
  auto c = compose(testutil::identity1(), phi);
  for (int i = 0; i < 100; ++i) {
    double x = -3 + 6.0 * i / 99;
    EXPECT_TRUE(testutil::close_rel(evaluate(c, x), evaluate(phi, x), 1e-12));
  }
}

TEST(Compose, DepthsAdd) {
  auto a = testutil::random_net(rng(), 2, 3, 2);
  auto b = testutil::random_net(rng(), 3, 1, 3);
  EXPECT_EQ(compose(b, a).depth(), 5u);
}

TEST(Compose, BoundsHold) {
  for (int t = 0; t < 40; ++t) {
    std::size_t d1 = 1 + t % 3, d2 = 1 + t % 4, d3 = 1 + t % 2;
    auto inner = testutil::random_net(rng(), d1, d2, 1 + t % 4);
    auto outer = testutil::random_net(rng(), d2, d3, 1 + (t / 4) % 4);
    auto c = compose(outer, inner);
    auto m1 = metrics(outer), m2 = metrics(inner), m = metrics(c);
    EXPECT_EQ(m.depth, m1.depth + m2.depth);
    EXPECT_LE(m.connectivity, 2 * m1.connectivity + 2 * m2.connectivity);
    EXPECT_LE(m.width, std::max({2 * d2, m1.width, m2.width}));
    EXPECT_EQ(m.magnitude, std::max(m1.magnitude, m2.magnitude));
    auto x = testutil::random_point(rng(), d1);
    expect_vec_near(evaluate(c, x), ref_eval(outer, ref_eval(inner, x)));
  }
}

TEST(Compose, DimensionMismatchThrows) {
  EXPECT_THROW(compose(hat(), testutil::random_net(rng(), 1, 2, 2)), ShapeError);
}

TEST(ExtendDepth, HatToFive) {
  auto e = extend_depth(hat(), 5);
  EXPECT_EQ(evaluate(e, 0.25), 0.5);
  EXPECT_EQ(e.depth(), 5u);
  EXPECT_LE(metrics(e).connectivity, 17u);
}

TEST(ExtendDepth, RejectsSmallK) {
  EXPECT_THROW(extend_depth(hat(), 2), ArgumentError);
  EXPECT_THROW(extend_depth(hat(), 1), ArgumentError);
}

TEST(ExtendDepth, BoundsHold) {
  for (int t = 0; t < 40; ++t) {
    std::size_t d = 1 + t % 3, dp = 1 + t % 4, L = 1 + t % 4, K = L + 1 + t % 5;
    auto net = testutil::random_net(rng(), d, dp, L);
    auto e = extend_depth(net, K);
    auto m = metrics(net), me = metrics(e);
    EXPECT_EQ(me.depth, K);
    EXPECT_LE(me.connectivity, m.connectivity + dp * m.width + 2 * dp * (K - L));
    EXPECT_LE(me.width, std::max(2 * dp, m.width));
    EXPECT_LE(me.magnitude, std::max(1.0, m.magnitude));
    auto x = testutil::random_point(rng(), d);
    expect_vec_near(evaluate(e, x), ref_eval(net, x));
  }
}

TEST(Parallelize, PairOfHats) {
  auto p = parallelize({hat(), hat()});
  std::vector<double> x{0.25, 0.75};
  auto y = evaluate(p, x);
  EXPECT_EQ(y, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(metrics(p).connectivity, 16u);
}

TEST(Parallelize, SingleIsIdentical) { EXPECT_TRUE(parallelize({hat()}) == hat()); }

TEST(Parallelize, DepthMismatchThrows) {
  EXPECT_THROW(parallelize({hat(), extend_depth(hat(), 3)}), ShapeError);
}

TEST(Parallelize, SumsAndConcatenates) {
  for (int t = 0; t < 30; ++t) {
    std::size_t L = 1 + t % 4, n = 1 + t % 3;
    std::vector<ReluNetwork> nets;
    std::vector<double> x;
    std::vector<double> want;
    std::size_t M = 0, W = 0;
    for (std::size_t k = 0; k < n; ++k) {
      nets.push_back(testutil::random_net(rng(), 1 + k, 2, L));
      auto xi = testutil::random_point(rng(), 1 + k);
      auto yi = ref_eval(nets.back(), xi);
      x.insert(x.end(), xi.begin(), xi.end());
      want.insert(want.end(), yi.begin(), yi.end());
      M += metrics(nets.back()).connectivity;
      W += metrics(nets.back()).width;
    }
    auto p = parallelize(nets);
    EXPECT_EQ(metrics(p).connectivity, M);
    EXPECT_LE(metrics(p).width, W);
    expect_vec_near(evaluate(p, x), want);
  }
}

TEST(LinearCombination, SharedCancellation) {
  auto z = linear_combination_shared({hat(), hat()}, {1.0, -1.0});
  for (int i = 0; i <= 100; ++i) EXPECT_EQ(evaluate(z, i / 100.0), 0.0);
}

TEST(LinearCombination, SharedIdentityMinusQuarterHat) {
  auto n = linear_combination_shared({testutil::identity1(), hat()}, {1.0, -0.25});
  EXPECT_EQ(evaluate(n, 0.5), 0.25);
}

TEST(LinearCombination, SharedParallelization) {
  auto n = parallelize_shared({hat(), testutil::identity1()});
  std::vector<double> x{0.25};
  EXPECT_EQ(evaluate(n, x), (std::vector<double>{0.5, 0.25}));
}

TEST(LinearCombination, CoefficientCountMismatch) {
  EXPECT_THROW(linear_combination({hat(), hat()}, {1.0}), ArgumentError);
  EXPECT_THROW(linear_combination_shared({hat()}, {1.0, 2.0}), ArgumentError);
}

TEST(LinearCombination, DimensionMismatch) {
  EXPECT_THROW(linear_combination({hat(), testutil::random_net(rng(), 1, 2, 2)}, {1, 1}), ShapeError);
  EXPECT_THROW(parallelize_shared({hat(), testutil::random_net(rng(), 2, 1, 2)}), ShapeError);
}

TEST(LinearCombination, RandomAgreement) {
  for (int t = 0; t < 30; ++t) {
    std::size_t L = 1 + t % 4, n = 1 + t % 3, dout = 1 + t % 2, din = 1 + t % 3;
    std::vector<ReluNetwork> nets;
    std::vector<double> coeffs;
    std::uniform_real_distribution<double> u(-2, 2);
    for (std::size_t k = 0; k < n; ++k) {
      nets.push_back(testutil::random_net(rng(), din, dout, L));
      coeffs.push_back(u(rng()));
    }
    auto x = testutil::random_point(rng(), din);
    // shared
    std::vector<double> want(dout, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      auto y = ref_eval(nets[k], x);
      for (std::size_t i = 0; i < dout; ++i) want[i] += coeffs[k] * y[i];
    }
    auto s = linear_combination_shared(nets, coeffs);
    expect_vec_near(evaluate(s, x), want, 1e-9);
    auto ps = parallelize_shared(nets);
    auto py = evaluate(ps, x);
    for (std::size_t k = 0; k < n; ++k) {
      auto y = ref_eval(nets[k], x);
      for (std::size_t i = 0; i < dout; ++i) EXPECT_TRUE(testutil::close_rel(py[k * dout + i], y[i], 1e-10));
    }
    // distinct inputs
    std::vector<double> xs;
    std::fill(want.begin(), want.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      auto xi = testutil::random_point(rng(), din);
      xs.insert(xs.end(), xi.begin(), xi.end());
      auto y = ref_eval(nets[k], xi);
      for (std::size_t i = 0; i < dout; ++i) want[i] += coeffs[k] * y[i];
    }
    auto lc = linear_combination(nets, coeffs);
    expect_vec_near(evaluate(lc, xs), want, 1e-9);
    // Hidden weights are copied, output weights scaled by a_k; only the
    // combined bias can exceed max_k |a_k| B_k.
    double cap = 0;
    for (std::size_t k = 0; k < n; ++k) cap = std::max(cap, std::max(1.0, std::fabs(coeffs[k])) * metrics(nets[k]).magnitude);
    for (double bb : lc.layers().back().b) cap = std::max(cap, std::fabs(bb));
    EXPECT_LE(metrics(lc).magnitude, cap);
  }
}

TEST(ScalarMult, FiveTimesOnePointTwo) {
  EXPECT_EQ(evaluate(scalar_mult_network(5.0), 1.2), 6.0);
}

TEST(ScalarMult, SmallFactorIsOneLayer) { EXPECT_EQ(scalar_mult_network(0.5).depth(), 1u); }

TEST(ScalarMult, EightIsShallowAndBounded) {
  auto n = scalar_mult_network(8.0);
  EXPECT_LE(n.depth(), 7u);
  EXPECT_LE(metrics(n).magnitude, 1.0);
}

TEST(ScalarMult, ExactOnRandomInputs) {
  std::uniform_real_distribution<double> ua(-1e6, 1e6), ux(-1e3, 1e3);
  for (int t = 0; t < 200; ++t) {
    double a = ua(rng());
    std::size_t d = 1 + t % 3;
    auto n = scalar_mult_network(a, d);
    auto m = metrics(n);
    EXPECT_LE(m.magnitude, 1.0);
    EXPECT_LE(m.width, 3 * d);
    if (std::fabs(a) > 1) EXPECT_LE(m.depth, std::floor(std::log2(std::fabs(a))) + 4);
    std::vector<double> x(d);
    for (auto& v : x) v = ux(rng());
    auto y = evaluate(n, x);
    for (std::size_t i = 0; i < d; ++i) EXPECT_EQ(y[i], a * x[i]);
  }
}

TEST(AffineNet, TwoXPlusThree) { EXPECT_EQ(evaluate(affine_network(Matrix(1, 1, {2.0}), {3.0}), 1.0), 5.0); }

TEST(AffineNet, DifferenceOfInputs) {
  std::vector<double> x{4.0, 1.0};
  EXPECT_EQ(evaluate(affine_network(Matrix(1, 2, {1.0, -1.0}), {0.0}), x)[0], 3.0);
}

TEST(AffineNet, WeightsBoundedAndShallow) {
  std::uniform_real_distribution<double> u(-50, 50);
  for (int t = 0; t < 50; ++t) {
    std::size_t r = 1 + t % 3, c = 1 + t % 4;
    Matrix A(r, c);
    std::vector<double> b(r);
    double a = 1;
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) a = std::max(a, std::fabs(A(i, j) = u(rng())));
      a = std::max(a, std::fabs(b[i] = u(rng())));
    }
    auto n = affine_network(A, b);
    EXPECT_LE(metrics(n).magnitude, 1.0);
    EXPECT_LE(n.depth(), std::floor(std::log2(a)) + 5);
    auto x = testutil::random_point(rng(), c);
    std::vector<double> want(r);
    for (std::size_t i = 0; i < r; ++i) {
      want[i] = b[i];
      for (std::size_t j = 0; j < c; ++j) want[i] += A(i, j) * x[j];
    }
    auto y = evaluate(n, x);
    for (std::size_t i = 0; i < r; ++i) EXPECT_NEAR(y[i], want[i], 1e-12 * std::max(1.0, a * 10));
  }
}

TEST(ReduceWeights, UnitMagnitudeUnchanged) {
  auto n = affine_layer_network(Matrix(1, 1, {1.0}), {-1.0});
  EXPECT_TRUE(reduce_weights(n) == n);
}

TEST(ReduceWeights, TenX) {
  auto n = affine_layer_network(Matrix(1, 1, {10.0}), {0.0});
  auto r = reduce_weights(n);
  EXPECT_LE(metrics(r).magnitude, 1.0);
  EXPECT_NEAR(evaluate(r, 0.7), 7.0, 1e-12);
  EXPECT_EQ(evaluate(r, 0.7), evaluate(n, 0.7));
}

TEST(ReduceWeights, DepthBoundForTwoLayers) {
  std::vector<AffineLayer> L;
  L.emplace_back(Matrix(2, 1, {10.0, -3.0}), std::vector<double>{1.0, 2.0});
  L.emplace_back(Matrix(1, 2, {1.0, 1.0}), std::vector<double>{0.0});
  auto r = reduce_weights(ReluNetwork(std::move(L)));
  EXPECT_LE(r.depth(), 18u);
}

TEST(ReduceWeights, RandomBounds) {
  for (int t = 0; t < 40; ++t) {
    std::size_t dout = 1 + t % 3, L = 1 + t % 4;
    auto net = testutil::random_net(rng(), 2, dout, L, 6.0);
    auto r = reduce_weights(net);
    auto m = metrics(net), mr = metrics(r);
    EXPECT_LE(mr.magnitude, 1.0);
    EXPECT_LE(mr.depth, (std::ceil(std::log2(m.magnitude)) + 5) * L);
    EXPECT_LE(mr.width, std::max(3 * dout, m.width));
    auto x = testutil::random_point(rng(), 2);
    expect_vec_near(evaluate(r, x), ref_eval(net, x));
  }
}

TEST(SumFiniteWidth, FourHats) {
  auto s = sum_finite_width(std::vector<ReluNetwork>(4, hat()));
  EXPECT_EQ(evaluate(s, 0.25), 2.0);
}

TEST(SumFiniteWidth, WidthIndependentOfCount) {
  for (int n : {2, 4, 8}) EXPECT_EQ(metrics(sum_finite_width(std::vector<ReluNetwork>(n, hat()))).width, 7u) << n;
}

TEST(SumFiniteWidth, SingleIsIdentical) { EXPECT_TRUE(sum_finite_width({hat()}) == hat()); }

TEST(SumFiniteWidth, DimensionMismatch) {
  EXPECT_THROW(sum_finite_width({hat(), testutil::random_net(rng(), 2, 1, 2)}), ShapeError);
}

TEST(SumFiniteWidth, RandomBounds) {
  for (int t = 0; t < 30; ++t) {
    std::size_t d = 1 + t % 3, dp = 1 + t % 2, n = 2 + t % 4;
    std::vector<ReluNetwork> nets;
    std::size_t Ls = 0, Wmax = 0;
    for (std::size_t k = 0; k < n; ++k) {
      nets.push_back(testutil::random_net(rng(), d, dp, 1 + (t + k) % 4));
      Ls += nets.back().depth();
      Wmax = std::max(Wmax, metrics(nets.back()).width);
    }
    auto s = sum_finite_width(nets);
    EXPECT_EQ(s.depth(), Ls);
    EXPECT_LE(metrics(s).width, 2 * d + 2 * dp + std::max(2 * d, Wmax));
    auto x = testutil::random_point(rng(), d);
    std::vector<double> want(dp, 0.0);
    for (auto& net : nets) {
      auto y = ref_eval(net, x);
      for (std::size_t i = 0; i < dp; ++i) want[i] += y[i];
    }
    expect_vec_near(evaluate(s, x), want, 1e-9);
  }
}

TEST(Prune, RemovesDeadNode) {
  std::vector<AffineLayer> L;
  L.emplace_back(Matrix(3, 1, {1, 0, 1}), std::vector<double>{0, 0, -0.5});
  L.emplace_back(Matrix(1, 3, {1, 5, 0}), std::vector<double>{0});
  ReluNetwork n(std::move(L));
  auto p = prune(n);
  EXPECT_EQ(p.layer(0).out_dim(), 1u);
  for (int i = -20; i <= 20; ++i) EXPECT_EQ(evaluate(p, i / 10.0), evaluate(n, i / 10.0));
  EXPECT_TRUE(is_nondegenerate(p));
}

TEST(Prune, FoldsConstantNode) {
  std::vector<AffineLayer> L;
  L.emplace_back(Matrix(2, 1, {1, 0}), std::vector<double>{0, 3});
  L.emplace_back(Matrix(1, 2, {1, 2}), std::vector<double>{1});
  ReluNetwork n(std::move(L));
  auto p = prune(n);
  EXPECT_EQ(p.layer(0).out_dim(), 1u);
  EXPECT_EQ(p.layer(1).b[0], 7.0);
  for (int i = -20; i <= 20; ++i) EXPECT_EQ(evaluate(p, i / 10.0), evaluate(n, i / 10.0));
}

TEST(Prune, NondegenerateUnchanged) {
  EXPECT_TRUE(prune(hat()) == hat());
  EXPECT_TRUE(is_nondegenerate(hat()));
}

TEST(Prune, IdempotentOnRandomSparseNets) {
  std::bernoulli_distribution zero(0.4);
  for (int t = 0; t < 40; ++t) {
    auto net = testutil::random_net(rng(), 2, 1, 2 + t % 3);
    std::vector<AffineLayer> L;
    for (const auto& layer : net.layers()) {
      Matrix A = layer.A;
      std::vector<double> b = layer.b;
      for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j)
          if (zero(rng())) A(i, j) = 0;
      for (auto& v : b)
        if (zero(rng())) v = 0;
      L.emplace_back(A, b);
    }
    ReluNetwork sparse(std::move(L));
    auto p = prune(sparse);
    EXPECT_TRUE(prune(p) == p);
    for (int k = 0; k < 20; ++k) {
      auto x = testutil::random_point(rng(), 2);
      expect_vec_near(evaluate(p, x), ref_eval(sparse, x));
    }
  }
}
