#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "relucalc/analysis.hpp"
#include "relucalc/constructors.hpp"
#include "test_util.hpp"

using namespace relucalc;

namespace {

// g iterated s times, straight from the closed form
double sawtooth_ref(int s, double x) {
  for (int i = 0; i < s; ++i) x = testutil::hat_formula(x);
  return x;
}

}  // namespace

TEST(ExactPwl, HatBreakpoints) {
  auto p = exact_pwl(testutil::hat(), -1, 2);
  EXPECT_EQ(p.pieces(), 4u);
  auto bp = p.breakpoints();
  ASSERT_EQ(bp.size(), 3u);
  EXPECT_NEAR(bp[0], 0.0, 1e-15);
  EXPECT_NEAR(bp[1], 0.5, 1e-15);
  EXPECT_NEAR(bp[2], 1.0, 1e-15);
  EXPECT_EQ(p.left_slope(), 0.0);
  EXPECT_EQ(p.right_slope(), 0.0);
}

TEST(ExactPwl, IteratedHat) {
  EXPECT_EQ(exact_pwl(sawtooth_network(2), 0, 1).pieces(), 4u);
  auto p = exact_pwl(join(testutil::hat(), testutil::hat()), 0, 1);
  EXPECT_EQ(p.pieces(), 4u);
}

TEST(ExactPwl, AffineAndConstant) {
  auto aff = affine_layer_network(Matrix(1, 1, {3.0}), {1.0});
  EXPECT_EQ(exact_pwl(aff, -5, 5).pieces(), 1u);
  EXPECT_EQ(count_linear_regions(zero_network(1, 1), 0, 1), 1u);
  EXPECT_EQ(count_linear_regions(testutil::identity1(), -3, 3), 1u);
}

TEST(ExactPwl, DimensionChecks) {
  EXPECT_THROW(exact_pwl(zero_network(2, 1), 0, 1), ShapeError);
  EXPECT_THROW(exact_pwl(zero_network(1, 2), 0, 1), ShapeError);
  EXPECT_THROW(exact_pwl(testutil::hat(), 1, 1), ArgumentError);
}

TEST(ExactPwl, AgreesWithEvaluate) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    auto n = testutil::random_net(rng, 1, 1, 2 + t % 4);
    auto p = exact_pwl(n, -3, 3);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 10000; ++i) {
      double x = u(rng);
      EXPECT_NEAR(p(x), evaluate(n, x), 1e-9 * std::max(1.0, std::fabs(p(x))));
    }
    for (double x : p.breakpoints()) EXPECT_NEAR(p(x), evaluate(n, x), 1e-9 * std::max(1.0, std::fabs(p(x))));
    EXPECT_LE(std::log2(double(p.pieces())), log2_region_bound(n) + 1e-12);
  }
}

TEST(ExactPwl, PieceLimit) {
  EXPECT_THROW(exact_pwl(sawtooth_network(10), 0, 1, 100), PieceLimitError);
}

TEST(Regions, SawtoothCounts) {
  for (int s = 1; s <= 12; ++s) {
    auto net = sawtooth_network(s);
    auto r = region_report(net, 0, 1);
    EXPECT_EQ(r.count, std::uint64_t(1) << s) << s;
    EXPECT_TRUE(r.within_bound);
    EXPECT_NEAR(r.log2_bound, (s + 1) * std::log2(6.0), 1e-12);
    auto p = exact_pwl(net, 0, 1);
    for (int i = 0; i <= 1000; ++i) EXPECT_NEAR(p(i / 1000.0), sawtooth_ref(s, i / 1000.0), 1e-12);
  }
}

TEST(Regions, ComposedMatchesDirect) {
  auto outer = exact_pwl(sawtooth_network(3), 0, 1);
  auto inner = exact_pwl(sawtooth_network(2), 0, 1);
  EXPECT_EQ(count_composed_regions(outer, inner), 32u);
  auto st = cosine_stages(64.0, 1.0, 1e-2);
  auto in = exact_pwl(st.inner, -1, 1);
  auto out = exact_pwl(st.outer, 0, 1);
  auto direct = count_linear_regions(join(st.outer, st.inner), -1, 1);
  // sub-tolerance slivers of the outer net merge differently once rescaled
  EXPECT_NEAR(double(count_composed_regions(out, in)), double(direct), 0.01 * double(direct));
}

TEST(SupError, Examples) {
  auto n = testutil::hat();
  EXPECT_LE(sup_error(n, testutil::hat_formula, -1, 2, 1001).sup_error, 1e-12);
  EXPECT_EQ(sup_error(n, [](double) { return 0.0; }, 2, 3, 101).sup_error, 0.0);
  for (int m = 1; m <= 4; ++m) {
    auto r = sup_error(square_network_m(m), [](double x) { return x * x; }, 0, 1, 1025);
    EXPECT_NEAR(r.sup_error, std::ldexp(1.0, -2 * m - 2), 1e-12);
    EXPECT_TRUE(r.breakpoints_included);
  }
  EXPECT_THROW(sup_error(n, testutil::hat_formula, 0, 1, 1), ArgumentError);
  EXPECT_THROW(sup_error(n, testutil::hat_formula, 1, 0, 10), ArgumentError);
}

TEST(SupError, BreakpointsBeatCoarseGrid) {
  // grid of 3 points misses the peak at 1/2 of a shifted hat
  auto n = join(testutil::hat(), affine_layer_network(Matrix(1, 1, {1.0}), {0.1}));
  auto r = sup_error(n, [](double) { return 0.0; }, 0, 1, 3);
  EXPECT_NEAR(r.sup_error, 1.0, 1e-12);
  EXPECT_NEAR(r.argmax[0], 0.4, 1e-12);
}

TEST(SupError, BoxAndCsv) {
  auto net = multiply_network(1.0, 1e-2);
  auto r = sup_error_box(net, [](std::span<const double> x) { return x[0] * x[1]; }, {-1, -1}, {1, 1}, 65);
  EXPECT_LE(r.sup_error, 1e-2);
  EXPECT_GE(r.sup_error, 0.0);
  EXPECT_EQ(ErrorReport::csv_header(), "domain,grid_n,sup_error,l2_error,argmax");
  auto row = r.csv_row();
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 4);
  EXPECT_THROW(sup_error_box(net, [](std::span<const double>) { return 0.0; }, {0}, {1}, 10), ShapeError);
}

TEST(SupError, L2Trapezoid) {
  // |x| vs 0 on [-1,1]: L2 = sqrt(2/3)
  auto n = affine_layer_network(Matrix(1, 1, {1.0}), {0.0});
  auto r = sup_error(n, [](double) { return 0.0; }, 0, 1, 10001);
  EXPECT_NEAR(r.l2_error, std::sqrt(1.0 / 3), 1e-6);
}

TEST(L2Error, HaarElement) {
  for (double eps : {0.1, 0.01}) {
    auto net = haar_element_network(0, 0, eps);
    auto r = l2_error(net, haar, -1, 2, 101, {0.0, 0.5, 1.0});
    EXPECT_LE(r.l2_error, eps * (1 + 1e-12));
  }
}

TEST(Minimax, LineFit) {
  std::vector<double> x{0, 0.5, 1}, y{0, 0.25, 1};
  EXPECT_NEAR(minimax_line_error(x, y), 0.125, 1e-15);
  std::vector<double> y2{1, 2, 3};
  EXPECT_NEAR(minimax_line_error(x, y2), 0.0, 1e-15);
  // brute force check on random data
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> xs(12), ys(12);
    for (int i = 0; i < 12; ++i) xs[i] = i, ys[i] = u(rng);
    double best = 1e9;
    for (int i = 0; i < 12; ++i)
      for (int j = i + 1; j < 12; ++j) {
        double s = (ys[j] - ys[i]) / (xs[j] - xs[i]);
        double mx = -1e9, mn = 1e9;
        for (int k = 0; k < 12; ++k) mx = std::max(mx, ys[k] - s * xs[k]), mn = std::min(mn, ys[k] - s * xs[k]);
        best = std::min(best, (mx - mn) / 2);
      }
    EXPECT_NEAR(minimax_line_error(xs, ys), best, 1e-12);
  }
}

TEST(MinPieces, Examples) {
  for (double eps : {1e-1, 1e-3, 1e-6}) EXPECT_EQ(min_pieces([](double x) { return 2 * x + 1; }, 0, 1, eps, 1001), 1u);
  EXPECT_EQ(min_pieces([](double x) { return x * x; }, 0, 1, 0.5, 1001), 1u);
  // pieces of length sqrt(8 eps)
  auto n = min_pieces([](double x) { return x * x; }, 0, 1, 1e-4, 100001);
  EXPECT_NEAR(double(n), std::ceil(1 / std::sqrt(8e-4)), 2.0);
  EXPECT_THROW(min_pieces([](double x) { return x * x; }, 0, 1, 1e-6, 1001), ResolutionError);
}

TEST(MinPieces, GreedyMatchesDp) {
  // exhaustive DP on a small grid agrees with the greedy count
  const int n = 400;
  std::vector<double> xs(n), ys(n);
  for (int i = 0; i < n; ++i) xs[i] = i / double(n - 1), ys[i] = std::sin(7 * xs[i]) + xs[i] * xs[i];
  for (double eps : {0.05, 0.02}) {
    std::vector<int> best(n + 1, 1 << 20);
    best[0] = 0;
    for (int j = 1; j <= n; ++j)
      for (int i = 0; i < j; ++i)
        if (minimax_line_error(std::span(&xs[i], j - i), std::span(&ys[i], j - i)) <= eps)
          best[j] = std::min(best[j], best[i] + 1);
    auto g = min_pieces([](double x) { return std::sin(7 * x) + x * x; }, 0, 1, eps, n);
    EXPECT_EQ(int(g), best[n]) << eps;
  }
}

TEST(Frenzen, Constants) {
  EXPECT_NEAR(frenzen_constant([](double) { return 2.0; }, 0, 1), std::sqrt(2.0) / 4, 1e-12);
  EXPECT_EQ(frenzen_constant([](double) { return 0.0; }, 0, 1), 0.0);
  // midpoint rule reference, fine grid
  const double pi = std::numbers::pi;
  const int N = 4'000'000;
  long double acc = 0;
  for (int i = 0; i < N; ++i) acc += std::sqrt(std::fabs(std::cos((i + 0.5) * pi / N)));
  const double ref = double(acc * pi / N / 4);
  const double c = frenzen_constant([](double x) { return -std::cos(x); }, 0, pi);
  EXPECT_NEAR(c, ref, 1e-6 * ref);
}

TEST(Frenzen, MinPiecesConverges) {
  const double c = std::sqrt(2.0) / 4;
  for (double eps : {1e-4, 1e-5}) {
    auto n = min_pieces([](double x) { return x * x; }, 0, 1, eps, 200001);
    EXPECT_NEAR(double(n) * std::sqrt(eps), c, 0.15 * c);
  }
}

TEST(CoverPack, Examples) {
  auto c = cover_interval(0.1);
  ASSERT_EQ(c.size(), 11u);
  EXPECT_NEAR(c.front(), -1.0, 1e-15);
  EXPECT_NEAR(c.back(), 1.0, 1e-15);
  for (int i = 0; i <= 2000; ++i) {
    double x = -1 + i / 1000.0, d = 1e9;
    for (double ci : c) d = std::min(d, std::fabs(x - ci));
    EXPECT_LE(d, 0.1 + 1e-12);
  }
  auto th = pack_exp_family(0.1);
  ASSERT_EQ(th.size(), 7u);
  EXPECT_EQ(th[0], 0.0);
  for (std::size_t i = 0; i < th.size(); ++i) {
    EXPECT_LE(th[i], 1.0);
    for (std::size_t j = 0; j < th.size(); ++j) {
      double d = std::fabs(std::exp(-th[i]) - std::exp(-th[j]));
      EXPECT_NEAR(d, 0.1 * std::fabs(double(i) - double(j)), 1e-12);
    }
  }
  EXPECT_THROW(cover_interval(1.0), ArgumentError);
  EXPECT_THROW(pack_exp_family(1.5), ArgumentError);
}

TEST(CoverPack, CoversForNonIntegerReciprocal) {
  for (double eps : {0.35, 0.3, 0.07}) {
    auto c = cover_interval(eps);
    EXPECT_EQ(c.size(), std::size_t(std::floor(1 / eps)) + 1);
    EXPECT_LE(double(c.size()), 1 / eps + 1);
    for (int i = 0; i <= 2000; ++i) {
      double x = -1 + i / 1000.0, d = 1e9;
      for (double ci : c) d = std::min(d, std::fabs(x - ci));
      EXPECT_LE(d, eps + 1e-12) << eps << " " << x;
    }
  }
}

TEST(CoverPack, Sandwich) {
  for (double eps : {0.2, 0.1, 0.05, 0.03}) {
    auto P2 = pack_interval(2 * eps), C = cover_interval(eps), P = pack_interval(eps);
    EXPECT_LE(P2.size(), C.size()) << eps;
    EXPECT_LE(C.size(), P.size()) << eps;
    for (std::size_t i = 0; i + 1 < P.size(); ++i) EXPECT_GT(P[i + 1] - P[i], eps);
  }
}
