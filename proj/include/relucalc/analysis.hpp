#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "relucalc/network.hpp"

namespace relucalc {

struct PieceLimitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Continuous piecewise linear function on [xs.front(), xs.back()], extended
// affinely beyond. slopes[i] is the slope on [xs[i], xs[i+1]].
struct PwlFunction {
  std::vector<double> xs, ys, slopes;

  std::size_t pieces() const { return slopes.size(); }
  std::vector<double> breakpoints() const;  // interior knots
  double operator()(double x) const;
  double left_slope() const { return slopes.front(); }
  double right_slope() const { return slopes.back(); }
};

constexpr std::size_t kDefaultMaxKnots = 4'000'000;

PwlFunction exact_pwl(const ReluNetwork& net, double a, double b,
                      std::size_t max_knots = kDefaultMaxKnots);

struct RegionReport {
  std::uint64_t count = 0;
  double log2_bound = 0.0;  // L log2(2W)
  bool within_bound = true;
};

double log2_region_bound(const ReluNetwork& net);
std::uint64_t count_linear_regions(const ReluNetwork& net, double a, double b);
RegionReport region_report(const ReluNetwork& net, double a, double b);
// Linear regions of outer o inner on inner's domain.
std::uint64_t count_composed_regions(const PwlFunction& outer, const PwlFunction& inner);

struct ErrorReport {
  std::vector<double> lo, hi;
  std::size_t grid_n = 0;
  double sup_error = 0.0;
  double l2_error = 0.0;
  std::vector<double> argmax;
  bool breakpoints_included = false;

  static std::string csv_header();
  std::string csv_row() const;
};

using Scalar1 = std::function<double(double)>;
using ScalarN = std::function<double(std::span<const double>)>;

// Uniform grid plus all breakpoints when the piece count stays below max_knots
// and extraction costs no more than a few grid passes.
ErrorReport sup_error(const ReluNetwork& net, const Scalar1& f, double a, double b,
                      std::size_t grid_n, std::size_t max_knots = 200'000);
// Uniform lattice with grid_n points per axis.
ErrorReport sup_error_box(const ReluNetwork& net, const ScalarN& f, const std::vector<double>& lo,
                          const std::vector<double>& hi, std::size_t grid_n);
// Composite Simpson on the partition grid + breakpoints + target_breaks, with
// the target sampled one-sided at partition points.
ErrorReport l2_error(const ReluNetwork& net, const Scalar1& f, double a, double b,
                     std::size_t grid_n, const std::vector<double>& target_breaks = {});

// Best uniform error of a single line through the points.
double minimax_line_error(std::span<const double> x, std::span<const double> y);
std::size_t min_pieces(const Scalar1& f, double a, double b, double eps, std::size_t grid_n);
double frenzen_constant(const Scalar1& f2, double a, double b);

std::vector<double> cover_interval(double eps);
std::vector<double> pack_exp_family(double eps);
std::vector<double> pack_interval(double eps);

}  // namespace relucalc
