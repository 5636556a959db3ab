#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "relucalc/calculus.hpp"
#include "relucalc/network.hpp"

namespace relucalc {

// f on [a, b]. Membership in the class with |f^(n)| <= n! is taken on trust.
struct SmoothDescriptor {
  std::function<double(double)> f;
  double a = -1.0, b = 1.0;
  std::string label;

  SmoothDescriptor() = default;
  SmoothDescriptor(std::function<double(double)> fn, double lo, double hi, std::string name = "");
  double operator()(double x) const { return f(x); }
};

struct ChebyshevExpansion {
  std::vector<double> coeffs;           // Chebyshev basis c_0..c_m
  std::vector<double> monomial_coeffs;  // a_0..a_m
};

// g_s on [0,1], depth s+1, width 3.
ReluNetwork sawtooth_network(int s);

int square_degree(double eps);
ReluNetwork square_network(double eps);
ReluNetwork square_network_m(int m);

int multiply_degree(double D, double eps);
ReluNetwork multiply_network(double D, double eps);

// x -> sum a_i x^i on [-D, D].
ReluNetwork polynomial_network(const std::vector<double>& a, double D, double eps);

ChebyshevExpansion chebyshev_expand(const SmoothDescriptor& f, int m);
int smooth_degree(double eps);
ReluNetwork smooth_network(const SmoothDescriptor& f, double eps);
ReluNetwork smooth_network_general(const SmoothDescriptor& f, double eps);

// Hats of the partition of unity on knots a_0 < ... < a_n (n-1 of them),
// weight-reduced. The first is flat 1 to the left, the last flat 1 to the right.
std::vector<ReluNetwork> hat_partition(const std::vector<double>& knots);
ReluNetwork stitch_networks(const std::vector<ReluNetwork>& locals,
                            const std::vector<double>& knots, double eps, double B);

// cos(a x) on [-D, D] is join(outer, inner).
struct CosineStages {
  ReluNetwork inner;
  ReluNetwork outer;
};
CosineStages cosine_stages(double a, double D, double eps);
ReluNetwork cosine_network(double a, double D, double eps);
// cos(a x - b)
ReluNetwork cosine_shifted_network(double a, double b, double D, double eps);

double bspline(int m, double x);
ReluNetwork bspline_network(int m, double eps);

std::vector<double> spline_wavelet_coeffs(int m);
double spline_wavelet(int m, double x);
ReluNetwork spline_wavelet_network(int m, double eps);

// (D, eta) -> net approximating f within eta on [-D, D]^d
using NetFactory = std::function<ReluNetwork(double D, double eta)>;
// |det A|^{1/p} f(Ax - e) on [-E, E]^d within eta. p <= 0 or infinite means p = inf.
ReluNetwork dilate_translate(const NetFactory& base, const Matrix& A, const std::vector<double>& e,
                             double p, double E, double eta);

double haar(double x);  // psi = chi[0,1/2) - chi[1/2,1)
ReluNetwork haar_element_network(int n, long long k, double eps);

ReluNetwork cutoff_network(double y, std::size_t d);

struct ModulatedPair {
  ReluNetwork re;
  ReluNetwork im;
};
ModulatedPair modulated_network(const ReluNetwork& g, double Sf, const std::vector<double>& xi,
                                double D, double eps);

double gaussian_radius(double eps);
ReluNetwork gaussian_network(std::size_t d, double eps);

ReluNetwork oscillatory_network(const SmoothDescriptor& g, const SmoothDescriptor& h, double a,
                                double D, double eps);

int weierstrass_terms(double eps);
// Blocks 0..K with the channel map applied: x -> (x, x, sum_{k<=K} p^k phi_k(x)).
ReluNetwork weierstrass_prefix(double p, double a, double D, double eps, int K);
ReluNetwork weierstrass_network(double p, double a, double D, double eps);
double weierstrass_reference(double p, double a, double x, int terms = 60);

}  // namespace relucalc
