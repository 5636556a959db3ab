#include "relucalc/constructors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>
#include <numeric>

namespace relucalc {

namespace {

constexpr double kPi = std::numbers::pi;

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw ArgumentError("eps must lie in (0, 1/2)");
}

ReluNetwork layers_net(std::vector<AffineLayer> L) { return ReluNetwork(std::move(L)); }

ReluNetwork scale_net(double a, std::size_t d = 1) {
  if (a == 1.0) return affine_layer_network(Matrix::identity(d), std::vector<double>(d, 0.0));
  return scalar_mult_network(a, d);
}

// x -> rho(x - k), magnitude <= 1
ReluNetwork relu_shift(double k) {
  std::vector<AffineLayer> L;
  L.emplace_back(Matrix(1, 1, {1.0}), std::vector<double>{-k});
  L.emplace_back(Matrix(1, 1, {1.0}), std::vector<double>{0.0});
  ReluNetwork n = layers_net(std::move(L));
  return std::fabs(k) > 1.0 ? reduce_weights(n) : n;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

double sup_sample(const SmoothDescriptor& f, double a, double b) {
  double m = 0.0;
  const int n = 4096;
  for (int i = 0; i <= n; ++i) m = std::max(m, std::fabs(f(a + (b - a) * i / n)));
  return m;
}

// combination sum c_i net_i with coefficients scaled into [-1,1] and the
// factor restored by a scalar multiplication network
ReluNetwork scaled_combination(const std::vector<ReluNetwork>& nets, const std::vector<double>& c) {
  double cmax = max_abs(c);
  if (cmax == 0.0) return zero_network(nets.front().input_dim(), 1);
  if (cmax <= 1.0) return linear_combination_shared(pad_to_common_depth(nets), c);
  std::vector<double> cs(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) cs[i] = c[i] / cmax;
  return join(scale_net(cmax), linear_combination_shared(pad_to_common_depth(nets), cs));
}

// (x_1..x_d) -> product-ready pair (F(x), G(x)) then mu
ReluNetwork multiply_pair(const ReluNetwork& mu, const ReluNetwork& F, const ReluNetwork& G) {
  return join(mu, parallelize_shared(pad_to_common_depth({F, G})));
}

}  // namespace

SmoothDescriptor::SmoothDescriptor(std::function<double(double)> fn, double lo, double hi,
                                   std::string name)
    : f(std::move(fn)), a(lo), b(hi), label(std::move(name)) {
  if (!(lo < hi)) throw ArgumentError("descriptor interval needs a < b");
  for (int i = 0; i <= 256; ++i)
    if (!std::isfinite(f(lo + (hi - lo) * i / 256)))
      throw ArgumentError("descriptor evaluator is not finite on its interval");
}

ReluNetwork sawtooth_network(int s) {
  if (s < 1) throw ArgumentError("sawtooth needs s >= 1");
  std::vector<AffineLayer> L;
  const std::vector<double> b{0.0, -0.5, -1.0};
  L.emplace_back(Matrix(3, 1, {1, 1, 1}), b);
  for (int i = 1; i < s; ++i) L.emplace_back(Matrix(3, 3, {2, -4, 2, 2, -4, 2, 2, -4, 2}), b);
  L.emplace_back(Matrix(1, 3, {2, -4, 2}), std::vector<double>{0.0});
  return layers_net(std::move(L));
}

int square_degree(double eps) {
  check_eps(eps);
  return std::max(1, (int)std::ceil(std::log2(1.0 / eps) / 2.0) - 1);
}

ReluNetwork square_network_m(int m) {
  if (m < 1) throw ArgumentError("square network needs m >= 1");
  std::vector<AffineLayer> L;
  L.emplace_back(Matrix(3, 1, {1, 1, 1}), std::vector<double>{0.0, -0.5, 0.0});
  for (int l = 2; l <= m; ++l)
    L.emplace_back(Matrix(3, 3, {0.5, -1, 0, 0.5, -1, 0, -0.5, 1, 1}),
                   std::vector<double>{0.0, -std::ldexp(1.0, -2 * l + 1), 0.0});
  L.emplace_back(Matrix(1, 3, {-0.5, 1, 1}), std::vector<double>{0.0});
  return layers_net(std::move(L));
}

ReluNetwork square_network(double eps) { return square_network_m(square_degree(eps)); }

int multiply_degree(double D, double eps) {
  check_eps(eps);
  const double Dp = std::max(D, 1.0);
  return (int)std::ceil((1.0 + std::log2(Dp * Dp / eps)) / 2.0);
}

ReluNetwork multiply_network(double D, double eps) {
  const int m = multiply_degree(D, eps);
  const double Dp = std::max(D, 1.0);
  const double c = 1.0 / (2.0 * Dp);
  std::vector<AffineLayer> L;
  L.emplace_back(Matrix(4, 2, {c, c, -c, -c, c, -c, -c, c}), std::vector<double>(4, 0.0));
  // the accumulator (third row) carries +1 so the ReLU never clips it
  L.emplace_back(Matrix(5, 4, {1, 1, 0, 0, 1, 1, 0, 0, 1, 1, -1, -1, 0, 0, 1, 1, 0, 0, 1, 1}),
                 std::vector<double>{0.0, -0.5, 1.0, 0.0, -0.5});
  for (int l = 3; l <= m + 1; ++l) {
    const double t = -std::ldexp(1.0, -2 * l + 3);
    L.emplace_back(Matrix(5, 5, {0.5, -1, 0, 0, 0, 0.5, -1, 0, 0, 0, -0.5, 1, 1, 0.5, -1,
                                 0, 0, 0, 0.5, -1, 0, 0, 0, 0.5, -1}),
                   std::vector<double>{0.0, t, 0.0, 0.0, t});
  }
  L.emplace_back(Matrix(1, 5, {-0.5, 1, 1, 0.5, -1}), std::vector<double>{-1.0});
  ReluNetwork core = layers_net(std::move(L));
  if (Dp == 1.0) return core;
  return compose(scalar_mult_network(Dp * Dp), core);
}

ReluNetwork polynomial_network(const std::vector<double>& a, double D, double eps) {
  check_eps(eps);
  if (a.empty()) throw ArgumentError("empty coefficient sequence");
  const int m = (int)a.size() - 1;
  if (m <= 1) return affine_network(Matrix(1, 1, {m == 1 ? a[1] : 0.0}), {a[0]});
  const double norm = max_abs(a);
  if (norm == 0.0) return affine_layer_network(Matrix(1, 1, {0.0}), {0.0});
  const double Dc = std::ceil(std::max(D, 1.0));
  double eta = eps / (norm * double(m - 1) * double(m - 1) * std::pow(Dc, m - 2));
  eta = std::min(eta, 0.25);

  // (x, s, y) channels
  ReluNetwork net = affine_network(Matrix(3, 1, {1, 0, 1}), {0.0, a[0], 0.0});
  const Matrix dup_y(4, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1});  // (x,s,y,y)
  const Matrix dup_x(4, 3, {1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 1});  // (x,s,x,y)
  const std::vector<double> z4(4, 0.0);
  for (int i = 1; i < m; ++i) {
    ReluNetwork acc = affine_network(Matrix(1, 2, {1.0, a[i]}), {0.0});
    const std::size_t La = acc.depth();
    ReluNetwork stage2 = precompose_affine(
        parallelize({identity_network(1, La), acc, identity_network(1, La)}), dup_y, z4);

    double Bi = std::pow(Dc, i);
    for (int s = 0; s <= i - 2; ++s) Bi += eta * std::pow(Dc, s);
    ReluNetwork mult = multiply_network(Bi, eta);
    const std::size_t Lm = mult.depth();
    ReluNetwork stage4 = precompose_affine(
        parallelize({identity_network(1, Lm), identity_network(1, Lm), mult}), dup_x, z4);
    net = join(stage4, join(stage2, net));
  }
  return join(affine_network(Matrix(1, 3, {0.0, 1.0, a[m]}), {0.0}), net);
}

ChebyshevExpansion chebyshev_expand(const SmoothDescriptor& f, int m) {
  if (m < 0) throw ArgumentError("degree must be >= 0");
  if (m > 40) throw ArgumentError("degree above 40 is not supported");
  static std::atomic_flag warned;
  if (m > 25 && !warned.test_and_set()) {
    std::clog << "relucalc: monomial conversion at degree " << m << " is ill-conditioned\n";
  }
  const int n = m + 1;
  std::vector<double> x(n), fx(n);
  for (int k = 0; k < n; ++k) {
    x[k] = std::cos((2 * k + 1) * kPi / (2.0 * n));
    fx[k] = f(x[k]);
  }
  ChebyshevExpansion e;
  e.coeffs.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    long double s = 0;
    for (int k = 0; k < n; ++k) s += (long double)fx[k] * std::cos(j * (2 * k + 1) * kPi / (2.0 * n));
    e.coeffs[j] = double(s * (j == 0 ? 1.0L : 2.0L) / n);
  }
  // T_k in the monomial basis
  std::vector<std::vector<double>> T(n);
  T[0] = {1.0};
  if (n > 1) T[1] = {0.0, 1.0};
  for (int k = 2; k < n; ++k) {
    T[k].assign(k + 1, 0.0);
    for (int i = 0; i < k; ++i) T[k][i + 1] += 2.0 * T[k - 1][i];
    for (int i = 0; i < k - 1; ++i) T[k][i] -= T[k - 2][i];
  }
  e.monomial_coeffs.assign(n, 0.0);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i <= k; ++i) e.monomial_coeffs[i] += e.coeffs[k] * T[k][i];
  return e;
}

int smooth_degree(double eps) {
  check_eps(eps);
  return (int)std::ceil(std::log2(2.0 / eps));
}

ReluNetwork smooth_network(const SmoothDescriptor& f, double eps) {
  check_eps(eps);
  if (f.a != -1.0 || f.b != 1.0) throw ArgumentError("smooth_network expects the interval [-1,1]");
  const int m = smooth_degree(eps);
  ChebyshevExpansion e = chebyshev_expand(f, m);
  for (double c : e.coeffs)
    if (std::fabs(c) > 2.0 + 1e-6)
      throw ArgumentError("Chebyshev coefficients exceed 2: function outside the smooth class");
  double scale = 1.0;
  for (double c : e.monomial_coeffs) scale += std::fabs(c);
  for (int k = 0; k <= m; ++k) {
    double x = std::cos((2 * k + 1) * kPi / (2.0 * (m + 1)));
    double p = 0.0;
    for (int i = m; i >= 0; --i) p = p * x + e.monomial_coeffs[i];
    if (std::fabs(p - f(x)) > 1e-9 * scale)
      throw ArgumentError("Chebyshev interpolation residual check failed");
  }
  return polynomial_network(e.monomial_coeffs, 1.0, eps / 2.0);
}

ReluNetwork smooth_network_general(const SmoothDescriptor& f, double eps) {
  check_eps(eps);
  const double a = f.a, b = f.b;
  if (!(a < b)) throw ArgumentError("interval needs a < b");
  if (b - a <= 2.0) {
    if (a == -1.0 && b == 1.0) return smooth_network(f, eps);
    const double c = (a + b) / 2.0, h = (b - a) / 2.0;
    auto fn = f.f;
    SmoothDescriptor g([fn, c, h](double t) { return fn(c + h * t); }, -1.0, 1.0, f.label);
    return join(smooth_network(g, eps), affine_network(Matrix(1, 1, {1.0 / h}), {-c / h}));
  }
  const int n = (int)std::ceil(b - a);
  std::vector<double> knots(n + 1);
  for (int i = 0; i <= n; ++i) knots[i] = a + i * (b - a) / n;
  knots[n] = b;
  std::vector<ReluNetwork> locals;
  for (int i = 1; i < n; ++i)
    locals.push_back(smooth_network_general(SmoothDescriptor(f.f, knots[i - 1], knots[i + 1], f.label),
                                             eps / 3.0));
  return stitch_networks(locals, knots, eps, std::max(1.0, sup_sample(f, a, b)));
}

std::vector<ReluNetwork> hat_partition(const std::vector<double>& knots) {
  const std::size_t n = knots.size() - 1;
  if (knots.size() < 4) throw ArgumentError("need at least two interior pieces");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i - 1] < knots[i])) throw ArgumentError("knots must be strictly increasing");
  std::vector<ReluNetwork> hats;
  for (std::size_t i = 1; i < n; ++i) {
    const double l = knots[i - 1], c = knots[i], r = knots[i + 1];
    std::vector<AffineLayer> L;
    if (i == 1) {
      const double h = r - c;
      L.emplace_back(Matrix(2, 1, {1, 1}), std::vector<double>{-c, -r});
      L.emplace_back(Matrix(1, 2, {-1.0 / h, 1.0 / h}), std::vector<double>{1.0});
    } else if (i == n - 1) {
      const double h = c - l;
      L.emplace_back(Matrix(2, 1, {1, 1}), std::vector<double>{-l, -c});
      L.emplace_back(Matrix(1, 2, {1.0 / h, -1.0 / h}), std::vector<double>{0.0});
    } else {
      const double hl = c - l, hr = r - c;
      L.emplace_back(Matrix(3, 1, {1, 1, 1}), std::vector<double>{-l, -c, -r});
      L.emplace_back(Matrix(1, 3, {1.0 / hl, -(1.0 / hl + 1.0 / hr), 1.0 / hr}),
                     std::vector<double>{0.0});
    }
    ReluNetwork hnet = layers_net(std::move(L));
    hats.push_back(metrics(hnet).magnitude > 1.0 ? reduce_weights(hnet) : hnet);
  }
  return hats;
}

ReluNetwork stitch_networks(const std::vector<ReluNetwork>& locals, const std::vector<double>& knots,
                            double eps, double B) {
  check_eps(eps);
  auto hats = hat_partition(knots);
  if (locals.size() != hats.size()) throw ArgumentError("need one local net per interior knot");
  ReluNetwork mu = multiply_network(B + 1.0 / 6.0, eps / 3.0);
  std::vector<ReluNetwork> parts;
  for (std::size_t i = 0; i < locals.size(); ++i) {
    if (locals[i].input_dim() != 1 || locals[i].output_dim() != 1)
      throw ShapeError("stitching expects scalar local nets");
    parts.push_back(multiply_pair(mu, locals[i], hats[i]));
  }
  return sum_finite_width(parts);
}

CosineStages cosine_stages(double a, double D, double eps) {
  check_eps(eps);
  if (!(a > 0.0) || !(D > 0.0)) throw ArgumentError("cosine needs a > 0 and D > 0");
  const double Dp = std::max(D, 1.0);
  const double ap = a * Dp;
  const double c = 6.0 / (kPi * kPi * kPi);
  if (ap > kPi) {
    const int s = std::max(1, (int)std::ceil(std::log2(ap / kPi)));
    const double alpha = ap / (kPi * std::ldexp(1.0, s));
    std::vector<AffineLayer> L;
    L.emplace_back(Matrix(2, 1, {alpha / Dp, -alpha / Dp}), std::vector<double>{0.0, 0.0});
    L.emplace_back(Matrix(1, 2, {1.0, 1.0}), std::vector<double>{0.0});
    ReluNetwork absnet = layers_net(std::move(L));
    ReluNetwork inner = join(reduce_weights(sawtooth_network(s)), absnet);
    SmoothDescriptor f([c](double t) { return c * std::cos(kPi * t); }, -1.0, 1.0, "cos");
    ReluNetwork outer = join(scalar_mult_network(1.0 / c), smooth_network(f, c * eps));
    return {inner, outer};
  }
  ReluNetwork inner = affine_layer_network(Matrix(1, 1, {1.0 / Dp}), {0.0});
  SmoothDescriptor f([c, ap](double t) { return c * std::cos(ap * t); }, -1.0, 1.0, "cos");
  ReluNetwork outer = join(scalar_mult_network(1.0 / c), smooth_network(f, c * eps));
  return {inner, outer};
}

ReluNetwork cosine_network(double a, double D, double eps) {
  CosineStages st = cosine_stages(a, D, eps);
  return join(st.outer, st.inner);
}

ReluNetwork cosine_shifted_network(double a, double b, double D, double eps) {
  check_eps(eps);
  if (!(a > 0.0)) throw ArgumentError("cosine needs a > 0");
  ReluNetwork net = cosine_network(a, D + std::fabs(b) / a, eps);
  if (b == 0.0) return net;
  return join(net, affine_network(Matrix(1, 1, {1.0}), {-b / a}));
}

double bspline(int m, double x) {
  if (m < 1) throw ArgumentError("B-spline order must be >= 1");
  long double s = 0;
  for (int k = 0; k <= m; ++k) {
    long double t = (long double)x - k;
    if (t < 0) continue;
    long double p = m == 1 ? 1.0L : std::pow(t, (long double)(m - 1));
    s += ((k % 2) ? -1.0L : 1.0L) * (long double)binom(m, k) * p;
  }
  return double(s / factorial(m - 1));
}

ReluNetwork bspline_network(int m, double eps) {
  check_eps(eps);
  if (m < 1) throw ArgumentError("B-spline order must be >= 1");
  if (m == 1) {
    const double d = eps * eps;
    std::vector<AffineLayer> L;
    L.emplace_back(Matrix(4, 1, {1, 1, 1, 1}), std::vector<double>{0.0, -d, -1.0 + d, -1.0});
    L.emplace_back(Matrix(1, 4, {1.0 / d, -1.0 / d, -1.0 / d, 1.0 / d}), std::vector<double>{0.0});
    return reduce_weights(layers_net(std::move(L)));
  }
  const double fact = factorial(m - 1);
  const double tau = std::min(eps * fact / (4.0 * std::ldexp(1.0, m)), 0.25);
  std::vector<double> mono(m, 0.0);
  mono[m - 1] = 1.0;
  ReluNetwork P = polynomial_network(mono, m + 1.0, tau);
  std::vector<ReluNetwork> terms;
  std::vector<double> c;
  for (int k = 0; k <= m; ++k) {
    terms.push_back(join(P, relu_shift(k)));
    c.push_back(((k % 2) ? -1.0 : 1.0) * binom(m, k) / fact);
  }
  ReluNetwork body = scaled_combination(terms, c);

  std::vector<AffineLayer> L;
  L.emplace_back(Matrix(4, 1, {1, 1, 1, 1}), std::vector<double>{1.0, 0.0, -double(m), -double(m) - 1});
  L.emplace_back(Matrix(1, 4, {1, -1, -1, 1}), std::vector<double>{0.0});
  ReluNetwork gamma = reduce_weights(layers_net(std::move(L)));
  return multiply_pair(multiply_network(1.0 + eps / 2.0, eps / 2.0), body, gamma);
}

std::vector<double> spline_wavelet_coeffs(int m) {
  if (m < 1) throw ArgumentError("wavelet order must be >= 1");
  std::vector<double> q;
  for (int n = 1; n <= 3 * m - 1; ++n) {
    double s = 0.0;
    for (int j = 0; j <= m; ++j) s += binom(m, j) * bspline(2 * m, n - j);
    q.push_back(((n + 1) % 2 ? -1.0 : 1.0) * s / std::ldexp(1.0, m - 1));
  }
  return q;
}

double spline_wavelet(int m, double x) {
  auto q = spline_wavelet_coeffs(m);
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q[i] * bspline(m, 2.0 * x - double(i));
  return s;
}

ReluNetwork spline_wavelet_network(int m, double eps) {
  check_eps(eps);
  auto q = spline_wavelet_coeffs(m);
  double S = 0.0;
  for (double v : q) S += std::fabs(v);
  NetFactory base = [m](double, double eta) { return bspline_network(m, eta); };
  std::vector<ReluNetwork> nets;
  for (std::size_t i = 0; i < q.size(); ++i)
    nets.push_back(dilate_translate(base, Matrix(1, 1, {2.0}), {double(i)}, 0.0,
                                    1.0 + 2.0 * m, eps / S));
  return scaled_combination(nets, q);
}

ReluNetwork dilate_translate(const NetFactory& base, const Matrix& A, const std::vector<double>& e,
                             double p, double E, double eta) {
  const std::size_t d = A.cols();
  if (A.rows() != d || e.size() != d) throw ShapeError("dilation needs square A and matching e");
  // |det A| by partial pivoting
  Matrix U = A;
  double det = 1.0;
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < d; ++i)
      if (std::fabs(U(i, k)) > std::fabs(U(piv, k))) piv = i;
    if (std::fabs(U(piv, k)) == 0.0) { det = 0.0; break; }
    if (piv != k)
      for (std::size_t j = 0; j < d; ++j) std::swap(U(k, j), U(piv, j));
    det *= U(k, k);
    for (std::size_t i = k + 1; i < d; ++i) {
      double f = U(i, k) / U(k, k);
      for (std::size_t j = k; j < d; ++j) U(i, j) -= f * U(k, j);
    }
  }
  det = std::fabs(det);
  if (!(det > 1e-12)) throw ArgumentError("dilation matrix is singular");
  const bool pinf = !(p > 0.0) || std::isinf(p);
  if (!pinf && p < 1.0) throw ArgumentError("p must be >= 1");
  const double s = pinf ? 1.0 : std::pow(det, 1.0 / p);
  const double F = double(d) * E * max_abs(A.data()) + max_abs(e);
  ReluNetwork f = base(F, eta / s);
  std::vector<double> me(d);
  for (std::size_t i = 0; i < d; ++i) me[i] = -e[i];
  ReluNetwork net = join(f, affine_network(A, me));
  if (s == 1.0) return net;
  return join(scalar_mult_network(s, f.output_dim()), net);
}

double haar(double x) {
  if (x >= 0.0 && x < 0.5) return 1.0;
  if (x >= 0.5 && x < 1.0) return -1.0;
  return 0.0;
}

ReluNetwork haar_element_network(int n, long long k, double eps) {
  check_eps(eps);
  if (n < 0 || n > 60) throw ArgumentError("level n out of range");
  if (k < 0 || k > (1LL << n) - 1) throw ArgumentError("shift k out of range");
  const double d = eps * eps;
  const double w = std::ldexp(1.0, n), kk = double(k);
  const double sc = std::pow(2.0, n / 2.0);
  const double t[6] = {-d, d, 0.5 - d, 0.5 + d, 1.0 - d, 1.0 + d};
  const double c[6] = {0.5 / d, -0.5 / d, -1.0 / d, 1.0 / d, 0.5 / d, -0.5 / d};
  Matrix A1(6, 1), A2(1, 6);
  std::vector<double> b1(6);
  for (int i = 0; i < 6; ++i) {
    A1(i, 0) = w;
    b1[i] = -(kk + t[i]);
    A2(0, i) = c[i] * sc;
  }
  std::vector<AffineLayer> L;
  L.emplace_back(A1, b1);
  L.emplace_back(A2, std::vector<double>{0.0});
  return layers_net(std::move(L));
}

ReluNetwork cutoff_network(double y, std::size_t d) {
  if (!(y > 0.0) || d == 0) throw ArgumentError("cutoff needs y > 0 and d >= 1");
  // rho(1 - sum_i rho(|t_i| - y)), equal to rho(sum_i alpha_y(t_i) - (d-1))
  Matrix A1(2 * d, d), A2(1, 2 * d, -1.0);
  std::vector<double> b1(2 * d, -y);
  for (std::size_t i = 0; i < d; ++i) {
    A1(2 * i, i) = 1.0;
    A1(2 * i + 1, i) = -1.0;
  }
  std::vector<AffineLayer> L;
  L.emplace_back(A1, b1);
  L.emplace_back(A2, std::vector<double>{1.0});
  L.emplace_back(Matrix(1, 1, {1.0}), std::vector<double>{0.0});
  return layers_net(std::move(L));
}

ModulatedPair modulated_network(const ReluNetwork& g, double Sf, const std::vector<double>& xi,
                                double D, double eps) {
  check_eps(eps);
  const std::size_t d = g.input_dim();
  if (xi.size() != d || g.output_dim() != 1) throw ShapeError("frequency dimension mismatch");
  Sf = std::max(1.0, Sf);
  double L1 = 0.0;
  for (double v : xi) L1 += std::fabs(v);
  if (L1 == 0.0) return {g, zero_network(d, 1)};
  const double tol = eps / (6.0 * Sf);
  ReluNetwork ip = affine_network(Matrix(1, d, xi), {0.0});
  const double R = L1 * D;
  ReluNetwork cosn = join(cosine_network(2.0 * kPi, R, tol), ip);
  ReluNetwork sinn = join(cosine_shifted_network(2.0 * kPi, kPi / 2.0, R, tol), ip);
  ReluNetwork mu = multiply_network(Sf + 0.5, eps / 6.0);
  return {multiply_pair(mu, cosn, g), multiply_pair(mu, sinn, g)};
}

double gaussian_radius(double eps) {
  check_eps(eps);
  return std::max(std::log2(1.0 / eps), std::sqrt(std::log(4.0 / eps)));
}

ReluNetwork gaussian_network(std::size_t d, double eps) {
  check_eps(eps);
  if (d == 0) throw ArgumentError("dimension must be >= 1");
  const double R = gaussian_radius(eps);
  ReluNetwork sq = multiply_network(R + 1.0, eps / (4.0 * d));
  std::vector<ReluNetwork> squares;
  for (std::size_t i = 0; i < d; ++i) {
    Matrix sel(2, d);
    sel(0, i) = sel(1, i) = 1.0;
    squares.push_back(precompose_affine(sq, sel, {0.0, 0.0}));
  }
  ReluNetwork S = d == 1 ? squares[0] : linear_combination_shared(squares, std::vector<double>(d, 1.0));
  const double Y = std::log(4.0 / eps);
  std::vector<AffineLayer> L;
  L.emplace_back(Matrix(2, 1, {1, 1}), std::vector<double>{0.0, -Y});
  L.emplace_back(Matrix(1, 2, {1, -1}), std::vector<double>{0.0});
  ReluNetwork clamp = reduce_weights(layers_net(std::move(L)));
  ReluNetwork E =
      smooth_network_general(SmoothDescriptor([](double y) { return std::exp(-y); }, 0.0, Y, "exp"),
                             eps / 4.0);
  ReluNetwork psi = join(E, join(clamp, S));
  ReluNetwork chi = reduce_weights(cutoff_network(R, d));
  return multiply_pair(multiply_network(1.0 + eps, eps / 4.0), psi, chi);
}

ReluNetwork oscillatory_network(const SmoothDescriptor& g, const SmoothDescriptor& h, double a,
                                double D, double eps) {
  check_eps(eps);
  if (!(a > 0.0) || !(D > 0.0)) throw ArgumentError("oscillatory needs a > 0 and D > 0");
  const double tol = eps / (12.0 * std::ceil(a));
  ReluNetwork pg = smooth_network_general(SmoothDescriptor(g.f, -D, D, g.label), tol);
  ReluNetwork ph = smooth_network_general(SmoothDescriptor(h.f, -D, D, h.label), tol);
  ReluNetwork cg = join(cosine_network(a, 1.5, eps / 3.0), pg);
  return multiply_pair(multiply_network(1.5, eps / 3.0), cg, ph);
}

int weierstrass_terms(double eps) {
  check_eps(eps);
  return (int)std::ceil(std::log2(2.0 / eps));
}

namespace {

ReluNetwork weierstrass_chain(double p, double a, double D, double eps, int K, bool final) {
  check_eps(eps);
  if (!(p > 0.0 && p < 0.5)) throw ArgumentError("p must lie in (0, 1/2)");
  if (!(a > 0.0)) throw ArgumentError("a must be positive");
  // block 0 with the channel map folded in: x -> (x, x, phi_0(x))
  ReluNetwork phi0 = cosine_network(kPi, D, eps / 4.0);
  ReluNetwork net = parallelize_shared(pad_to_common_depth(
      {identity_network(1, 2), identity_network(1, 2), phi0}));
  const Matrix Amap(3, 3, {1, 0, 0, 1, 0, 0, 0, 1, 1});
  const Matrix Bmap(1, 3, {0, 1, 1});
  for (int k = 1; k <= K; ++k) {
    const double pk = std::pow(p, k);
    ReluNetwork phi = postcompose_affine(Matrix(1, 1, {pk}), {0.0},
                                         cosine_network(std::pow(a, k) * kPi, D, eps / 4.0));
    const std::size_t Lk = phi.depth();
    ReluNetwork blk = parallelize({identity_network(1, Lk), phi, identity_network(1, Lk)});
    if (final && k == K)
      blk = postcompose_affine(Bmap, {0.0}, blk);
    else
      blk = postcompose_affine(Amap, {0.0, 0.0, 0.0}, blk);
    net = join(blk, net);
  }
  if (final && K == 0) net = postcompose_affine(Bmap, {0.0}, net);
  return net;
}

}  // namespace

ReluNetwork weierstrass_prefix(double p, double a, double D, double eps, int K) {
  if (K < 0) throw ArgumentError("K must be >= 0");
  return weierstrass_chain(p, a, D, eps, K, false);
}

ReluNetwork weierstrass_network(double p, double a, double D, double eps) {
  return weierstrass_chain(p, a, D, eps, weierstrass_terms(eps), true);
}

double weierstrass_reference(double p, double a, double x, int terms) {
  long double s = 0, pk = 1, ak = 1;
  for (int k = 0; k < terms; ++k) {
    long double t = std::fmod(ak * (long double)x, 2.0L);
    s += pk * std::cos((long double)kPi * t);
    pk *= p;
    ak *= a;
  }
  return double(s);
}

}  // namespace relucalc
