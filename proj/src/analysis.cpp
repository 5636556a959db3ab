#include "relucalc/analysis.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <cstdint>
#include <queue>
#include <sstream>

namespace relucalc {

namespace {

bool same_slope(double s1, double s2) {
  const double m = std::max(std::fabs(s1), std::fabs(s2));
  return std::fabs(s1 - s2) <= 1e-10 * m || m < 1e-300;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string point(const std::vector<double>& p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ";" : "") + num(p[i]);
  return s;
}

void check_domain(double a, double b) {
  if (!(a < b)) throw ArgumentError("empty domain");
}

std::vector<double> uniform(double a, double b, std::size_t n) {
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = a + (b - a) * double(i) / double(n - 1);
  xs[n - 1] = b;
  return xs;
}

}  // namespace

std::vector<double> PwlFunction::breakpoints() const {
  if (xs.size() <= 2) return {};
  return std::vector<double>(xs.begin() + 1, xs.end() - 1);
}

double PwlFunction::operator()(double x) const {
  std::size_t p;
  if (x <= xs.front())
    p = 0;
  else if (x >= xs.back())
    p = pieces() - 1;
  else
    p = std::size_t(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
  return ys[p] + slopes[p] * (x - xs[p]);
}

namespace {

// per-layer interval x neuron state, ~200 MB per array
constexpr std::size_t kMaxStateEntries = std::size_t(1) << 24;

// work counts interval-neuron updates; SIZE_MAX means unlimited
PwlFunction propagate(const ReluNetwork& net, double a, double b, std::size_t max_knots, std::size_t max_work) {
  std::size_t work = 0;
  if (net.input_dim() != 1 || net.output_dim() != 1) throw ShapeError("exact_pwl needs a 1-D network");
  check_domain(a, b);
  const double tol = 1e-12 * std::max({1.0, std::fabs(a), std::fabs(b)});
  std::vector<double> t{a, b};
  std::vector<double> v{a}, s{1.0};  // per interval: value at left knot, slope
  std::size_t n = 1;
  std::vector<double> zv, zs, cross;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& A = net.layer(l).A;
    const auto& bias = net.layer(l).b;
    const std::size_t out = A.rows(), K = t.size() - 1;
    work += K * out;
    if (work > max_work) throw PieceLimitError("work budget exceeded in exact_pwl");
    if (K * std::max(out, n) > kMaxStateEntries) throw PieceLimitError("state too large in exact_pwl");
    zv.assign(K * out, 0.0);
    zs.assign(K * out, 0.0);
    std::vector<std::size_t> start{0}, col;
    std::vector<double> wt;
    for (std::size_t i = 0; i < out; ++i) {
      for (std::size_t c = 0; c < n; ++c)
        if (A(i, c) != 0.0) {
          col.push_back(c);
          wt.push_back(A(i, c));
        }
      start.push_back(col.size());
    }
    for (std::size_t j = 0; j < K; ++j) {
      const double* vj = &v[j * n];
      const double* sj = &s[j * n];
      for (std::size_t i = 0; i < out; ++i) {
        double pv = bias[i], ps = 0.0;
        for (std::size_t q = start[i]; q < start[i + 1]; ++q) {
          pv += wt[q] * vj[col[q]];
          ps += wt[q] * sj[col[q]];
        }
        zv[j * out + i] = pv;
        zs[j * out + i] = ps;
      }
    }
    n = out;
    if (l + 1 == net.depth()) {
      v.swap(zv);
      s.swap(zs);
      break;
    }
    std::vector<double> nt, nv, ns;
    nt.reserve(t.size());
    for (std::size_t j = 0; j < K; ++j) {
      const double t0 = t[j], t1 = t[j + 1], w = t1 - t0;
      cross.clear();
      for (std::size_t i = 0; i < n; ++i) {
        const double zl = zv[j * n + i], sl = zs[j * n + i], zr = zl + sl * w;
        if ((zl < 0 && zr > 0) || (zl > 0 && zr < 0)) {
          double x = t0 - zl / sl;
          if (x > t0 + tol && x < t1 - tol) cross.push_back(x);
        }
      }
      std::sort(cross.begin(), cross.end());
      double last = t0;
      auto emit = [&](double x0, double x1) {
        nt.push_back(x0);
        for (std::size_t i = 0; i < n; ++i) {
          const double sl = zs[j * n + i];
          double val = zv[j * n + i] + sl * (x0 - t0);
          const double mid = val + sl * (x1 - x0) / 2;
          if (mid > 0) {
            nv.push_back(val);
            ns.push_back(sl);
          } else {
            nv.push_back(0.0);
            ns.push_back(0.0);
          }
        }
      };
      for (double x : cross) {
        if (x - last <= tol) continue;
        emit(last, x);
        last = x;
      }
      emit(last, t1);
      if (nt.size() + 1 > max_knots) throw PieceLimitError("piece limit exceeded in exact_pwl");
      if (nt.size() * n > kMaxStateEntries) throw PieceLimitError("state too large in exact_pwl");
    }
    nt.push_back(b);
    t.swap(nt);
    v.swap(nv);
    s.swap(ns);
  }
  // merge collinear neighbours
  PwlFunction f;
  const std::size_t K = t.size() - 1;
  f.xs.push_back(t[0]);
  f.ys.push_back(v[0]);
  f.slopes.push_back(s[0]);
  for (std::size_t j = 1; j < K; ++j) {
    if (same_slope(s[j], f.slopes.back())) continue;
    f.xs.push_back(t[j]);
    f.ys.push_back(v[j]);
    f.slopes.push_back(s[j]);
  }
  f.xs.push_back(b);
  f.ys.push_back(v[K - 1] + s[K - 1] * (b - t[K - 1]));
  return f;
}

}  // namespace

PwlFunction exact_pwl(const ReluNetwork& net, double a, double b, std::size_t max_knots) {
  return propagate(net, a, b, max_knots, SIZE_MAX);
}

double log2_region_bound(const ReluNetwork& net) {
  const auto m = metrics(net);
  return double(m.depth) * std::log2(2.0 * double(m.width));
}

std::uint64_t count_linear_regions(const ReluNetwork& net, double a, double b) {
  return exact_pwl(net, a, b).pieces();
}

RegionReport region_report(const ReluNetwork& net, double a, double b) {
  RegionReport r;
  r.count = count_linear_regions(net, a, b);
  r.log2_bound = log2_region_bound(net);
  r.within_bound = std::log2(double(r.count)) <= r.log2_bound + 1e-12;
  return r;
}

std::uint64_t count_composed_regions(const PwlFunction& outer, const PwlFunction& inner) {
  const auto& ox = outer.xs;
  const std::size_t P = outer.pieces();
  // piece containing points just after (dir > 0) or just before (dir < 0) y
  auto piece = [&](double y, int dir) -> std::size_t {
    std::size_t p;
    if (dir > 0)
      p = std::size_t(std::upper_bound(ox.begin(), ox.end(), y) - ox.begin());
    else
      p = std::size_t(std::lower_bound(ox.begin(), ox.end(), y) - ox.begin());
    p = p == 0 ? 0 : p - 1;
    return std::min(p, P - 1);
  };
  auto interior_between = [&](double lo, double hi) -> std::uint64_t {  // lo < hi, open interval
    if (P < 2) return 0;
    auto b0 = ox.begin() + 1, b1 = ox.end() - 1;
    auto i0 = std::upper_bound(b0, b1, lo), i1 = std::lower_bound(b0, b1, hi);
    return i1 > i0 ? std::uint64_t(i1 - i0) : 0;
  };
  std::uint64_t total = 0;
  double prev_end = 0.0;
  bool have_prev = false;
  for (std::size_t j = 0; j < inner.pieces(); ++j) {
    const double ya = inner.ys[j], yb = inner.ys[j + 1], sg = inner.slopes[j];
    double start, end;
    std::uint64_t cnt;
    if (ya == yb || sg == 0.0) {
      cnt = 1;
      start = end = 0.0;
    } else if (yb > ya) {
      cnt = interior_between(ya, yb) + 1;
      start = outer.slopes[piece(ya, +1)] * sg;
      end = outer.slopes[piece(yb, -1)] * sg;
    } else {
      cnt = interior_between(yb, ya) + 1;
      start = outer.slopes[piece(ya, -1)] * sg;
      end = outer.slopes[piece(yb, +1)] * sg;
    }
    total += cnt;
    if (have_prev && same_slope(prev_end, start)) --total;
    prev_end = end;
    have_prev = true;
  }
  return total;
}

std::string ErrorReport::csv_header() { return "domain,grid_n,sup_error,l2_error,argmax"; }

std::string ErrorReport::csv_row() const {
  std::string dom;
  for (std::size_t i = 0; i < lo.size(); ++i)
    dom += (i ? "x" : "") + std::string("[") + num(lo[i]) + ";" + num(hi[i]) + "]";
  return dom + "," + std::to_string(grid_n) + "," + num(sup_error) + "," + num(l2_error) + "," +
         point(argmax);
}

ErrorReport sup_error(const ReluNetwork& net, const Scalar1& f, double a, double b,
                      std::size_t grid_n, std::size_t max_knots) {
  check_domain(a, b);
  if (grid_n < 2) throw ArgumentError("grid needs at least 2 points");
  if (net.input_dim() != 1 || net.output_dim() != 1) throw ShapeError("sup_error needs a 1-D network");
  ErrorReport r;
  r.lo = {a};
  r.hi = {b};
  r.grid_n = grid_n;
  auto xs = uniform(a, b, grid_n);
  auto ys = evaluate_batch(net, xs);
  double l2 = 0.0;
  const double h = (b - a) / double(grid_n - 1);
  r.argmax = {a};
  for (std::size_t i = 0; i < grid_n; ++i) {
    const double e = std::fabs(ys[i] - f(xs[i]));
    if (e > r.sup_error) {
      r.sup_error = e;
      r.argmax = {xs[i]};
    }
    l2 += (i == 0 || i + 1 == grid_n ? 0.5 : 1.0) * e * e;
  }
  r.l2_error = std::sqrt(l2 * h);
  try {
    // not worth more than a few grid passes
    const std::size_t budget = 4 * grid_n * std::max<std::size_t>(metrics(net).connectivity, 1);
    auto bp = propagate(net, a, b, max_knots, budget).breakpoints();
    auto yb = evaluate_batch(net, bp);
    for (std::size_t i = 0; i < bp.size(); ++i) {
      const double e = std::fabs(yb[i] - f(bp[i]));
      if (e > r.sup_error) {
        r.sup_error = e;
        r.argmax = {bp[i]};
      }
    }
    r.breakpoints_included = true;
  } catch (const PieceLimitError&) {
    r.breakpoints_included = false;
  }
  return r;
}

ErrorReport sup_error_box(const ReluNetwork& net, const ScalarN& f, const std::vector<double>& lo,
                          const std::vector<double>& hi, std::size_t grid_n) {
  const std::size_t d = lo.size();
  if (d == 0 || hi.size() != d) throw ArgumentError("empty domain");
  if (net.input_dim() != d || net.output_dim() != 1) throw ShapeError("domain dimension mismatch");
  for (std::size_t k = 0; k < d; ++k) check_domain(lo[k], hi[k]);
  if (grid_n < 2) throw ArgumentError("grid needs at least 2 points");
  ErrorReport r;
  r.lo = lo;
  r.hi = hi;
  r.grid_n = grid_n;
  std::vector<std::vector<double>> axes;
  double cell = 1.0;
  for (std::size_t k = 0; k < d; ++k) {
    axes.push_back(uniform(lo[k], hi[k], grid_n));
    cell *= (hi[k] - lo[k]) / double(grid_n - 1);
  }
  std::vector<std::size_t> idx(d, 0);
  const std::size_t chunk = 4096;
  std::vector<double> pts, wts;
  double l2 = 0.0;
  r.argmax = lo;
  auto flush = [&] {
    if (wts.empty()) return;
    auto ys = evaluate_batch(net, pts);
    for (std::size_t p = 0; p < wts.size(); ++p) {
      std::span<const double> x(&pts[p * d], d);
      const double e = std::fabs(ys[p] - f(x));
      if (e > r.sup_error) {
        r.sup_error = e;
        r.argmax.assign(x.begin(), x.end());
      }
      l2 += wts[p] * e * e;
    }
    pts.clear();
    wts.clear();
  };
  for (;;) {
    double w = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      pts.push_back(axes[k][idx[k]]);
      if (idx[k] == 0 || idx[k] + 1 == grid_n) w *= 0.5;
    }
    wts.push_back(w);
    if (wts.size() == chunk) flush();
    std::size_t k = 0;
    while (k < d && ++idx[k] == grid_n) idx[k++] = 0;
    if (k == d) break;
  }
  flush();
  r.l2_error = std::sqrt(l2 * cell);
  return r;
}

ErrorReport l2_error(const ReluNetwork& net, const Scalar1& f, double a, double b,
                     std::size_t grid_n, const std::vector<double>& target_breaks) {
  check_domain(a, b);
  if (grid_n < 2) throw ArgumentError("grid needs at least 2 points");
  PwlFunction p = exact_pwl(net, a, b);
  std::vector<double> cuts = uniform(a, b, grid_n);
  for (double x : p.breakpoints()) cuts.push_back(x);
  for (double x : target_breaks)
    if (x > a && x < b) cuts.push_back(x);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  ErrorReport r;
  r.lo = {a};
  r.hi = {b};
  r.grid_n = grid_n;
  r.breakpoints_included = true;
  r.argmax = {a};
  long double acc = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double x0 = cuts[i], x1 = cuts[i + 1], xm = x0 + (x1 - x0) / 2;
    const double l = std::nextafter(x0, x1), rr = std::nextafter(x1, x0);
    const double e0 = p(x0) - f(l), em = p(xm) - f(xm), e1 = p(x1) - f(rr);
    acc += (long double)(x1 - x0) / 6 * (e0 * e0 + 4 * em * em + e1 * e1);
    for (auto [x, e] : {std::pair{l, e0}, std::pair{xm, em}, std::pair{rr, e1}})
      if (std::fabs(e) > r.sup_error) {
        r.sup_error = std::fabs(e);
        r.argmax = {x};
      }
  }
  r.l2_error = std::sqrt(double(acc));
  return r;
}

double minimax_line_error(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n <= 2) return 0.0;
  // monotone-chain hulls; x assumed increasing
  std::vector<std::size_t> up, lo;
  auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    return (x[a] - x[o]) * (y[b] - y[o]) - (y[a] - y[o]) * (x[b] - x[o]);
  };
  for (std::size_t i = 0; i < n; ++i) {
    while (lo.size() >= 2 && cross(lo[lo.size() - 2], lo.back(), i) <= 0) lo.pop_back();
    lo.push_back(i);
    while (up.size() >= 2 && cross(up[up.size() - 2], up.back(), i) >= 0) up.pop_back();
    up.push_back(i);
  }
  std::vector<double> cand;
  for (std::size_t k = 0; k + 1 < lo.size(); ++k)
    cand.push_back((y[lo[k + 1]] - y[lo[k]]) / (x[lo[k + 1]] - x[lo[k]]));
  for (std::size_t k = 0; k + 1 < up.size(); ++k)
    cand.push_back((y[up[k + 1]] - y[up[k]]) / (x[up[k + 1]] - x[up[k]]));
  std::sort(cand.begin(), cand.end());
  auto width = [&](double s) {
    double mx = -std::numeric_limits<double>::infinity(), mn = -mx;
    for (std::size_t i : up) mx = std::max(mx, y[i] - s * x[i]);
    for (std::size_t i : lo) mn = std::min(mn, y[i] - s * x[i]);
    return mx - mn;
  };
  // convex in s; minimum sits at a candidate slope
  std::size_t l = 0, h = cand.size() - 1;
  while (l < h) {
    std::size_t mid = (l + h) / 2;
    if (width(cand[mid]) <= width(cand[mid + 1]))
      h = mid;
    else
      l = mid + 1;
  }
  return width(cand[l]) / 2;
}

std::size_t min_pieces(const Scalar1& f, double a, double b, double eps, std::size_t grid_n) {
  check_domain(a, b);
  if (!(eps > 0.0)) throw ArgumentError("eps must be positive");
  if (grid_n < 10) throw ResolutionError("grid too coarse");
  auto xs = uniform(a, b, grid_n);
  std::vector<double> ys(grid_n);
  for (std::size_t i = 0; i < grid_n; ++i) ys[i] = f(xs[i]);
  auto fits = [&](std::size_t i, std::size_t j) {
    return minimax_line_error(std::span(&xs[i], j - i + 1), std::span(&ys[i], j - i + 1)) <= eps;
  };
  std::size_t count = 0, i = 0;
  while (i < grid_n) {
    std::size_t good = i, step = 1;
    while (i + step < grid_n && fits(i, i + step)) {
      good = i + step;
      step *= 2;
    }
    std::size_t bad = std::min(i + step, grid_n);  // first failing end (or past the grid)
    while (bad - good > 1) {
      std::size_t mid = good + (bad - good) / 2;
      if (fits(i, mid))
        good = mid;
      else
        bad = mid;
    }
    ++count;
    if (good + 1 < grid_n && good - i + 1 < 10)
      throw ResolutionError("grid too coarse: fewer than 10 points in a piece");
    i = good + 1;
  }
  return count;
}

double frenzen_constant(const Scalar1& f2, double a, double b) {
  check_domain(a, b);
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto g = [&](double x) { return std::sqrt(std::fabs(f2(x))); };
  struct Seg {
    double lo, hi, I, err;
    bool operator<(const Seg& o) const { return err < o.err; }
  };
  auto rule = [&](double lo, double hi) {
    double e = 0.0;
    const double I = GK::integrate(g, lo, hi, 0, 0.0, &e);
    return Seg{lo, hi, I, e};
  };
  // global adaptive bisection of the worst segment; copes with sqrt kinks at zeros of f''
  std::priority_queue<Seg> q;
  q.push(rule(a, b));
  double I = q.top().I, E = q.top().err;
  for (int it = 0; E > 1e-8 * std::fabs(I) && E > 1e-15; ++it) {
    if (it == 500000 || !std::isfinite(I)) throw std::runtime_error("quadrature did not converge");
    Seg w = q.top();
    q.pop();
    const double mid = w.lo + (w.hi - w.lo) / 2;
    Seg l = rule(w.lo, mid), r = rule(mid, w.hi);
    I += l.I + r.I - w.I;
    E += l.err + r.err - w.err;
    q.push(l);
    q.push(r);
  }
  long double sum = 0;
  for (; !q.empty(); q.pop()) sum += q.top().I;
  return double(sum) / 4.0;
}

std::vector<double> cover_interval(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ArgumentError("eps must lie in (0, 1)");
  const std::size_t L = std::size_t(std::floor(1.0 / eps)) + 1;
  std::vector<double> c(L);
  for (std::size_t i = 0; i < L; ++i) c[i] = -double(L - 1) * eps + 2.0 * double(i) * eps;
  if (double(L) > 1.0 / eps + 1.0) throw std::logic_error("cover larger than 1/eps + 1");
  // every point of [-1,1] lies within eps of a center
  if (c.front() - eps > -1.0 || c.back() + eps < 1.0) throw std::logic_error("cover misses an end");
  return c;
}

std::vector<double> pack_exp_family(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ArgumentError("eps must lie in (0, 1)");
  const std::size_t T = std::size_t(std::floor((1.0 - 1.0 / std::exp(1.0)) / eps));
  std::vector<double> th{0.0};
  for (std::size_t i = 1; i <= T; ++i) th.push_back(-std::log(1.0 - eps * double(i)));
  for (std::size_t i = 0; i < th.size(); ++i)
    for (std::size_t j = i + 1; j < th.size(); ++j)
      if (std::fabs(std::exp(-th[i]) - std::exp(-th[j])) < eps * (1 - 1e-12))
        throw std::logic_error("packing separation violated");
  return th;
}

std::vector<double> pack_interval(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ArgumentError("eps must lie in (0, 1)");
  const std::size_t M = std::size_t(std::ceil(2.0 / eps));
  std::vector<double> p(M);
  for (std::size_t i = 0; i < M; ++i) p[i] = M == 1 ? 0.0 : -1.0 + 2.0 * double(i) / double(M - 1);
  return p;
}

}  // namespace relucalc
