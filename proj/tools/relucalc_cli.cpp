// relucalc: batch driver for constructors, codec and analyses.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <algorithm>
#include <numbers>
#include <optional>
#include <sstream>

#include "relucalc/analysis.hpp"
#include "relucalc/constructors.hpp"
#include "relucalc/io.hpp"
#include "relucalc/quantcode.hpp"

using namespace relucalc;

namespace {

constexpr int kOk = 0, kUsage = 2, kData = 3, kBreach = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Breach : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::size_t default_grid() {
  if (const char* s = std::getenv("RELUCALC_GRID_DEFAULT")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(s, &end, 10);
    if (end && *end == '\0' && v >= 2) return std::size_t(v);
    throw UsageError("RELUCALC_GRID_DEFAULT must be an integer >= 2");
  }
  return 100001;
}

struct Params {
  std::optional<double> eps, D, a, b, p;
  std::optional<int> m, s, k;
  std::vector<double> eps_list;
  std::optional<std::size_t> grid;
  std::string out;

  double need_eps() const {
    if (!eps) throw UsageError("--eps is required");
    return *eps;
  }
  std::size_t grid_n() const { return grid ? *grid : default_grid(); }
};

// A target: network builder plus the function it approximates on its box.
struct Target {
  ReluNetwork net = zero_network(1, 1);
  std::size_t dim = 1;
  double lo = 0.0, hi = 1.0;
  std::function<double(std::span<const double>)> f;
};

const std::vector<std::string> kConstructors = {"square",  "sawtooth",  "multiply", "cosine",
                                                "weierstrass", "bspline", "wavelet", "gaussian"};

Target make_target(const std::string& name, const Params& P, double eps) {
  auto f1 = [](std::function<double(double)> g) {
    return [g](std::span<const double> x) { return g(x[0]); };
  };
  Target t;
  const double D = P.D.value_or(1.0);
  if (name == "square") {
    t.net = P.m ? square_network_m(*P.m) : square_network(eps);
    t.f = f1([](double x) { return x * x; });
  } else if (name == "sawtooth") {
    const int s = P.s.value_or(0);
    if (!P.s) throw UsageError("sawtooth needs --s");
    t.net = sawtooth_network(s);
    t.f = f1([s](double x) {
      for (int i = 0; i < s; ++i) x = x < 0 || x > 1 ? 0 : (x < 0.5 ? 2 * x : 2 - 2 * x);
      return x;
    });
  } else if (name == "multiply") {
    t.net = multiply_network(D, eps);
    t.dim = 2;
    t.lo = -D;
    t.hi = D;
    t.f = [](std::span<const double> x) { return x[0] * x[1]; };
  } else if (name == "cosine") {
    const double a = P.a.value_or(1.0);
    t.net = cosine_network(a, D, eps);
    t.lo = -D;
    t.hi = D;
    t.f = f1([a](double x) { return std::cos(a * x); });
  } else if (name == "weierstrass") {
    const double p = P.p.value_or(0.4), a = P.a.value_or(3.0);
    t.net = weierstrass_network(p, a, D, eps);
    t.lo = -D;
    t.hi = D;
    t.f = f1([p, a](double x) { return weierstrass_reference(p, a, x); });
  } else if (name == "bspline") {
    const int m = P.m.value_or(2);
    t.net = bspline_network(m, eps);
    t.lo = -2.0;
    t.hi = m + 2.0;
    t.f = f1([m](double x) { return bspline(m, x); });
  } else if (name == "wavelet") {
    const int m = P.m.value_or(2);
    t.net = spline_wavelet_network(m, eps);
    t.lo = -2.0;
    t.hi = 2.0 * m + 1.0;
    t.f = f1([m](double x) { return spline_wavelet(m, x); });
  } else if (name == "gaussian") {
    const int d = P.m.value_or(1);
    if (d < 1) throw UsageError("gaussian dimension --m must be >= 1");
    t.net = gaussian_network(std::size_t(d), eps);
    t.dim = std::size_t(d);
    t.hi = gaussian_radius(eps) + 2.0;
    t.lo = -t.hi;
    t.f = [](std::span<const double> x) {
      double r = 0;
      for (double v : x) r += v * v;
      return std::exp(-r);
    };
  } else {
    throw UsageError("unknown constructor '" + name + "'");
  }
  return t;
}

ErrorReport measure(const Target& t, std::size_t grid) {
  if (t.dim == 1) return sup_error(t.net, [&](double x) { return t.f(std::span(&x, 1)); }, t.lo, t.hi, grid);
  // lattice budget for boxes
  std::size_t per = t.dim == 2 ? std::min<std::size_t>(grid, 513) : std::min<std::size_t>(grid, 65);
  return sup_error_box(t.net, t.f, std::vector<double>(t.dim, t.lo), std::vector<double>(t.dim, t.hi), per);
}

std::string metrics_header() { return "connectivity,depth,width,magnitude"; }
std::string metrics_row(const ReluNetwork& n) {
  auto m = metrics(n);
  return std::to_string(m.connectivity) + "," + std::to_string(m.depth) + "," + std::to_string(m.width) +
         "," + num(m.magnitude);
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw FormatError("cannot write " + out);
  f << text;
  if (!f) throw FormatError("write failed: " + out);
}

int cmd_build(const std::string& name, const Params& P) {
  if (std::find(kConstructors.begin(), kConstructors.end(), name) == kConstructors.end())
    throw UsageError("unknown constructor '" + name + "'");
  const bool needs_eps = name != "sawtooth" && !(name == "square" && P.m);
  Target t = make_target(name, P, needs_eps ? P.need_eps() : 0.25);
  save_network(P.out.empty() ? name + ".relunet" : P.out, t.net);
  std::cout << metrics_header() << "\n" << metrics_row(t.net) << "\n";
  return kOk;
}

int cmd_sweep(const std::string& name, const Params& P) {
  if (P.eps_list.empty()) throw UsageError("--eps-list must not be empty");
  for (double e : P.eps_list)
    if (!(e > 0.0 && e < 0.5)) throw UsageError("eps values must lie in (0, 1/2)");
  if (name == "sawtooth") throw UsageError("sawtooth has no accuracy parameter");
  std::ostringstream os;
  os << "eps,sup_error," << metrics_header() << "\n";
  bool ok = true;
  for (double e : P.eps_list) {
    Target t = make_target(name, P, e);
    auto r = measure(t, P.grid_n());
    ok = ok && r.sup_error <= e;
    os << num(e) << "," << num(r.sup_error) << "," << metrics_row(t.net) << "\n";
  }
  emit(P.out, os.str());
  if (!ok) throw Breach("measured error exceeds requested eps");
  return kOk;
}

int cmd_codec(const std::string& file, const Params& P) {
  const double eps = P.need_eps(), D = P.D.value_or(1.0);
  ReluNetwork net = load_network(file);
  const int k = P.k ? *P.k : minimal_quant_k(net, eps);
  auto q = quantize_network(net, k, D, eps);
  ReluNetwork qn = prune(q.net);
  BitString bits = encode(qn, q.m, eps);
  const std::uint64_t bound = code_length_bound(metrics(qn).connectivity, q.m, eps);
  ReluNetwork back = decode(bits, q.m, eps);
  const bool trip = is_empty_sentinel(back) ? metrics(qn).connectivity == 0 : back == qn;
  double dev = 0.0;
  if (net.output_dim() == 1 && metrics(qn).connectivity > 0) {
    const std::size_t d = net.input_dim();
    if (d == 1) {
      dev = sup_error(qn, [&](double x) { return evaluate(net, x); }, -D, D, P.grid_n()).sup_error;
    } else {
      auto f = [&](std::span<const double> x) { return evaluate(net, x)[0]; };
      dev = sup_error_box(qn, f, std::vector<double>(d, -D), std::vector<double>(d, D), d == 2 ? 257 : 17)
                .sup_error;
    }
  }
  if (!P.out.empty()) save_bits(P.out, bits);
  std::cout << "k,m,bits,bound,round_trip,deviation,eps\n"
            << k << "," << q.m << "," << bits.size() << "," << bound << "," << (trip ? "OK" : "FAIL") << ","
            << num(dev) << "," << num(eps) << "\n";
  if (!trip) throw Breach("round trip mismatch");
  if (bits.size() > bound) throw Breach("code length exceeds bound");
  if (dev > eps) throw Breach("quantized deviation exceeds eps");
  return kOk;
}

int cmd_regions(const std::string& file, const Params& P) {
  ReluNetwork net = load_network(file);
  const double lo = P.a.value_or(0.0), hi = P.b.value_or(1.0);
  auto r = region_report(net, lo, hi);
  std::ostringstream os;
  os << "a,b,count,bound,log2_count,log2_bound\n"
     << num(lo) << "," << num(hi) << "," << r.count << "," << num(std::exp2(r.log2_bound)) << ","
     << num(std::log2(double(r.count))) << "," << num(r.log2_bound) << "\n";
  emit(P.out, os.str());
  if (!r.within_bound) throw Breach("region count exceeds (2W)^L");
  return kOk;
}

int cmd_minpieces(const std::string& fname, const Params& P) {
  if (P.eps_list.empty() && !P.eps) throw UsageError("--eps-list or --eps required");
  std::vector<double> eps = P.eps_list.empty() ? std::vector<double>{*P.eps} : P.eps_list;
  for (double e : eps)
    if (!(e > 0.0)) throw UsageError("eps must be positive");
  const double D = P.D.value_or(1.0);
  Scalar1 f, f2;
  if (fname == "square") {
    f = [](double x) { return x * x; };
    f2 = [](double) { return 2.0; };
  } else if (fname == "cos_a") {
    const double a = P.a.value_or(1.0);
    f = [a](double x) { return std::cos(a * x); };
    f2 = [a](double x) { return -a * a * std::cos(a * x); };
  } else if (fname == "weierstrass_partial") {
    const double p = P.p.value_or(0.5), a = P.a.value_or(2.0);
    const int K = P.s.value_or(4);
    f = [=](double x) {
      double s = 0;
      for (int k = 0; k < K; ++k) s += std::pow(p, k) * std::cos(std::pow(a, k) * std::numbers::pi * x);
      return s;
    };
    f2 = [=](double x) {
      double s = 0;
      for (int k = 0; k < K; ++k) {
        const double w = std::pow(a, k) * std::numbers::pi;
        s -= std::pow(p, k) * w * w * std::cos(w * x);
      }
      return s;
    };
  } else {
    throw UsageError("unknown function '" + fname + "'");
  }
  if (!(D > 0.0)) throw UsageError("--D must be positive");
  const double c = frenzen_constant(f2, 0.0, D);
  std::ostringstream os;
  os << "eps,pieces,pieces_sqrt_eps,frenzen_constant\n";
  for (double e : eps) {
    auto n = min_pieces(f, 0.0, D, e, P.grid_n());
    os << num(e) << "," << n << "," << num(double(n) * std::sqrt(e)) << "," << num(c) << "\n";
  }
  emit(P.out, os.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relucalc: ReLU network constructions, codec and analysis"};
  app.require_subcommand(1);
  Params P;
  std::string target;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--eps", P.eps, "accuracy");
    c->add_option("--eps-list", P.eps_list, "comma separated accuracies")->delimiter(',');
    c->add_option("--D", P.D, "domain half width");
    c->add_option("--a", P.a, "frequency / dilation, or left end for regions");
    c->add_option("--b", P.b, "right end for regions");
    c->add_option("--m", P.m, "order / degree / dimension");
    c->add_option("--p", P.p, "decay parameter");
    c->add_option("--s", P.s, "sawtooth depth / term count");
    c->add_option("--k", P.k, "quantization exponent");
    c->add_option("--grid", P.grid, "grid points (env RELUCALC_GRID_DEFAULT)");
    c->add_option("--out", P.out, "output path");
  };
  auto* build = app.add_subcommand("build", "build a network and write it to a file");
  build->add_option("constructor", target, "one of: square sawtooth multiply cosine weierstrass bspline wavelet gaussian")
      ->required();
  auto* sweep = app.add_subcommand("sweep", "error and size per eps as CSV");
  sweep->add_option("constructor", target)->required();
  auto* codec = app.add_subcommand("codec", "quantize, encode, decode a network file");
  codec->add_option("file", target)->required();
  auto* regions = app.add_subcommand("regions", "count linear regions on [a, b]");
  regions->add_option("file", target)->required();
  auto* minp = app.add_subcommand("minpieces", "free-knot piece counts on [0, D]");
  minp->add_option("function", target, "square | cos_a | weierstrass_partial")->required();
  for (auto* c : {build, sweep, codec, regions, minp}) add_common(c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (P.grid && *P.grid < 2) throw UsageError("--grid must be >= 2");
    if (*build) return cmd_build(target, P);
    if (*sweep) return cmd_sweep(target, P);
    if (*codec) return cmd_codec(target, P);
    if (*regions) return cmd_regions(target, P);
    if (*minp) return cmd_minpieces(target, P);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const QuantPreconditionError& e) {
    std::cerr << "precondition: " << e.what() << " (minimal k = " << e.minimal_k << ")\n";
    return kUsage;
  } catch (const ArgumentError& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return kUsage;
  } catch (const Breach& e) {
    std::cerr << "postcondition violated: " << e.what() << "\n";
    return kBreach;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
