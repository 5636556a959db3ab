#include "relucalc/quantcode.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "relucalc/calculus.hpp"

namespace relucalc {

namespace {

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw ArgumentError("eps must lie in (0, 1/2)");
}

int bit_width(std::uint64_t n) {  // ceil(log2 n), n >= 1
  int w = 0;
  while ((std::uint64_t(1) << w) < n) ++w;
  return w;
}

// w * 2^E as an integer; w must lie on the lattice
mpz_class to_index(double w, long E) {
  if (w == 0.0) return 0;
  int e;
  double f = std::frexp(w, &e);
  mpz_class q = (long)std::ldexp(f, 53);
  long shift = long(e) - 53 + E;
  if (shift >= 0) {
    mpz_mul_2exp(q.get_mpz_t(), q.get_mpz_t(), shift);
  } else {
    if (!mpz_divisible_2exp_p(q.get_mpz_t(), -shift)) throw ArgumentError("weight is off the quantization grid");
    mpz_fdiv_q_2exp(q.get_mpz_t(), q.get_mpz_t(), -shift);
  }
  return q;
}

double from_index(const mpz_class& q, long E) {
  if (q == 0) return 0.0;
  mpz_class a = abs(q);
  mp_bitcnt_t tz = mpz_scan1(a.get_mpz_t(), 0);
  mpz_fdiv_q_2exp(a.get_mpz_t(), a.get_mpz_t(), tz);
  if (mpz_sizeinbase(a.get_mpz_t(), 2) > 53) throw CodecError("weight index not representable");
  double v = std::ldexp(a.get_d(), long(tz) - E);
  if (!std::isfinite(v) || v == 0.0) throw CodecError("weight index not representable");
  if (q < 0) v = -v;
  if (to_index(v, E) != q) throw CodecError("weight index not representable");
  return v;
}

class BitReader {
 public:
  explicit BitReader(const BitString& b) : b_(b) {}
  bool bit() {
    if (pos_ >= b_.size()) throw CodecError("truncated bit stream");
    return b_[pos_++];
  }
  std::uint64_t uint(int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v = (v << 1) | (bit() ? 1u : 0u);
    return v;
  }
  mpz_class big(int width) {
    mpz_class v = 0;
    for (int i = width - 1; i >= 0; --i)
      if (bit()) mpz_setbit(v.get_mpz_t(), i);
    return v;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  const BitString& b_;
  std::size_t pos_ = 0;
};

void push_big(BitString& out, const mpz_class& v, int width) {
  for (int i = width - 1; i >= 0; --i) out.push(mpz_tstbit(v.get_mpz_t(), i));
}

void push_weight(BitString& out, double w, const QuantGrid& g) {
  const int B = g.weight_bits();
  mpz_class q = to_index(w, g.exponent);
  mpz_class off = q;
  mpz_class half;
  mpz_ui_pow_ui(half.get_mpz_t(), 2, B - 1);
  off += half;
  if (off < 0 || mpz_sizeinbase(off.get_mpz_t(), 2) > std::size_t(B))
    throw ArgumentError("weight index overflows the weight field");
  push_big(out, off, B);
}

double read_weight(BitReader& r, const QuantGrid& g) {
  const int B = g.weight_bits();
  mpz_class half;
  mpz_ui_pow_ui(half.get_mpz_t(), 2, B - 1);
  return from_index(r.big(B) - half, g.exponent);
}

}  // namespace

int eps_bits(double eps) {
  check_eps(eps);
  return (int)std::ceil(std::log2(1.0 / eps));
}

QuantGrid::QuantGrid(int m_, double eps_) : m(m_), eps(eps_) {
  if (m < 1) throw ArgumentError("quantization degree m must be >= 1");
  exponent = long(m) * eps_bits(eps);
}

double QuantGrid::step() const { return std::ldexp(1.0, int(std::max(-100000L, -exponent))); }
double QuantGrid::log2_bound() const { return m * std::log2(1.0 / eps); }
double QuantGrid::bound() const { return std::pow(1.0 / eps, m); }

bool QuantGrid::contains(double w) const {
  if (!std::isfinite(w)) return false;
  if (w != 0.0 && std::log2(std::fabs(w)) > log2_bound()) return false;
  if (exponent >= 1074) return true;
  return std::ldexp(w, int(exponent)) == std::trunc(std::ldexp(w, int(exponent)));
}

double QuantGrid::round(double w) const {
  if (!std::isfinite(w)) throw ArgumentError("non-finite weight");
  if (w == 0.0) return 0.0;
  if (std::log2(std::fabs(w)) > log2_bound()) throw ArgumentError("weight exceeds quantization bound");
  if (exponent >= 1074 || std::fabs(w) >= std::ldexp(1.0, int(52 - exponent))) return w;
  const double t = std::ldexp(w, int(exponent));
  double r = std::trunc(t);
  const double frac = std::fabs(t - r);
  if (frac > 0.5) r += t > 0 ? 1.0 : -1.0;
  return std::ldexp(r, -int(exponent));
}

int quant_degree(int k, std::size_t depth, double D) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  const double cD = std::ceil(std::max(D, 1.0));
  return (int)std::ceil(3.0 * k * double(depth) + std::log2(cD));
}

int minimal_quant_k(const ReluNetwork& net, double eps) {
  check_eps(eps);
  auto mt = metrics(net);
  const double l = std::log2(1.0 / eps);
  int k = 1;
  if (mt.connectivity > 1) k = std::max(k, (int)std::ceil(std::log2(double(mt.connectivity)) / l));
  if (mt.magnitude > 1.0) k = std::max(k, (int)std::ceil(std::log2(mt.magnitude) / l));
  return k;
}

QuantizedNetwork quantize_network(const ReluNetwork& net, int k, double D, double eps) {
  check_eps(eps);
  if (k < 1) throw ArgumentError("k must be >= 1");
  auto mt = metrics(net);
  const double l = std::log2(1.0 / eps);
  const int kmin = minimal_quant_k(net, eps);
  if (mt.connectivity > 0 && std::log2(double(mt.connectivity)) > k * l)
    throw QuantPreconditionError("connectivity exceeds eps^-k; minimal k is " + std::to_string(kmin), kmin);
  if (mt.magnitude > 0.0 && std::log2(mt.magnitude) > k * l)
    throw QuantPreconditionError("weight magnitude exceeds eps^-k; minimal k is " + std::to_string(kmin), kmin);
  const int m = quant_degree(k, net.depth(), D);
  QuantGrid g(m, eps);
  std::vector<AffineLayer> L;
  for (const auto& layer : net.layers()) {
    Matrix A = layer.A;
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < A.cols(); ++j) A(i, j) = g.round(A(i, j));
    std::vector<double> b = layer.b;
    for (auto& v : b) v = g.round(v);
    L.emplace_back(std::move(A), std::move(b));
  }
  return {ReluNetwork(std::move(L)), m, g};
}

BitString::BitString(const std::string& s) {
  for (char c : s) {
    if (c == '0' || c == '1')
      bits_.push_back(c == '1');
    else
      throw CodecError("bit strings contain only 0 and 1");
  }
}

void BitString::push_uint(std::uint64_t v, int width) {
  if (width < 64 && (v >> width) != 0) throw ArgumentError("value does not fit the bit field");
  for (int i = width - 1; i >= 0; --i) bits_.push_back((v >> i) & 1u);
}

void BitString::append(const BitString& o) { bits_.insert(bits_.end(), o.bits_.begin(), o.bits_.end()); }

std::string BitString::str() const {
  std::string s;
  s.reserve(bits_.size());
  for (bool b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

BitString encode(const ReluNetwork& net, int m, double eps) {
  QuantGrid g(m, eps);
  const auto mt = metrics(net);
  const std::uint64_t M = mt.connectivity;
  BitString out;
  if (M == 0) {
    out.push(false);
    return out;
  }
  if (!is_nondegenerate(net)) throw ArgumentError("network is degenerate; prune it first");
  for (const auto& layer : net.layers()) {
    for (double v : layer.A.data())
      if (!g.contains(v)) throw ArgumentError("weight is off the quantization grid");
    for (double v : layer.b)
      if (!g.contains(v)) throw ArgumentError("weight is off the quantization grid");
  }
  const auto dims = net.dims();
  const std::size_t L = net.depth();
  std::uint64_t N = 0;
  std::vector<std::uint64_t> offset(dims.size());
  for (std::size_t l = 0; l < dims.size(); ++l) {
    offset[l] = N + 1;
    N += dims[l];
  }
  const int wM = std::max(1, bit_width(M));
  const int wN = bit_width(N + 1);

  for (std::uint64_t i = 0; i < M; ++i) out.push(true);
  out.push(false);
  out.push_uint(L - 1, wM);
  for (auto n : dims) out.push_uint(n - 1, wM);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& A = net.layer(l).A;
    for (std::size_t j = 0; j < dims[l]; ++j) {
      for (std::size_t i = 0; i < dims[l + 1]; ++i)
        if (A(i, j) != 0.0) out.push_uint(offset[l + 1] + i, wN);
      out.push_uint(0, wN);
    }
  }
  for (std::size_t l = 0; l < L; ++l) {
    const auto& A = net.layer(l).A;
    for (std::size_t j = 0; j < dims[l]; ++j) {
      push_weight(out, l == 0 ? 0.0 : net.layer(l - 1).b[j], g);
      for (std::size_t i = 0; i < dims[l + 1]; ++i)
        if (A(i, j) != 0.0) push_weight(out, A(i, j), g);
    }
  }
  for (double v : net.layers().back().b) push_weight(out, v, g);
  return out;
}

ReluNetwork decode(const BitString& bits, int m, double eps) {
  QuantGrid g(m, eps);
  BitReader r(bits);
  std::uint64_t M = 0;
  while (r.bit()) {
    if (++M > bits.size()) throw CodecError("truncated bit stream");
  }
  if (M == 0) {
    if (!r.done()) throw CodecError("trailing bits after empty network");
    return zero_network(1, 1);
  }
  const int wM = std::max(1, bit_width(M));
  const std::uint64_t L = r.uint(wM) + 1;
  if (L > M) throw CodecError("depth inconsistent with connectivity");
  std::vector<std::size_t> dims(L + 1);
  std::uint64_t N = 0;
  std::vector<std::uint64_t> offset(L + 1);
  for (std::size_t l = 0; l <= L; ++l) {
    dims[l] = r.uint(wM) + 1;
    offset[l] = N + 1;
    N += dims[l];
    if (N > 3 * M) throw CodecError("layer sizes inconsistent with connectivity");
  }
  const int wN = bit_width(N + 1);
  // children[l][j] = rows i of layer l+1
  std::vector<std::vector<std::vector<std::size_t>>> children(L);
  std::uint64_t edges = 0;
  for (std::size_t l = 0; l < L; ++l) {
    children[l].resize(dims[l]);
    for (std::size_t j = 0; j < dims[l]; ++j) {
      std::uint64_t prev = 0;
      for (;;) {
        std::uint64_t c = r.uint(wN);
        if (c == 0) break;
        if (c < offset[l + 1] || c >= offset[l + 1] + dims[l + 1])
          throw CodecError("child index outside the next layer");
        if (c <= prev) throw CodecError("child indices not ascending");
        prev = c;
        children[l][j].push_back(c - offset[l + 1]);
        if (++edges > M) throw CodecError("more edges than connectivity");
      }
    }
  }
  std::vector<Matrix> A(L);
  std::vector<std::vector<double>> b(L);
  for (std::size_t l = 0; l < L; ++l) {
    A[l] = Matrix(dims[l + 1], dims[l]);
    b[l].assign(dims[l + 1], 0.0);
  }
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t j = 0; j < dims[l]; ++j) {
      double nw = read_weight(r, g);
      if (l == 0) {
        if (nw != 0.0) throw CodecError("input node carries a nonzero weight");
      } else {
        b[l - 1][j] = nw;
      }
      for (std::size_t i : children[l][j]) {
        double w = read_weight(r, g);
        if (w == 0.0) throw CodecError("edge with zero weight");
        A[l](i, j) = w;
      }
    }
  }
  for (std::size_t i = 0; i < dims[L]; ++i) b[L - 1][i] = read_weight(r, g);
  if (!r.done()) throw CodecError("trailing bits after network");
  std::vector<AffineLayer> layers;
  for (std::size_t l = 0; l < L; ++l) layers.emplace_back(std::move(A[l]), std::move(b[l]));
  ReluNetwork net(std::move(layers));
  if (metrics(net).connectivity != M) throw CodecError("connectivity mismatch");
  if (!is_nondegenerate(net)) throw CodecError("decoded network is degenerate");
  return net;
}

bool is_empty_sentinel(const ReluNetwork& net) {
  return net.depth() == 1 && net.input_dim() == 1 && net.output_dim() == 1 &&
         metrics(net).connectivity == 0;
}

std::uint64_t code_length_bound(std::uint64_t M, int m, double eps) {
  if (M == 0) return 1;
  const std::uint64_t B = 2 * (std::uint64_t(m) * eps_bits(eps) + 1);
  return 3 * M * B + 3 * M * bit_width(2 * M) + (M + 2) * bit_width(M) + M + 1;
}

void write_bits(std::ostream& os, const BitString& bits) {
  const std::uint64_t n = bits.size();
  for (int i = 7; i >= 0; --i) os.put(char((n >> (8 * i)) & 0xff));
  for (std::uint64_t i = 0; i < n; i += 8) {
    unsigned char c = 0;
    for (int k = 0; k < 8; ++k) c = (unsigned char)((c << 1) | (i + k < n && bits[i + k] ? 1 : 0));
    os.put(char(c));
  }
  if (!os) throw CodecError("write failed");
}

BitString read_bits(std::istream& is) {
  std::uint64_t n = 0;
  for (int i = 0; i < 8; ++i) {
    int c = is.get();
    if (c == EOF) throw CodecError("truncated bit file header");
    n = (n << 8) | std::uint64_t(c);
  }
  BitString out;
  const std::uint64_t bytes = (n + 7) / 8;
  for (std::uint64_t i = 0; i < bytes; ++i) {
    int c = is.get();
    if (c == EOF) throw CodecError("truncated bit file");
    for (int k = 7; k >= 0; --k) {
      if (out.size() < n)
        out.push((c >> k) & 1);
      else if ((c >> k) & 1)
        throw CodecError("nonzero padding bits");
    }
  }
  if (is.get() != EOF) throw CodecError("trailing bytes in bit file");
  return out;
}

void save_bits(const std::string& path, const BitString& bits) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CodecError("cannot open " + path);
  write_bits(os, bits);
}

BitString load_bits(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CodecError("cannot open " + path);
  return read_bits(is);
}

}  // namespace relucalc
