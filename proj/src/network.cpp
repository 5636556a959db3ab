#include "relucalc/network.hpp"

#include <algorithm>
#include <cmath>

namespace relucalc {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), a_(std::move(data)) {
  if (a_.size() != rows * cols) throw ShapeError("matrix data size mismatch");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::operator*(const Matrix& o) const {
  if (cols_ != o.rows_) throw ShapeError("matrix product dimension mismatch");
  Matrix r(rows_, o.cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < o.cols_; ++j) {
      ExactSum s;
      for (std::size_t k = 0; k < cols_; ++k) s.add_product((*this)(i, k), o(k, j));
      r(i, j) = s.result();
    }
  return r;
}

std::vector<double> Matrix::operator*(std::span<const double> v) const {
  if (cols_ != v.size()) throw ShapeError("matrix-vector dimension mismatch");
  std::vector<double> r(rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    ExactSum s;
    for (std::size_t k = 0; k < cols_; ++k) s.add_product((*this)(i, k), v[k]);
    r[i] = s.result();
  }
  return r;
}

Matrix Matrix::scaled(double s) const {
  Matrix r = *this;
  for (double& x : r.a_) x *= s;
  return r;
}

AffineLayer::AffineLayer(Matrix A_, std::vector<double> b_) : A(std::move(A_)), b(std::move(b_)) {
  if (A.rows() != b.size()) throw ShapeError("layer matrix rows must equal bias length");
  if (A.rows() == 0 || A.cols() == 0) throw ShapeError("layer dimensions must be positive");
  for (double x : A.data())
    if (!std::isfinite(x)) throw ArgumentError("non-finite layer weight");
  for (double x : b)
    if (!std::isfinite(x)) throw ArgumentError("non-finite layer bias");
}

ReluNetwork::ReluNetwork(std::vector<AffineLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("network needs at least one layer");
  for (std::size_t l = 1; l < layers_.size(); ++l)
    if (layers_[l].in_dim() != layers_[l - 1].out_dim())
      throw ShapeError("consecutive layer dimensions do not match");
}

std::vector<std::size_t> ReluNetwork::dims() const {
  std::vector<std::size_t> d{input_dim()};
  for (const auto& L : layers_) d.push_back(L.out_dim());
  return d;
}

void ExactSum::add(double x) {
  if (x == 0.0) return;
  std::size_t i = 0;
  for (std::size_t j = 0; j < n_; ++j) {
    double y = p_[j];
    if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
    double hi = x + y;
    double lo = y - (hi - x);
    if (lo != 0.0) p_[i++] = lo;
    x = hi;
  }
  if (i >= kMax) throw std::runtime_error("ExactSum partials overflow");
  p_[i++] = x;
  n_ = i;
}

void ExactSum::add_product(double a, double b) {
  if (a == 0.0 || b == 0.0) return;
  double p = a * b;
  double e = std::fma(a, b, -p);
  add(p);
  add(e);
}

double ExactSum::result() const {
  std::size_t n = n_;
  double hi = 0.0, lo = 0.0;
  if (n > 0) {
    hi = p_[--n];
    while (n > 0) {
      double x = hi;
      double y = p_[--n];
      hi = x + y;
      double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && p_[n - 1] < 0.0) || (lo > 0.0 && p_[n - 1] > 0.0))) {
      double y = lo * 2.0;
      double x = hi + y;
      double yr = x - hi;
      if (y == yr) hi = x;
    }
  }
  return hi;
}

std::vector<double> evaluate(const ReluNetwork& net, std::span<const double> x) {
  if (x.size() != net.input_dim())
    throw ShapeError("input length " + std::to_string(x.size()) + " does not match input dim " +
                     std::to_string(net.input_dim()));
  std::vector<double> cur(x.begin(), x.end()), next;
  const std::size_t L = net.depth();
  ExactSum s;
  for (std::size_t l = 0; l < L; ++l) {
    const auto& layer = net.layer(l);
    next.assign(layer.out_dim(), 0.0);
    for (std::size_t i = 0; i < layer.out_dim(); ++i) {
      s.clear();
      s.add(layer.b[i]);
      for (std::size_t j = 0; j < layer.in_dim(); ++j) s.add_product(layer.A(i, j), cur[j]);
      double v = s.result();
      next[i] = (l + 1 < L) ? std::max(v, 0.0) : v;
    }
    cur.swap(next);
  }
  return cur;
}

double evaluate(const ReluNetwork& net, double x) {
  if (net.input_dim() != 1 || net.output_dim() != 1)
    throw ShapeError("scalar evaluate needs a 1-in 1-out network");
  double in[1] = {x};
  return evaluate(net, std::span<const double>(in, 1))[0];
}

namespace {

struct SparseRow {
  std::vector<std::size_t> idx;
  std::vector<double> w;
  double bias;
};

}  // namespace

std::vector<double> evaluate_batch(const ReluNetwork& net, std::span<const double> xs) {
  const std::size_t d = net.input_dim();
  if (xs.size() % d != 0) throw ShapeError("batch input not a multiple of input dim");
  const std::size_t n = xs.size() / d;
  const std::size_t dout = net.output_dim();
  const std::size_t L = net.depth();

  std::vector<std::vector<SparseRow>> rows(L);
  std::size_t wmax = d;
  for (std::size_t l = 0; l < L; ++l) {
    const auto& layer = net.layer(l);
    wmax = std::max(wmax, layer.out_dim());
    for (std::size_t i = 0; i < layer.out_dim(); ++i) {
      SparseRow r{{}, {}, layer.b[i]};
      for (std::size_t j = 0; j < layer.in_dim(); ++j)
        if (layer.A(i, j) != 0.0) {
          r.idx.push_back(j);
          r.w.push_back(layer.A(i, j));
        }
      rows[l].push_back(std::move(r));
    }
  }

  constexpr std::size_t kChunk = 256;
  std::vector<double> out(n * dout);
  std::vector<double> a(wmax * kChunk), b(wmax * kChunk);
  for (std::size_t p0 = 0; p0 < n; p0 += kChunk) {
    const std::size_t c = std::min(kChunk, n - p0);
    for (std::size_t p = 0; p < c; ++p)
      for (std::size_t j = 0; j < d; ++j) a[j * kChunk + p] = xs[(p0 + p) * d + j];
    for (std::size_t l = 0; l < L; ++l) {
      const bool hidden = l + 1 < L;
      for (std::size_t i = 0; i < rows[l].size(); ++i) {
        const auto& r = rows[l][i];
        double* o = &b[i * kChunk];
        for (std::size_t p = 0; p < c; ++p) o[p] = r.bias;
        for (std::size_t k = 0; k < r.idx.size(); ++k) {
          const double w = r.w[k];
          const double* in = &a[r.idx[k] * kChunk];
          for (std::size_t p = 0; p < c; ++p) o[p] += w * in[p];
        }
        if (hidden)
          for (std::size_t p = 0; p < c; ++p) o[p] = o[p] > 0.0 ? o[p] : 0.0;
      }
      a.swap(b);
    }
    for (std::size_t p = 0; p < c; ++p)
      for (std::size_t i = 0; i < dout; ++i) out[(p0 + p) * dout + i] = a[i * kChunk + p];
  }
  return out;
}

NetworkMetrics metrics(const ReluNetwork& net) {
  NetworkMetrics m;
  m.depth = net.depth();
  m.width = net.input_dim();
  for (const auto& layer : net.layers()) {
    m.width = std::max(m.width, layer.out_dim());
    for (double x : layer.A.data()) {
      if (x != 0.0) ++m.connectivity;
      m.magnitude = std::max(m.magnitude, std::fabs(x));
    }
    for (double x : layer.b) {
      if (x != 0.0) ++m.connectivity;
      m.magnitude = std::max(m.magnitude, std::fabs(x));
    }
  }
  return m;
}

}  // namespace relucalc
