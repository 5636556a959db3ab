#include "relucalc/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace relucalc {

namespace {

Matrix block_diag(const std::vector<const Matrix*>& ms) {
  std::size_t r = 0, c = 0;
  for (auto* m : ms) {
    r += m->rows();
    c += m->cols();
  }
  Matrix out(r, c);
  std::size_t r0 = 0, c0 = 0;
  for (auto* m : ms) {
    for (std::size_t i = 0; i < m->rows(); ++i)
      for (std::size_t j = 0; j < m->cols(); ++j) out(r0 + i, c0 + j) = (*m)(i, j);
    r0 += m->rows();
    c0 += m->cols();
  }
  return out;
}

Matrix vstack(const std::vector<const Matrix*>& ms) {
  std::size_t r = 0, c = ms.front()->cols();
  for (auto* m : ms) {
    if (m->cols() != c) throw ShapeError("vstack column mismatch");
    r += m->rows();
  }
  Matrix out(r, c);
  std::size_t r0 = 0;
  for (auto* m : ms) {
    for (std::size_t i = 0; i < m->rows(); ++i)
      for (std::size_t j = 0; j < c; ++j) out(r0 + i, j) = (*m)(i, j);
    r0 += m->rows();
  }
  return out;
}

Matrix hstack_scaled(const std::vector<const Matrix*>& ms, const std::vector<double>& s) {
  std::size_t r = ms.front()->rows(), c = 0;
  for (auto* m : ms) {
    if (m->rows() != r) throw ShapeError("hstack row mismatch");
    c += m->cols();
  }
  Matrix out(r, c);
  std::size_t c0 = 0;
  for (std::size_t k = 0; k < ms.size(); ++k) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < ms[k]->cols(); ++j) out(i, c0 + j) = s[k] * (*ms[k])(i, j);
    c0 += ms[k]->cols();
  }
  return out;
}

std::vector<double> concat(const std::vector<const std::vector<double>*>& vs) {
  std::vector<double> out;
  for (auto* v : vs) out.insert(out.end(), v->begin(), v->end());
  return out;
}

std::vector<double> weighted_sum(const std::vector<const std::vector<double>*>& vs,
                                 const std::vector<double>& s) {
  std::vector<double> out(vs.front()->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    ExactSum acc;
    for (std::size_t k = 0; k < vs.size(); ++k) acc.add_product(s[k], (*vs[k])[i]);
    out[i] = acc.result();
  }
  return out;
}

Matrix split_rows(const Matrix& A) {  // [A; -A]
  Matrix out(2 * A.rows(), A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) {
      out(i, j) = A(i, j);
      out(A.rows() + i, j) = -A(i, j);
    }
  return out;
}

Matrix merge_cols(const Matrix& A) {  // A [I -I]
  Matrix out(A.rows(), 2 * A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) {
      out(i, j) = A(i, j);
      out(i, A.cols() + j) = -A(i, j);
    }
  return out;
}

std::vector<double> split_bias(const std::vector<double>& b) {
  std::vector<double> out(b);
  for (double x : b) out.push_back(-x);
  return out;
}

void require_nonempty(const std::vector<ReluNetwork>& nets) {
  if (nets.empty()) throw ArgumentError("empty network list");
}

void require_equal_depth(const std::vector<ReluNetwork>& nets) {
  require_nonempty(nets);
  for (const auto& n : nets)
    if (n.depth() != nets.front().depth())
      throw ShapeError("networks must have equal depth (pad with extend_depth)");
}

int ceil_log2(double a) {  // a > 0
  int e;
  double f = std::frexp(a, &e);
  return f == 0.5 ? e - 1 : e;
}

// Lemma A.1 block for one coordinate: 2^(K+1) alpha x with K+1 doublings.
std::vector<AffineLayer> scalar_mult_layers(double alpha, int doublings) {
  std::vector<AffineLayer> L;
  L.emplace_back(Matrix(2, 1, {1.0, -1.0}), std::vector<double>(2, 0.0));
  L.emplace_back(Matrix(3, 2, {1, 0, 1, 1, 0, 1}), std::vector<double>(3, 0.0));
  for (int k = 0; k < doublings; ++k)
    L.emplace_back(Matrix(3, 3, {1, 1, -1, 1, 1, 1, -1, 1, 1}), std::vector<double>(3, 0.0));
  L.emplace_back(Matrix(1, 3, {alpha, 0.0, -alpha}), std::vector<double>(1, 0.0));
  return L;
}

ReluNetwork scalar_mult_pow2(int k, std::size_t d) {  // x -> 2^k x, k >= 1
  ReluNetwork one(scalar_mult_layers(1.0, k));
  if (d == 1) return one;
  return parallelize(std::vector<ReluNetwork>(d, one));
}

}  // namespace

ReluNetwork affine_layer_network(Matrix A, std::vector<double> b) {
  std::vector<AffineLayer> L;
  L.emplace_back(std::move(A), std::move(b));
  return ReluNetwork(std::move(L));
}

ReluNetwork zero_network(std::size_t d_in, std::size_t d_out) {
  return affine_layer_network(Matrix(d_out, d_in), std::vector<double>(d_out, 0.0));
}

ReluNetwork identity_network(std::size_t d, std::size_t L) {
  if (L == 0) throw ArgumentError("identity depth must be positive");
  if (L == 1) return affine_layer_network(Matrix::identity(d), std::vector<double>(d, 0.0));
  std::vector<AffineLayer> layers;
  layers.emplace_back(split_rows(Matrix::identity(d)), std::vector<double>(2 * d, 0.0));
  for (std::size_t k = 0; k + 2 < L; ++k)
    layers.emplace_back(Matrix::identity(2 * d), std::vector<double>(2 * d, 0.0));
  layers.emplace_back(merge_cols(Matrix::identity(d)), std::vector<double>(d, 0.0));
  return ReluNetwork(std::move(layers));
}

ReluNetwork compose(const ReluNetwork& outer, const ReluNetwork& inner) {
  if (inner.output_dim() != outer.input_dim())
    throw ShapeError("compose: inner output dim " + std::to_string(inner.output_dim()) +
                     " != outer input dim " + std::to_string(outer.input_dim()));
  std::vector<AffineLayer> L(inner.layers().begin(), inner.layers().end() - 1);
  const auto& last = inner.layers().back();
  L.emplace_back(split_rows(last.A), split_bias(last.b));
  const auto& first = outer.layers().front();
  L.emplace_back(merge_cols(first.A), first.b);
  L.insert(L.end(), outer.layers().begin() + 1, outer.layers().end());
  return ReluNetwork(std::move(L));
}

ReluNetwork extend_depth(const ReluNetwork& net, std::size_t K) {
  const std::size_t L = net.depth();
  if (K <= L)
    throw ArgumentError("extend_depth: K=" + std::to_string(K) + " must exceed depth " +
                        std::to_string(L));
  const std::size_t d2 = net.output_dim();
  std::vector<AffineLayer> layers(net.layers().begin(), net.layers().end() - 1);
  // The last bias rides on the final layer so it is not stored twice.
  const auto& last = net.layers().back();
  layers.emplace_back(split_rows(last.A), std::vector<double>(2 * d2, 0.0));
  for (std::size_t k = 0; k + L + 1 < K; ++k)
    layers.emplace_back(Matrix::identity(2 * d2), std::vector<double>(2 * d2, 0.0));
  layers.emplace_back(merge_cols(Matrix::identity(d2)), last.b);
  return ReluNetwork(std::move(layers));
}

std::vector<ReluNetwork> pad_to_common_depth(const std::vector<ReluNetwork>& nets) {
  require_nonempty(nets);
  std::size_t K = 0;
  for (const auto& n : nets) K = std::max(K, n.depth());
  std::vector<ReluNetwork> out;
  for (const auto& n : nets) out.push_back(n.depth() == K ? n : extend_depth(n, K));
  return out;
}

ReluNetwork parallelize(const std::vector<ReluNetwork>& nets) {
  require_equal_depth(nets);
  if (nets.size() == 1) return nets.front();
  std::vector<AffineLayer> layers;
  for (std::size_t l = 0; l < nets.front().depth(); ++l) {
    std::vector<const Matrix*> ms;
    std::vector<const std::vector<double>*> bs;
    for (const auto& n : nets) {
      ms.push_back(&n.layer(l).A);
      bs.push_back(&n.layer(l).b);
    }
    layers.emplace_back(block_diag(ms), concat(bs));
  }
  return ReluNetwork(std::move(layers));
}

ReluNetwork linear_combination(const std::vector<ReluNetwork>& nets,
                               const std::vector<double>& coeffs) {
  require_equal_depth(nets);
  if (coeffs.size() != nets.size()) throw ArgumentError("coefficient count mismatch");
  for (const auto& n : nets)
    if (n.output_dim() != nets.front().output_dim())
      throw ShapeError("linear_combination: output dims differ");
  std::vector<AffineLayer> layers;
  const std::size_t L = nets.front().depth();
  for (std::size_t l = 0; l + 1 < L; ++l) {
    std::vector<const Matrix*> ms;
    std::vector<const std::vector<double>*> bs;
    for (const auto& n : nets) {
      ms.push_back(&n.layer(l).A);
      bs.push_back(&n.layer(l).b);
    }
    layers.emplace_back(block_diag(ms), concat(bs));
  }
  std::vector<const Matrix*> ms;
  std::vector<const std::vector<double>*> bs;
  for (const auto& n : nets) {
    ms.push_back(&n.layers().back().A);
    bs.push_back(&n.layers().back().b);
  }
  layers.emplace_back(hstack_scaled(ms, coeffs), weighted_sum(bs, coeffs));
  return ReluNetwork(std::move(layers));
}

ReluNetwork parallelize_shared(const std::vector<ReluNetwork>& nets) {
  require_equal_depth(nets);
  for (const auto& n : nets)
    if (n.input_dim() != nets.front().input_dim())
      throw ShapeError("parallelize_shared: input dims differ");
  if (nets.size() == 1) return nets.front();
  std::vector<AffineLayer> layers;
  for (std::size_t l = 0; l < nets.front().depth(); ++l) {
    std::vector<const Matrix*> ms;
    std::vector<const std::vector<double>*> bs;
    for (const auto& n : nets) {
      ms.push_back(&n.layer(l).A);
      bs.push_back(&n.layer(l).b);
    }
    layers.emplace_back(l == 0 ? vstack(ms) : block_diag(ms), concat(bs));
  }
  return ReluNetwork(std::move(layers));
}

ReluNetwork linear_combination_shared(const std::vector<ReluNetwork>& nets,
                                      const std::vector<double>& coeffs) {
  require_equal_depth(nets);
  if (coeffs.size() != nets.size()) throw ArgumentError("coefficient count mismatch");
  for (const auto& n : nets) {
    if (n.input_dim() != nets.front().input_dim())
      throw ShapeError("linear_combination_shared: input dims differ");
    if (n.output_dim() != nets.front().output_dim())
      throw ShapeError("linear_combination_shared: output dims differ");
  }
  const std::size_t L = nets.front().depth();
  if (L == 1) {
    const std::size_t r = nets.front().output_dim(), c = nets.front().input_dim();
    Matrix A(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        ExactSum s;
        for (std::size_t k = 0; k < nets.size(); ++k) s.add_product(coeffs[k], nets[k].layer(0).A(i, j));
        A(i, j) = s.result();
      }
    std::vector<const std::vector<double>*> bs;
    for (const auto& n : nets) bs.push_back(&n.layer(0).b);
    return affine_layer_network(std::move(A), weighted_sum(bs, coeffs));
  }
  std::vector<AffineLayer> layers;
  for (std::size_t l = 0; l + 1 < L; ++l) {
    std::vector<const Matrix*> ms;
    std::vector<const std::vector<double>*> bs;
    for (const auto& n : nets) {
      ms.push_back(&n.layer(l).A);
      bs.push_back(&n.layer(l).b);
    }
    layers.emplace_back(l == 0 ? vstack(ms) : block_diag(ms), concat(bs));
  }
  std::vector<const Matrix*> ms;
  std::vector<const std::vector<double>*> bs;
  for (const auto& n : nets) {
    ms.push_back(&n.layers().back().A);
    bs.push_back(&n.layers().back().b);
  }
  layers.emplace_back(hstack_scaled(ms, coeffs), weighted_sum(bs, coeffs));
  return ReluNetwork(std::move(layers));
}

ReluNetwork scalar_mult_network(double a, std::size_t d) {
  if (d == 0) throw ArgumentError("dimension must be positive");
  if (!std::isfinite(a)) throw ArgumentError("scalar must be finite");
  if (std::fabs(a) <= 1.0)
    return affine_layer_network(Matrix::identity(d).scaled(a), std::vector<double>(d, 0.0));
  // K = ceil(log|a|) - 1 doublings beyond the first; alpha in (1/2, 1].
  const int K = ceil_log2(std::fabs(a)) - 1;
  const double alpha = std::ldexp(a, -(K + 1));
  ReluNetwork one(scalar_mult_layers(alpha, K + 1));
  if (d == 1) return one;
  return parallelize(std::vector<ReluNetwork>(d, one));
}

ReluNetwork affine_network(const Matrix& A, const std::vector<double>& b) {
  double a = 1.0;
  for (double x : A.data()) a = std::max(a, std::fabs(x));
  for (double x : b) a = std::max(a, std::fabs(x));
  if (a <= 1.0) return affine_layer_network(A, b);
  const int e = ceil_log2(a);
  std::vector<double> bs(b);
  for (double& x : bs) x = std::ldexp(x, -e);
  ReluNetwork inner = affine_layer_network(A.scaled(std::ldexp(1.0, -e)), std::move(bs));
  return compose(scalar_mult_pow2(e, A.rows()), inner);
}

ReluNetwork reduce_weights(const ReluNetwork& net) {
  const double B = metrics(net).magnitude;
  if (B <= 1.0) return net;
  const int e = ceil_log2(B);
  std::vector<AffineLayer> layers;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& layer = net.layer(l);
    std::vector<double> b(layer.b);
    for (double& x : b) x = std::ldexp(x, -e * static_cast<int>(l + 1));
    layers.emplace_back(layer.A.scaled(std::ldexp(1.0, -e)), std::move(b));
  }
  return compose(scalar_mult_pow2(e * static_cast<int>(net.depth()), net.output_dim()),
                 ReluNetwork(std::move(layers)));
}

ReluNetwork precompose_affine(const ReluNetwork& net, const Matrix& M, const std::vector<double>& c) {
  if (M.rows() != net.input_dim() || c.size() != M.rows())
    throw ShapeError("precompose_affine dimension mismatch");
  std::vector<AffineLayer> layers(net.layers());
  const auto& f = net.layers().front();
  std::vector<double> b = f.A * std::span<const double>(c);
  for (std::size_t i = 0; i < b.size(); ++i) {
    ExactSum s;
    s.add(b[i]);
    s.add(f.b[i]);
    b[i] = s.result();
  }
  layers.front() = AffineLayer(f.A * M, std::move(b));
  return ReluNetwork(std::move(layers));
}

ReluNetwork postcompose_affine(const Matrix& M, const std::vector<double>& c, const ReluNetwork& net) {
  if (M.cols() != net.output_dim() || c.size() != M.rows())
    throw ShapeError("postcompose_affine dimension mismatch");
  std::vector<AffineLayer> layers(net.layers());
  const auto& l = net.layers().back();
  std::vector<double> b = M * std::span<const double>(l.b);
  for (std::size_t i = 0; i < b.size(); ++i) {
    ExactSum s;
    s.add(b[i]);
    s.add(c[i]);
    b[i] = s.result();
  }
  layers.back() = AffineLayer(M * l.A, std::move(b));
  return ReluNetwork(std::move(layers));
}

ReluNetwork fuse(const ReluNetwork& outer, const ReluNetwork& inner) {
  if (inner.output_dim() != outer.input_dim()) throw ShapeError("fuse dimension mismatch");
  const auto& l = inner.layers().back();
  ReluNetwork head = precompose_affine(ReluNetwork({outer.layers().front()}), l.A, l.b);
  std::vector<AffineLayer> layers(inner.layers().begin(), inner.layers().end() - 1);
  layers.push_back(head.layer(0));
  layers.insert(layers.end(), outer.layers().begin() + 1, outer.layers().end());
  return ReluNetwork(std::move(layers));
}

ReluNetwork join(const ReluNetwork& outer, const ReluNetwork& inner) {
  const double cap = std::max(metrics(outer).magnitude, metrics(inner).magnitude);
  ReluNetwork r = fuse(outer, inner);
  if (metrics(r).magnitude <= cap) return r;
  return compose(outer, inner);
}

ReluNetwork sum_finite_width(const std::vector<ReluNetwork>& nets) {
  require_nonempty(nets);
  const std::size_t d = nets.front().input_dim(), dp = nets.front().output_dim();
  for (const auto& n : nets)
    if (n.input_dim() != d || n.output_dim() != dp)
      throw ShapeError("sum_finite_width: dimension mismatch");
  if (nets.size() == 1) return nets.front();

  // Channels (x, s, y): x carried, s the running sum, y the current summand.
  const std::size_t w = 2 * d + dp;
  Matrix A_in(w, d);
  for (std::size_t i = 0; i < d; ++i) {
    A_in(i, i) = 1.0;
    A_in(d + dp + i, i) = 1.0;
  }
  Matrix A_mid(w, d + 2 * dp);
  for (std::size_t i = 0; i < d; ++i) {
    A_mid(i, i) = 1.0;
    A_mid(d + dp + i, i) = 1.0;
  }
  for (std::size_t i = 0; i < dp; ++i) {
    A_mid(d + i, d + i) = 1.0;
    A_mid(d + i, d + dp + i) = 1.0;
  }
  Matrix A_out(dp, d + 2 * dp);
  for (std::size_t i = 0; i < dp; ++i) {
    A_out(i, d + i) = 1.0;
    A_out(i, d + dp + i) = 1.0;
  }

  std::optional<ReluNetwork> acc;
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const std::size_t L = nets[k].depth();
    ReluNetwork psi = parallelize({identity_network(d, L), identity_network(dp, L), nets[k]});
    if (k == 0) psi = precompose_affine(psi, A_in, std::vector<double>(w, 0.0));
    if (k + 1 < nets.size())
      psi = postcompose_affine(A_mid, std::vector<double>(w, 0.0), psi);
    else
      psi = postcompose_affine(A_out, std::vector<double>(dp, 0.0), psi);
    acc = acc ? compose(psi, *acc) : psi;
  }
  return *acc;
}

bool is_nondegenerate(const ReluNetwork& net) {
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& A = net.layer(l).A;
    for (std::size_t j = 0; j < A.cols(); ++j) {
      bool any = false;
      for (std::size_t i = 0; i < A.rows() && !any; ++i) any = A(i, j) != 0.0;
      if (!any) return false;
    }
  }
  const auto& A = net.layers().back().A;
  for (std::size_t i = 0; i < A.rows(); ++i) {
    bool any = false;
    for (std::size_t j = 0; j < A.cols() && !any; ++j) any = A(i, j) != 0.0;
    if (!any) return false;
  }
  return true;
}

namespace {

struct LayerBuf {
  std::vector<std::vector<double>> A;  // rows
  std::vector<double> b;
  std::size_t cols;
};

}  // namespace

ReluNetwork prune(const ReluNetwork& net) {
  std::vector<LayerBuf> Ls;
  for (const auto& layer : net.layers()) {
    LayerBuf lb{{}, layer.b, layer.in_dim()};
    for (std::size_t i = 0; i < layer.out_dim(); ++i)
      lb.A.emplace_back(layer.A.data().begin() + i * layer.in_dim(),
                        layer.A.data().begin() + (i + 1) * layer.in_dim());
    Ls.push_back(std::move(lb));
  }
  auto remove_node = [&](std::size_t l, std::size_t j) {
    Ls[l].A.erase(Ls[l].A.begin() + j);
    Ls[l].b.erase(Ls[l].b.begin() + j);
    for (auto& row : Ls[l + 1].A) row.erase(row.begin() + j);
    --Ls[l + 1].cols;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t l = 0; l + 1 < Ls.size(); ++l) {
      for (std::size_t j = Ls[l].A.size(); j-- > 0;) {
        bool has_out = false;
        for (const auto& row : Ls[l + 1].A) has_out = has_out || row[j] != 0.0;
        bool has_in = false;
        for (double x : Ls[l].A[j]) has_in = has_in || x != 0.0;
        if (!has_out) {
          remove_node(l, j);
          changed = true;
        } else if (!has_in) {
          const double v = std::max(Ls[l].b[j], 0.0);
          for (std::size_t i = 0; i < Ls[l + 1].A.size(); ++i) {
            ExactSum s;
            s.add(Ls[l + 1].b[i]);
            s.add_product(Ls[l + 1].A[i][j], v);
            Ls[l + 1].b[i] = s.result();
          }
          remove_node(l, j);
          changed = true;
        }
      }
      if (Ls[l].A.empty()) {
        // Everything downstream is constant.
        std::vector<double> v;
        for (std::size_t k = l + 1; k < Ls.size(); ++k) {
          std::vector<double> nv(Ls[k].b.size());
          for (std::size_t i = 0; i < nv.size(); ++i) {
            ExactSum s;
            s.add(Ls[k].b[i]);
            for (std::size_t j = 0; j < v.size() && k > l + 1; ++j) s.add_product(Ls[k].A[i][j], v[j]);
            nv[i] = s.result();
            if (k + 1 < Ls.size()) nv[i] = std::max(nv[i], 0.0);
          }
          v = std::move(nv);
        }
        return affine_layer_network(Matrix(net.output_dim(), net.input_dim()), v);
      }
    }
  }
  std::vector<AffineLayer> layers;
  for (auto& lb : Ls) {
    Matrix A(lb.A.size(), lb.cols);
    for (std::size_t i = 0; i < lb.A.size(); ++i)
      for (std::size_t j = 0; j < lb.cols; ++j) A(i, j) = lb.A[i][j];
    layers.emplace_back(std::move(A), lb.b);
  }
  return ReluNetwork(std::move(layers));
}

}  // namespace relucalc
