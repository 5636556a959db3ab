#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace relucalc {

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }
  const std::vector<double>& data() const { return a_; }

  Matrix operator*(const Matrix& o) const;
  std::vector<double> operator*(std::span<const double> v) const;
  Matrix scaled(double s) const;
  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

struct AffineLayer {
  Matrix A;
  std::vector<double> b;

  AffineLayer(Matrix A, std::vector<double> b);
  std::size_t in_dim() const { return A.cols(); }
  std::size_t out_dim() const { return A.rows(); }
  bool operator==(const AffineLayer& o) const = default;
};

// W_L o rho o ... o rho o W_1. Immutable once built.
class ReluNetwork {
 public:
  explicit ReluNetwork(std::vector<AffineLayer> layers);

  const std::vector<AffineLayer>& layers() const { return layers_; }
  const AffineLayer& layer(std::size_t i) const { return layers_.at(i); }
  std::size_t depth() const { return layers_.size(); }
  std::size_t input_dim() const { return layers_.front().in_dim(); }
  std::size_t output_dim() const { return layers_.back().out_dim(); }
  std::vector<std::size_t> dims() const;
  bool operator==(const ReluNetwork& o) const = default;

 private:
  std::vector<AffineLayer> layers_;
};

struct NetworkMetrics {
  std::size_t connectivity = 0;
  std::size_t depth = 0;
  std::size_t width = 0;
  double magnitude = 0.0;
};

// Each neuron is a correctly rounded dot product, so cancellations that are
// exact in theory are exact here too.
std::vector<double> evaluate(const ReluNetwork& net, std::span<const double> x);
double evaluate(const ReluNetwork& net, double x);

// Fast path for grids: plain multiply-add, points stored row-major
// (n x N_0). Returns n x N_L row-major.
std::vector<double> evaluate_batch(const ReluNetwork& net, std::span<const double> xs);

NetworkMetrics metrics(const ReluNetwork& net);

// Correctly rounded sum (partials algorithm with final half-even fixup).
class ExactSum {
 public:
  void add(double x);
  void add_product(double a, double b);
  double result() const;
  void clear() { n_ = 0; }

 private:
  static constexpr std::size_t kMax = 96;
  double p_[kMax];
  std::size_t n_ = 0;
};

}  // namespace relucalc
