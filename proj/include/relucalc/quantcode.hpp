#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "relucalc/network.hpp"

namespace relucalc {

struct CodecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when M or B exceeds eps^-k; carries the smallest k that would do.
struct QuantPreconditionError : ArgumentError {
  QuantPreconditionError(const std::string& what, int k) : ArgumentError(what), minimal_k(k) {}
  int minimal_k;
};

// ceil(log2(1/eps))
int eps_bits(double eps);

struct QuantGrid {
  int m = 1;
  double eps = 0.25;
  long exponent = 0;  // E = m * ceil(log2(1/eps)); step = 2^-E

  QuantGrid(int m, double eps);
  double step() const;   // 0 if 2^-E underflows
  double bound() const;  // eps^-m, may be inf
  double log2_bound() const;
  bool contains(double w) const;
  // nearest lattice value, ties toward zero
  double round(double w) const;
  int weight_bits() const { return int(2 * (exponent + 1)); }
};

struct QuantizedNetwork {
  ReluNetwork net;
  int m;
  QuantGrid grid;
};

int quant_degree(int k, std::size_t depth, double D);
int minimal_quant_k(const ReluNetwork& net, double eps);
QuantizedNetwork quantize_network(const ReluNetwork& net, int k, double D, double eps);

class BitString {
 public:
  BitString() = default;
  explicit BitString(const std::string& s);  // '0'/'1' characters

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i]; }
  void push(bool b) { bits_.push_back(b); }
  void push_uint(std::uint64_t v, int width);
  void append(const BitString& o);
  std::string str() const;
  bool operator==(const BitString& o) const = default;

 private:
  std::vector<bool> bits_;
};

BitString encode(const ReluNetwork& net, int m, double eps);
ReluNetwork decode(const BitString& bits, int m, double eps);
// sentinel returned for M = 0
bool is_empty_sentinel(const ReluNetwork& net);

std::uint64_t code_length_bound(std::uint64_t M, int m, double eps);

void write_bits(std::ostream& os, const BitString& bits);
BitString read_bits(std::istream& is);
void save_bits(const std::string& path, const BitString& bits);
BitString load_bits(const std::string& path);

}  // namespace relucalc
