#include "relucalc/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace relucalc {

namespace {

constexpr const char* kMagic = "relunet";
constexpr int kVersion = 1;

std::string hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double parse_value(const std::string& tok) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw FormatError("bad numeric token '" + tok + "'");
  return v;
}

}  // namespace

void write_network(std::ostream& os, const ReluNetwork& net) {
  os << kMagic << " v" << kVersion << '\n' << net.depth() << '\n';
  const auto dims = net.dims();
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? " " : "") << dims[i];
  os << '\n';
  for (const auto& layer : net.layers()) {
    bool first = true;
    for (double x : layer.A.data()) {
      os << (first ? "" : " ") << hex(x);
      first = false;
    }
    for (double x : layer.b) os << ' ' << hex(x);
    os << '\n';
  }
}

ReluNetwork read_network(std::istream& is) {
  std::string magic, ver;
  if (!(is >> magic >> ver) || magic != kMagic || ver != "v" + std::to_string(kVersion))
    throw FormatError("not a relunet v1 stream");
  std::size_t L = 0;
  if (!(is >> L) || L == 0) throw FormatError("bad depth");
  std::vector<std::size_t> dims(L + 1);
  for (auto& d : dims)
    if (!(is >> d) || d == 0) throw FormatError("bad layer dimension");
  std::vector<AffineLayer> layers;
  std::string tok;
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t r = dims[l + 1], c = dims[l];
    std::vector<double> a(r * c), b(r);
    for (auto& x : a) {
      if (!(is >> tok)) throw FormatError("truncated matrix data");
      x = parse_value(tok);
    }
    for (auto& x : b) {
      if (!(is >> tok)) throw FormatError("truncated bias data");
      x = parse_value(tok);
    }
    try {
      layers.emplace_back(Matrix(r, c, std::move(a)), std::move(b));
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what());
    }
  }
  if (is >> tok) throw FormatError("trailing data after last layer");
  return ReluNetwork(std::move(layers));
}

void save_network(const std::string& path, const ReluNetwork& net) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  write_network(f, net);
  if (!f) throw std::runtime_error("write failed: " + path);
}

ReluNetwork load_network(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return read_network(f);
}

}  // namespace relucalc
