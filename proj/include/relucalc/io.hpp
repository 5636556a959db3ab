#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "relucalc/network.hpp"

namespace relucalc {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// "relunet v1" text format, hex-float values.
void write_network(std::ostream& os, const ReluNetwork& net);
ReluNetwork read_network(std::istream& is);
void save_network(const std::string& path, const ReluNetwork& net);
ReluNetwork load_network(const std::string& path);

}  // namespace relucalc
