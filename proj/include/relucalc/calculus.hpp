#pragma once

#include <vector>

#include "relucalc/network.hpp"

namespace relucalc {

ReluNetwork affine_layer_network(Matrix A, std::vector<double> b);
ReluNetwork zero_network(std::size_t d_in, std::size_t d_out);
// rho(x) - rho(-x) style identity of depth L (L = 1 is the plain identity layer).
ReluNetwork identity_network(std::size_t d, std::size_t L = 2);

ReluNetwork compose(const ReluNetwork& outer, const ReluNetwork& inner);
ReluNetwork extend_depth(const ReluNetwork& net, std::size_t K);
ReluNetwork parallelize(const std::vector<ReluNetwork>& nets);
ReluNetwork linear_combination(const std::vector<ReluNetwork>& nets,
                               const std::vector<double>& coeffs);
ReluNetwork parallelize_shared(const std::vector<ReluNetwork>& nets);
ReluNetwork linear_combination_shared(const std::vector<ReluNetwork>& nets,
                                      const std::vector<double>& coeffs);

// Pads every member to the common maximum depth.
std::vector<ReluNetwork> pad_to_common_depth(const std::vector<ReluNetwork>& nets);

ReluNetwork scalar_mult_network(double a, std::size_t d = 1);
ReluNetwork affine_network(const Matrix& A, const std::vector<double>& b);
ReluNetwork reduce_weights(const ReluNetwork& net);
ReluNetwork sum_finite_width(const std::vector<ReluNetwork>& nets);
ReluNetwork prune(const ReluNetwork& net);

// net o (x -> Mx + c), folded into the first layer.
ReluNetwork precompose_affine(const ReluNetwork& net, const Matrix& M,
                              const std::vector<double>& c);
// (y -> My + c) o net, folded into the last layer.
ReluNetwork postcompose_affine(const Matrix& M, const std::vector<double>& c,
                               const ReluNetwork& net);

// outer o inner with inner's last and outer's first affine maps multiplied
// out (depth L1 + L2 - 1).
ReluNetwork fuse(const ReluNetwork& outer, const ReluNetwork& inner);
// fuse when that does not raise the weight magnitude, compose otherwise.
ReluNetwork join(const ReluNetwork& outer, const ReluNetwork& inner);

bool is_nondegenerate(const ReluNetwork& net);

}  // namespace relucalc
