#pragma once

#include <utility>

#include "rdesign/types.hpp"

namespace rdesign {

/// Nodes and weights of the n-point Gauss-Hermite rule for the weight
/// function exp(-z^2), computed via Golub-Welsch. Nodes are ascending.
/// E_{z~N(0,1)}[f(z)] ~= pi^{-1/2} * sum_k w_k f(sqrt(2) z_k).
std::pair<Vector, Vector> gauss_hermite(int n);

}  // namespace rdesign
