#include "rdesign/gauss_hermite.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace rdesign {

std::pair<Vector, Vector> gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite requires n >= 1");
  if (n == 1) {
    return {Vector::Zero(1), Vector::Constant(1, std::sqrt(std::numbers::pi))};
  }
  // Jacobi matrix of the (physicists') Hermite recurrence: zero diagonal,
  // off-diagonal sqrt(k/2).
  Vector diag = Vector::Zero(n);
  Vector sub(n - 1);
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  Vector nodes = solver.eigenvalues();
  Vector weights(n);
  const double mu0 = std::sqrt(std::numbers::pi);  // integral of exp(-z^2)
  for (int k = 0; k < n; ++k) {
    double v0 = solver.eigenvectors()(0, k);
    weights(k) = mu0 * v0 * v0;
  }
  return {nodes, weights};
}

}  // namespace rdesign
