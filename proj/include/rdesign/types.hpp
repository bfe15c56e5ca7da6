#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

namespace rdesign {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Treatment arm. Only binary treatments are supported.
using Arm = int;

/// Thrown when a linear-algebra step cannot be completed even after
/// jitter escalation, or a score hits an unrecoverable degenerate moment.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rdesign
