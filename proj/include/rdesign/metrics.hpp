#pragma once

#include <utility>
#include <vector>

#include "rdesign/types.hpp"

namespace rdesign {

/// Held-out covariates with their true effect surfaces, used for evaluation.
struct EvalGrid {
  Matrix x;          // rows are points from the target population
  Vector true_tau;
  Vector true_mu0;
  Vector true_mu1;

  Eigen::Index size() const { return x.rows(); }
  void validate() const;
};

struct MetricReport {
  double sqrt_pehe = 0.0;
  double ape = 0.0;
  double avg_regret = 0.0;
  Eigen::Index n_eval = 0;
};

/// Mean squared CATE error over the grid (the squared metric; callers report
/// its square root).
double pehe(const Vector& tau_hat, const EvalGrid& grid);

/// Fraction of points whose estimated policy sign I(tau>0) disagrees with the
/// truth; ties at zero count as "assign control".
double ape(const Vector& tau_hat, const EvalGrid& grid);

/// Mean welfare loss |tau| over sign-mismatched points.
double avg_regret(const Vector& tau_hat, const EvalGrid& grid);

MetricReport evaluate(const Vector& tau_hat, const EvalGrid& grid);

/// Trapezoidal area under a (acquired, metric) learning curve, normalized by
/// span x first value so a flat curve scores 1.
double normalized_auc(const std::vector<std::pair<double, double>>& curve);

}  // namespace rdesign
