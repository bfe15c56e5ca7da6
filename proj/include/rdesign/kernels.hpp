#pragma once

#include <string>

#include "rdesign/types.hpp"

namespace rdesign {

enum class KernelFamily { RBF, Matern32, Matern52, RationalQuadratic };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Stationary ARD kernel over covariates. Lengthscales are per input
/// dimension and strictly positive, as is the signal variance.
struct KernelSpec {
  KernelFamily family = KernelFamily::RBF;
  Vector lengthscales;        // one per input dimension
  double signal_variance = 1.0;
  double rq_alpha = 1.0;      // RationalQuadratic only

  static KernelSpec rbf(int dim, double lengthscale = 1.0,
                        double signal_variance = 1.0);

  void validate(int expected_dim) const;
};

/// 2x2 task covariance coupling the two treatment arms. Stored directly as
/// the (symmetric PSD) matrix B; fits parameterize it as L*L^T + diag(kappa).
struct CoregionalizationSpec {
  Eigen::Matrix2d task_matrix = Eigen::Matrix2d::Identity();

  static CoregionalizationSpec identity() { return {}; }
  static CoregionalizationSpec from_cholesky(double l00, double l10, double l11,
                                             double kappa0, double kappa1);

  void validate() const;
};

/// Input-space kernel value k_x(a, b); no task factor.
double kernel_eval_x(const KernelSpec& spec, const Vector& a, const Vector& b);

/// Full augmented-space kernel B[t_a, t_b] * k_x(x_a, x_b).
double kernel_eval(const KernelSpec& spec, const CoregionalizationSpec& coreg,
                   const Vector& xa, Arm ta, const Vector& xb, Arm tb);

/// Dense input-kernel block between row-major point sets (rows are points).
Matrix kernel_matrix_x(const KernelSpec& spec, const Matrix& a, const Matrix& b);

namespace detail {

// Scalar kernel profiles in terms of the ARD-scaled squared distance r2.
// `d_profile_dr2` is the derivative w.r.t. r2, used by the lengthscale
// gradients of the marginal likelihood.
double profile(KernelFamily family, double r2, double rq_alpha);
double d_profile_dr2(KernelFamily family, double r2, double rq_alpha);
// d profile / d log(rq_alpha); zero for families without the parameter.
double d_profile_dlog_alpha(KernelFamily family, double r2, double rq_alpha);

}  // namespace detail

}  // namespace rdesign
