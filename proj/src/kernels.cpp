#include "rdesign/kernels.hpp"

#include <cmath>

namespace rdesign {

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::RBF: return "RBF";
    case KernelFamily::Matern32: return "Matern32";
    case KernelFamily::Matern52: return "Matern52";
    case KernelFamily::RationalQuadratic: return "RationalQuadratic";
  }
  return "RBF";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "RBF") return KernelFamily::RBF;
  if (name == "Matern32") return KernelFamily::Matern32;
  if (name == "Matern52") return KernelFamily::Matern52;
  if (name == "RationalQuadratic") return KernelFamily::RationalQuadratic;
  throw std::invalid_argument("unknown kernel family: " + name);
}

KernelSpec KernelSpec::rbf(int dim, double lengthscale, double signal_variance) {
  KernelSpec spec;
  spec.family = KernelFamily::RBF;
  spec.lengthscales = Vector::Constant(dim, lengthscale);
  spec.signal_variance = signal_variance;
  return spec;
}

void KernelSpec::validate(int expected_dim) const {
  if (lengthscales.size() != expected_dim) {
    throw std::invalid_argument("kernel lengthscale count " +
                                std::to_string(lengthscales.size()) +
                                " does not match input dimension " +
                                std::to_string(expected_dim));
  }
  if ((lengthscales.array() <= 0.0).any()) {
    throw std::invalid_argument("kernel lengthscales must be positive");
  }
  if (signal_variance <= 0.0) {
    throw std::invalid_argument("kernel signal variance must be positive");
  }
  if (family == KernelFamily::RationalQuadratic && rq_alpha <= 0.0) {
    throw std::invalid_argument("rational quadratic alpha must be positive");
  }
}

CoregionalizationSpec CoregionalizationSpec::from_cholesky(double l00, double l10,
                                                           double l11, double kappa0,
                                                           double kappa1) {
  Eigen::Matrix2d l;
  l << l00, 0.0, l10, l11;
  CoregionalizationSpec spec;
  spec.task_matrix = l * l.transpose();
  spec.task_matrix(0, 0) += kappa0;
  spec.task_matrix(1, 1) += kappa1;
  return spec;
}

void CoregionalizationSpec::validate() const {
  const auto& b = task_matrix;
  if (std::abs(b(0, 1) - b(1, 0)) > 1e-12) {
    throw std::invalid_argument("coregionalization matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(b);
  if (es.eigenvalues().minCoeff() < -1e-8) {
    throw std::invalid_argument("coregionalization matrix must be PSD");
  }
}

namespace detail {

double profile(KernelFamily family, double r2, double rq_alpha) {
  switch (family) {
    case KernelFamily::RBF:
      return std::exp(-0.5 * r2);
    case KernelFamily::Matern32: {
      double r = std::sqrt(r2);
      double a = std::sqrt(3.0) * r;
      return (1.0 + a) * std::exp(-a);
    }
    case KernelFamily::Matern52: {
      double r = std::sqrt(r2);
      double a = std::sqrt(5.0) * r;
      return (1.0 + a + 5.0 * r2 / 3.0) * std::exp(-a);
    }
    case KernelFamily::RationalQuadratic:
      return std::pow(1.0 + r2 / (2.0 * rq_alpha), -rq_alpha);
  }
  return 0.0;
}

double d_profile_dr2(KernelFamily family, double r2, double rq_alpha) {
  switch (family) {
    case KernelFamily::RBF:
      return -0.5 * std::exp(-0.5 * r2);
    case KernelFamily::Matern32: {
      // d/dr2 [(1+sqrt(3) r) e^{-sqrt(3) r}] = -1.5 e^{-sqrt(3) r}
      double r = std::sqrt(r2);
      return -1.5 * std::exp(-std::sqrt(3.0) * r);
    }
    case KernelFamily::Matern52: {
      double r = std::sqrt(r2);
      double a = std::sqrt(5.0) * r;
      // d/dr2 = -(5/6)(1 + a) e^{-a}
      return -(5.0 / 6.0) * (1.0 + a) * std::exp(-a);
    }
    case KernelFamily::RationalQuadratic:
      return -0.5 * std::pow(1.0 + r2 / (2.0 * rq_alpha), -rq_alpha - 1.0);
  }
  return 0.0;
}

double d_profile_dlog_alpha(KernelFamily family, double r2, double rq_alpha) {
  if (family != KernelFamily::RationalQuadratic) return 0.0;
  double u = 1.0 + r2 / (2.0 * rq_alpha);
  double k = std::pow(u, -rq_alpha);
  return k * rq_alpha * (-std::log(u) + (r2 / (2.0 * rq_alpha)) / u);
}

}  // namespace detail

double kernel_eval_x(const KernelSpec& spec, const Vector& a, const Vector& b) {
  if (a.size() != spec.lengthscales.size() || b.size() != spec.lengthscales.size()) {
    throw std::invalid_argument("kernel input dimension mismatch");
  }
  double r2 = ((a - b).array() / spec.lengthscales.array()).square().sum();
  return spec.signal_variance * detail::profile(spec.family, r2, spec.rq_alpha);
}

double kernel_eval(const KernelSpec& spec, const CoregionalizationSpec& coreg,
                   const Vector& xa, Arm ta, const Vector& xb, Arm tb) {
  if (ta < 0 || ta > 1 || tb < 0 || tb > 1) {
    throw std::invalid_argument("treatment arm must be 0 or 1");
  }
  return coreg.task_matrix(ta, tb) * kernel_eval_x(spec, xa, xb);
}

Matrix kernel_matrix_x(const KernelSpec& spec, const Matrix& a, const Matrix& b) {
  if (a.cols() != spec.lengthscales.size() || b.cols() != spec.lengthscales.size()) {
    throw std::invalid_argument("kernel input dimension mismatch");
  }
  // Scaled squared distances via the (x-y)^2 = x^2 + y^2 - 2xy expansion.
  Matrix as = a.array().rowwise() / spec.lengthscales.transpose().array();
  Matrix bs = b.array().rowwise() / spec.lengthscales.transpose().array();
  Vector an = as.rowwise().squaredNorm();
  Vector bn = bs.rowwise().squaredNorm();
  Matrix r2 = (-2.0 * as * bs.transpose()).colwise() + an;
  r2.rowwise() += bn.transpose();
  r2 = r2.cwiseMax(0.0);
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < r2.rows(); ++i) {
    for (Eigen::Index j = 0; j < r2.cols(); ++j) {
      out(i, j) = detail::profile(spec.family, r2(i, j), spec.rq_alpha);
    }
  }
  return spec.signal_variance * out;
}

}  // namespace rdesign
