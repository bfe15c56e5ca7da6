#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rdesign/kernels.hpp"
#include "rdesign/types.hpp"

namespace rdesign {

/// A quantity the GP posterior can be queried for.
struct Query {
  enum class Kind { Latent, Noisy, Contrast };
  Kind kind = Kind::Latent;
  Vector x;
  Arm arm = 0;  // ignored for Contrast

  static Query latent(Vector x, Arm arm) { return {Kind::Latent, std::move(x), arm}; }
  static Query noisy(Vector x, Arm arm) { return {Kind::Noisy, std::move(x), arm}; }
  static Query contrast(Vector x) { return {Kind::Contrast, std::move(x), 0}; }
};

/// Finite-dimensional Gaussian belief over a list of labeled quantities.
struct JointGaussian {
  std::vector<std::string> labels;
  Vector mean;
  Matrix cov;

  Eigen::Index size() const { return mean.size(); }
  /// Row/column selection (marginalization to a subset of the quantities).
  JointGaussian marginal(const std::vector<int>& indices) const;
  void validate() const;
};

struct GpFitOptions {
  int restarts = 5;
  int max_iters = 60;
  double grad_tol = 1e-5;
  bool learn_coreg = true;
  std::uint64_t seed = 0;
  /// Use the provided hyperparameters as the first start instead of the
  /// data-scale defaults (subsequent batch refits).
  bool warm_start = false;
  /// If > 0 and the training set is larger, hyperparameters are optimized on
  /// a seeded subsample; the returned model still conditions on all points.
  int hyper_subsample = 0;
  std::size_t workers = 1;
};

/// Exact GP regression over the augmented space X x {0,1} with a
/// coregionalized stationary kernel k((x,t),(x',t')) = B[t,t'] k_x(x,x').
/// Immutable after construction; posterior reads are thread-safe.
class GpModel {
 public:
  GpModel() = default;

  /// Conditions on (x, arms, y) with the given hyperparameters and no
  /// optimization. Without centering the textbook formulas apply verbatim;
  /// center_targets subtracts the target mean the way fit() does (used for
  /// frozen-hyperparameter refits). x rows are points; y must be finite.
  static GpModel with_hypers(KernelSpec kernel, CoregionalizationSpec coreg,
                             double noise_variance, Matrix x,
                             std::vector<Arm> arms, Vector y,
                             bool center_targets = false);

  /// Prior-only model (empty training set).
  static GpModel prior(KernelSpec kernel, CoregionalizationSpec coreg,
                       double noise_variance, int input_dim);

  /// Maximum-marginal-likelihood fit: multi-start L-BFGS on log-scale
  /// hyperparameters with analytic gradients. Inputs are standardized
  /// per-dimension (folded back into the reported lengthscales) and targets
  /// centered. `init` seeds the first start when opts.warm_start is set.
  static GpModel fit(Matrix x, std::vector<Arm> arms, Vector y,
                     const KernelSpec& init, const CoregionalizationSpec& init_coreg,
                     double init_noise, const GpFitOptions& opts);

  int input_dim() const { return static_cast<int>(kernel_.lengthscales.size()); }
  Eigen::Index train_size() const { return x_.rows(); }
  const KernelSpec& kernel() const { return kernel_; }
  const CoregionalizationSpec& coreg() const { return coreg_; }
  double noise_variance() const { return noise_var_; }
  double target_mean() const { return y_mean_; }
  double jitter_used() const { return jitter_; }

  double log_marginal_likelihood() const;

  /// Exact joint posterior over any mix of quantities.
  JointGaussian posterior(std::span<const Query> queries) const;

  /// Batched single-arm latent solve for hot paths. `v` is L^{-1} K(train, q)
  /// with one column per query; cross-covariances between two solves are
  /// prior_cross - v_a^T v_b.
  struct BatchSolve {
    Vector mean;  // posterior latent means (target mean added back)
    Vector var;   // posterior latent variances
    Matrix v;     // train_size x n_queries
  };
  BatchSolve solve_latents(const Matrix& xs, Arm arm) const;

  /// Prior variance of the latent at any point for the given arm.
  double prior_latent_var(Arm arm) const;

  static constexpr double kNoiseFloor = 1e-6;

 private:
  void factorize();
  // Prior kernel column between all training points and one query.
  Vector prior_cross_train(const Query& q) const;
  double prior_cov(const Query& a, const Query& b) const;

  KernelSpec kernel_;
  CoregionalizationSpec coreg_;
  double noise_var_ = kNoiseFloor;
  Matrix x_;                 // training inputs, rows are points
  std::vector<Arm> arms_;
  Vector y_;                 // raw targets
  double y_mean_ = 0.0;      // subtracted before solving
  Matrix chol_l_;            // lower Cholesky factor of K + sigma^2 I + jitter
  Vector alpha_;             // (K + sigma^2 I)^{-1} (y - mean)
  double jitter_ = 0.0;
  double lml_ = 0.0;
};

namespace detail {

/// Marginal likelihood and its analytic gradient at a packed hyperparameter
/// vector (layout documented in gp.cpp). Only exists so tests can
/// finite-difference the gradient; returns false if factorization fails.
bool lml_with_grad(const Matrix& x, const std::vector<Arm>& arms,
                   const Vector& y_centered, KernelFamily family, bool learn_coreg,
                   const Eigen::Matrix2d& fixed_b, const Vector& theta, double& lml,
                   Vector& grad);

}  // namespace detail

}  // namespace rdesign
