#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "rdesign/causal_data.hpp"
#include "rdesign/metrics.hpp"
#include "rdesign/rng.hpp"
#include "rdesign/types.hpp"

namespace rdesign {

/// Synthetic ground-truth environment. mu(x,1) is always mu(x,0) + tau(x) and
/// the observational mean is mu(x,t) + (2t-1) eta(x); both identities hold
/// exactly by construction. Immutable after construction.
struct GroundTruthEnv {
  int dim = 1;
  double noise_sd = 1.0;
  std::function<double(const Vector&)> mu0;
  std::function<double(const Vector&)> tau;
  std::function<double(const Vector&)> eta;
  std::function<double(const Vector&)> propensity;     // P(t=1 | x, s=o)
  /// Trial participation probability for pool rejection sampling; unset means
  /// pool candidates are accepted directly.
  std::function<double(const Vector&)> participation;
  std::function<Vector(Rng&)> draw_obs_x;
  std::function<Vector(Rng&)> draw_pool_x;
  std::function<Vector(Rng&)> draw_target_x;
  std::string name;

  double mu(const Vector& x, Arm t) const { return t ? mu0(x) + tau(x) : mu0(x); }
  double mu_obs(const Vector& x, Arm t) const {
    return mu(x, t) + (2.0 * t - 1.0) * eta(x);
  }
};

/// Univariate scenario index 1..8; component complexity triple in the table
/// order (confounding eta, baseline mu0, treatment effect tau).
struct ScenarioId {
  bool eta_complex = false;
  bool mu0_complex = false;
  bool tau_complex = false;

  static ScenarioId from_index(int index);
  int index() const { return 1 + 4 * eta_complex + 2 * mu0_complex + tau_complex; }
};

struct UnivariateParams {
  double participation_beta0 = 0.0;
  double participation_beta1 = 1.0;
  double noise_sd = 1.0;
};

GroundTruthEnv univariate_env(ScenarioId scenario, UnivariateParams params = {});

/// Multivariate generator over [-2,2]^d with feature groups
/// {confounders, prognostic, noise} of d/3 each; requires d >= 6 divisible by
/// 3. The random baseline and propensity components are fixed-seed MLPs so the
/// environment is reproducible. `shift` widens the pool support to [-4,2]^d.
GroundTruthEnv multivariate_env(int dim, bool covariate_shift, std::uint64_t seed,
                                double noise_sd = 1.0);

/// Configurable polynomial surface c + w.x + q.(x*x) for CSV-backed
/// environments.
struct SurfaceSpec {
  double constant = 0.0;
  Vector linear;  // empty means zero
  Vector quadratic;

  double operator()(const Vector& x) const;
  void validate(int dim) const;
};

/// Environment over a fixed covariate table: observational and target draws
/// resample rows with replacement, pool draws use rows directly.
GroundTruthEnv csv_env(Matrix covariates, SurfaceSpec mu0, SurfaceSpec tau,
                       SurfaceSpec eta, double noise_sd = 1.0);

CausalDataset sample_observational(const GroundTruthEnv& env, Eigen::Index n, Rng& rng);

/// Draws pool covariates; univariate environments rejection-sample candidates
/// through the participation filter.
Matrix sample_pool(const GroundTruthEnv& env, Eigen::Index n, Rng& rng);

/// Unbiased experimental outcome y = mu(x,t) + noise.
double query_outcome(const GroundTruthEnv& env, const Vector& x, Arm t, Rng& rng);

EvalGrid sample_eval_grid(const GroundTruthEnv& env, Eigen::Index n, Rng& rng);

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace rdesign
