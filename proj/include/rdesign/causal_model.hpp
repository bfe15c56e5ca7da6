#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdesign/base_model.hpp"
#include "rdesign/causal_data.hpp"
#include "rdesign/gp.hpp"

namespace rdesign {

enum class Architecture { PureRCT, TSR, Kallus };

std::string to_string(Architecture arch);
Architecture architecture_from_string(const std::string& name);

/// Quantities estimand_posterior can be asked for at each target point.
/// Y0/Y1 are noisy outcomes; Delta*/TauDelta exist only for architectures
/// with a frozen observational base.
enum class Estimand { Y0, Y1, Mu0, Mu1, Tau, Delta0, Delta1, TauDelta };

struct TrialGpConfig {
  KernelFamily family = KernelFamily::RBF;
  int restarts = 5;
  int refit_restarts = 2;  // after the first fit, warm-started re-optimization
  int max_iters = 60;
  bool freeze_hypers = false;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// A fitted benchmark architecture: tabula-rasa (PureRCT) or two-stage with a
/// frozen observational offset (TSR, Kallus). Immutable; update() returns a
/// new value.
class CausalModel {
 public:
  static CausalModel make(Architecture arch, std::optional<BaseModel> base, int dim,
                          TrialGpConfig config = {});

  Architecture architecture() const { return arch_; }
  bool has_base() const { return base_.valid(); }
  const BaseModel& base() const;
  const GpModel& trial_gp() const { return trial_gp_; }
  const CausalDataset& experimental_data() const { return data_; }
  double noise_variance() const { return trial_gp_.noise_variance(); }
  int dim() const { return dim_; }

  /// Adds experimental samples, residualizes them for two-stage
  /// architectures, and refits the trial GP on all experimental data.
  /// Hyperparameters are re-optimized unless the config froze them.
  CausalModel update(const std::vector<CausalSample>& new_samples) const;

  /// Joint Gaussian over an optional candidate observation y@(x,t) followed
  /// by the wanted quantities at each target row, in target-major order.
  /// Means of mu/tau/y include the frozen offsets for two-stage
  /// architectures; covariances are those of the trial process.
  JointGaussian estimand_posterior(
      const std::optional<std::pair<Vector, Arm>>& candidate, const Matrix& targets,
      const std::vector<Estimand>& wanted) const;

  /// Posterior mean and variance of tau at each row of xs.
  std::pair<Vector, Vector> predict_cate(const Matrix& xs) const;
  std::pair<double, double> predict_cate(const Vector& x) const;

  /// Frozen offsets (zero for PureRCT).
  double offset_mu(const Vector& x, Arm t) const;
  Vector offset_mu_batch(const Matrix& xs, Arm t) const;
  Vector offset_tau_batch(const Matrix& xs) const;

 private:
  Architecture arch_ = Architecture::PureRCT;
  BaseModel base_;
  int dim_ = 0;
  TrialGpConfig config_;
  CausalDataset data_;
  GpModel trial_gp_;
  bool fitted_once_ = false;
};

}  // namespace rdesign
