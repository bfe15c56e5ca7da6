#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "rdesign/causal_data.hpp"
#include "rdesign/types.hpp"

namespace rdesign {

enum class BaseLearner { GpTLearner, KnnMean };

std::string to_string(BaseLearner learner);
BaseLearner base_learner_from_string(const std::string& name);

struct BaseModelConfig {
  BaseLearner learner = BaseLearner::GpTLearner;
  int knn_k = 10;
  /// Cap on the per-arm training size used for hyperparameter search; the
  /// frozen predictor always conditions on the full arm data.
  int hyper_subsample = 384;
  int restarts = 5;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// Frozen per-arm outcome predictors mu_o(.,0), mu_o(.,1) and their contrast.
/// Deterministic after construction: repeated evaluation at the same point is
/// bit-identical.
class BaseModel {
 public:
  struct Impl {
    virtual ~Impl() = default;
    virtual double mu(const Vector& x, Arm t) const = 0;
    virtual Vector mu_batch(const Matrix& xs, Arm t) const;
    virtual int dim() const = 0;
  };

  BaseModel() = default;
  explicit BaseModel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  bool valid() const { return impl_ != nullptr; }
  int dim() const;
  double mu(const Vector& x, Arm t) const;
  Vector mu_batch(const Matrix& xs, Arm t) const;
  double tau(const Vector& x) const { return mu(x, 1) - mu(x, 0); }
  Vector tau_batch(const Matrix& xs) const;

  /// Identically-zero offsets; turns a two-stage architecture into the
  /// tabula-rasa one.
  static BaseModel zero(int dim);

  /// Frozen offsets from a CSV with header x_0,...,x_{d-1},mu0,mu1, evaluated
  /// by nearest neighbor. The hook for externally trained stage-1 backbones.
  static BaseModel from_offset_csv(const std::string& path);

 private:
  std::shared_ptr<const Impl> impl_;
};

/// Trains and freezes the per-arm observational learners. Both arms must be
/// present with at least two samples each.
BaseModel fit_base(const CausalDataset& obs, const BaseModelConfig& config = {});

/// r = y - mu_o(x, t); the sample must be experimental.
double residualize(const CausalSample& sample, const BaseModel& base);

}  // namespace rdesign
