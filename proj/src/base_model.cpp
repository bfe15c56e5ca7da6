#include "rdesign/base_model.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "rdesign/gp.hpp"

namespace rdesign {

std::string to_string(BaseLearner learner) {
  return learner == BaseLearner::GpTLearner ? "gp" : "knn";
}

BaseLearner base_learner_from_string(const std::string& name) {
  if (name == "gp") return BaseLearner::GpTLearner;
  if (name == "knn") return BaseLearner::KnnMean;
  throw std::invalid_argument("unknown base learner: " + name);
}

Vector BaseModel::Impl::mu_batch(const Matrix& xs, Arm t) const {
  Vector out(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) out(i) = mu(xs.row(i), t);
  return out;
}

int BaseModel::dim() const {
  if (!impl_) throw std::invalid_argument("base model is empty");
  return impl_->dim();
}

double BaseModel::mu(const Vector& x, Arm t) const {
  if (!impl_) throw std::invalid_argument("base model is empty");
  if (t != 0 && t != 1) throw std::invalid_argument("treatment arm must be 0 or 1");
  return impl_->mu(x, t);
}

Vector BaseModel::mu_batch(const Matrix& xs, Arm t) const {
  if (!impl_) throw std::invalid_argument("base model is empty");
  return impl_->mu_batch(xs, t);
}

Vector BaseModel::tau_batch(const Matrix& xs) const {
  return mu_batch(xs, 1) - mu_batch(xs, 0);
}

namespace {

struct ZeroImpl final : BaseModel::Impl {
  int d;
  explicit ZeroImpl(int dim_in) : d(dim_in) {}
  double mu(const Vector&, Arm) const override { return 0.0; }
  Vector mu_batch(const Matrix& xs, Arm) const override {
    return Vector::Zero(xs.rows());
  }
  int dim() const override { return d; }
};

struct GpPairImpl final : BaseModel::Impl {
  GpModel arm0, arm1;
  double mu(const Vector& x, Arm t) const override {
    const GpModel& m = t ? arm1 : arm0;
    Matrix xs(1, x.size());
    xs.row(0) = x;
    return m.solve_latents(xs, 0).mean(0);
  }
  Vector mu_batch(const Matrix& xs, Arm t) const override {
    return (t ? arm1 : arm0).solve_latents(xs, 0).mean;
  }
  int dim() const override { return arm0.input_dim(); }
};

struct KnnImpl final : BaseModel::Impl {
  Matrix x[2];
  Vector y[2];
  int k = 10;

  double mu(const Vector& q, Arm t) const override {
    const Matrix& xs = x[t];
    const Vector& ys = y[t];
    const Eigen::Index n = xs.rows();
    const Eigen::Index use = std::min<Eigen::Index>(k, n);
    std::vector<std::pair<double, Eigen::Index>> dist;
    dist.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      dist.emplace_back((xs.row(i).transpose() - q).squaredNorm(), i);
    }
    std::partial_sort(dist.begin(), dist.begin() + use, dist.end());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < use; ++i) {
      acc += ys(dist[static_cast<std::size_t>(i)].second);
    }
    return acc / static_cast<double>(use);
  }
  int dim() const override { return static_cast<int>(x[0].cols()); }
};

struct OffsetTableImpl final : BaseModel::Impl {
  Matrix x;
  Vector mu0, mu1;

  double mu(const Vector& q, Arm t) const override {
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double d = (x.row(i).transpose() - q).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return t ? mu1(best) : mu0(best);
  }
  int dim() const override { return static_cast<int>(x.cols()); }
};

}  // namespace

BaseModel BaseModel::zero(int dim) {
  return BaseModel(std::make_shared<ZeroImpl>(dim));
}

BaseModel BaseModel::from_offset_csv(const std::string& path) {
  Matrix table = load_covariates_csv(path);
  if (table.cols() < 3) {
    throw std::invalid_argument("offset csv needs x_*,mu0,mu1 columns");
  }
  auto impl = std::make_shared<OffsetTableImpl>();
  impl->x = table.leftCols(table.cols() - 2);
  impl->mu0 = table.col(table.cols() - 2);
  impl->mu1 = table.col(table.cols() - 1);
  return BaseModel(std::move(impl));
}

BaseModel fit_base(const CausalDataset& obs, const BaseModelConfig& config) {
  std::vector<Eigen::Index> idx[2];
  for (Eigen::Index i = 0; i < obs.size(); ++i) {
    idx[obs.t[static_cast<std::size_t>(i)]].push_back(i);
  }
  for (Arm t : {0, 1}) {
    if (idx[t].size() < 2) {
      throw std::invalid_argument("observational data needs >= 2 samples in arm " +
                                  std::to_string(t));
    }
  }

  auto arm_slice = [&](Arm t, Matrix& x, Vector& y) {
    x.resize(static_cast<Eigen::Index>(idx[t].size()), obs.dim());
    y.resize(static_cast<Eigen::Index>(idx[t].size()));
    for (std::size_t i = 0; i < idx[t].size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = obs.x.row(idx[t][i]);
      y(static_cast<Eigen::Index>(i)) = obs.y(idx[t][i]);
    }
  };

  if (config.learner == BaseLearner::KnnMean) {
    auto impl = std::make_shared<KnnImpl>();
    impl->k = config.knn_k;
    arm_slice(0, impl->x[0], impl->y[0]);
    arm_slice(1, impl->x[1], impl->y[1]);
    return BaseModel(std::move(impl));
  }

  auto impl = std::make_shared<GpPairImpl>();
  for (Arm t : {0, 1}) {
    Matrix x;
    Vector y;
    arm_slice(t, x, y);
    GpFitOptions opts;
    opts.restarts = config.restarts;
    opts.learn_coreg = false;
    opts.seed = derive_seed(config.seed, 0xba5e, static_cast<std::uint64_t>(t));
    opts.hyper_subsample = config.hyper_subsample;
    opts.workers = config.workers;
    std::vector<Arm> arms(static_cast<std::size_t>(x.rows()), 0);
    GpModel m = GpModel::fit(std::move(x), std::move(arms), std::move(y),
                             KernelSpec::rbf(obs.dim()),
                             CoregionalizationSpec::identity(), 0.1, opts);
    (t ? impl->arm1 : impl->arm0) = std::move(m);
  }
  return BaseModel(std::move(impl));
}

double residualize(const CausalSample& sample, const BaseModel& base) {
  if (sample.s != Source::Experimental) {
    throw std::invalid_argument("residualize expects an experimental sample");
  }
  return sample.y - base.mu(sample.x, sample.t);
}

}  // namespace rdesign
