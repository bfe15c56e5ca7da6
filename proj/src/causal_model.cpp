#include "rdesign/causal_model.hpp"

#include <algorithm>

namespace rdesign {

std::string to_string(Architecture arch) {
  switch (arch) {
    case Architecture::PureRCT: return "PureRCT";
    case Architecture::TSR: return "TSR";
    case Architecture::Kallus: return "Kallus";
  }
  return "PureRCT";
}

Architecture architecture_from_string(const std::string& name) {
  if (name == "PureRCT") return Architecture::PureRCT;
  if (name == "TSR") return Architecture::TSR;
  if (name == "Kallus") return Architecture::Kallus;
  throw std::invalid_argument("unknown architecture: " + name);
}

namespace {

const char* estimand_tag(Estimand e) {
  switch (e) {
    case Estimand::Y0: return "y0";
    case Estimand::Y1: return "y1";
    case Estimand::Mu0: return "mu0";
    case Estimand::Mu1: return "mu1";
    case Estimand::Tau: return "tau";
    case Estimand::Delta0: return "delta0";
    case Estimand::Delta1: return "delta1";
    case Estimand::TauDelta: return "tau_delta";
  }
  return "?";
}

}  // namespace

CausalModel CausalModel::make(Architecture arch, std::optional<BaseModel> base,
                              int dim, TrialGpConfig config) {
  CausalModel m;
  m.arch_ = arch;
  m.dim_ = dim;
  m.config_ = config;
  if (arch == Architecture::PureRCT) {
    if (base.has_value()) {
      throw std::invalid_argument("PureRCT does not take a base model");
    }
  } else {
    if (!base.has_value() || !base->valid()) {
      throw std::invalid_argument(to_string(arch) + " requires a frozen base model");
    }
    m.base_ = std::move(*base);
  }
  m.data_ = CausalDataset::empty(dim);
  m.trial_gp_ = GpModel::prior(KernelSpec::rbf(dim), CoregionalizationSpec::identity(),
                               0.1, dim);
  return m;
}

const BaseModel& CausalModel::base() const {
  if (!base_.valid()) throw std::invalid_argument("architecture has no base model");
  return base_;
}

double CausalModel::offset_mu(const Vector& x, Arm t) const {
  return base_.valid() ? base_.mu(x, t) : 0.0;
}

Vector CausalModel::offset_mu_batch(const Matrix& xs, Arm t) const {
  return base_.valid() ? base_.mu_batch(xs, t) : Vector::Zero(xs.rows());
}

Vector CausalModel::offset_tau_batch(const Matrix& xs) const {
  return base_.valid() ? base_.tau_batch(xs) : Vector::Zero(xs.rows());
}

CausalModel CausalModel::update(const std::vector<CausalSample>& new_samples) const {
  if (new_samples.empty()) return *this;
  for (const auto& s : new_samples) {
    if (s.s != Source::Experimental) {
      throw std::invalid_argument("update expects experimental samples");
    }
    if (s.x.size() != dim_) {
      throw std::invalid_argument("sample dimension mismatch");
    }
  }

  CausalModel next = *this;
  for (const auto& s : new_samples) next.data_.append(s);

  const Eigen::Index n = next.data_.size();
  Vector targets(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    CausalSample s = next.data_.sample(i);
    targets(i) = base_.valid() ? residualize(s, base_) : s.y;
  }

  if (config_.freeze_hypers && fitted_once_) {
    next.trial_gp_ = GpModel::with_hypers(trial_gp_.kernel(), trial_gp_.coreg(),
                                          trial_gp_.noise_variance(), next.data_.x,
                                          next.data_.t, targets,
                                          /*center_targets=*/true);
  } else {
    GpFitOptions opts;
    opts.restarts = fitted_once_ ? config_.refit_restarts : config_.restarts;
    opts.max_iters = config_.max_iters;
    opts.warm_start = fitted_once_;
    opts.seed = derive_seed(config_.seed, 0x72e5, static_cast<std::uint64_t>(n));
    opts.workers = config_.workers;
    KernelSpec init = fitted_once_ ? trial_gp_.kernel() : KernelSpec::rbf(dim_);
    init.family = config_.family;
    double init_noise = fitted_once_ ? trial_gp_.noise_variance() : 0.1;
    next.trial_gp_ = GpModel::fit(next.data_.x, next.data_.t, targets, init,
                                  trial_gp_.coreg(), init_noise, opts);
  }
  next.fitted_once_ = true;
  return next;
}

JointGaussian CausalModel::estimand_posterior(
    const std::optional<std::pair<Vector, Arm>>& candidate, const Matrix& targets,
    const std::vector<Estimand>& wanted) const {
  if (wanted.empty()) throw std::invalid_argument("no estimands requested");
  const bool two_stage = base_.valid();
  for (Estimand e : wanted) {
    if (!two_stage && (e == Estimand::Delta0 || e == Estimand::Delta1 ||
                       e == Estimand::TauDelta)) {
      throw std::invalid_argument(
          "residual estimands do not exist without a base model");
    }
  }

  std::vector<Query> queries;
  std::vector<std::string> labels;
  std::vector<double> offsets;

  if (candidate.has_value()) {
    const auto& [cx, ct] = *candidate;
    if (ct != 0 && ct != 1) throw std::invalid_argument("candidate arm must be 0 or 1");
    queries.push_back(Query::noisy(cx, ct));
    labels.push_back("y@cand");
    offsets.push_back(two_stage ? base_.mu(cx, ct) : 0.0);
  }

  for (Eigen::Index j = 0; j < targets.rows(); ++j) {
    Vector x = targets.row(j);
    for (Estimand e : wanted) {
      double offset = 0.0;
      switch (e) {
        case Estimand::Y0:
          queries.push_back(Query::noisy(x, 0));
          if (two_stage) offset = base_.mu(x, 0);
          break;
        case Estimand::Y1:
          queries.push_back(Query::noisy(x, 1));
          if (two_stage) offset = base_.mu(x, 1);
          break;
        case Estimand::Mu0:
          queries.push_back(Query::latent(x, 0));
          if (two_stage) offset = base_.mu(x, 0);
          break;
        case Estimand::Mu1:
          queries.push_back(Query::latent(x, 1));
          if (two_stage) offset = base_.mu(x, 1);
          break;
        case Estimand::Tau:
          queries.push_back(Query::contrast(x));
          if (two_stage) offset = base_.tau(x);
          break;
        case Estimand::Delta0:
          queries.push_back(Query::latent(x, 0));
          break;
        case Estimand::Delta1:
          queries.push_back(Query::latent(x, 1));
          break;
        case Estimand::TauDelta:
          queries.push_back(Query::contrast(x));
          break;
      }
      labels.push_back(std::string(estimand_tag(e)) + "#" + std::to_string(j));
      offsets.push_back(offset);
    }
  }

  JointGaussian joint = trial_gp_.posterior(queries);
  joint.labels = std::move(labels);
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    joint.mean(static_cast<Eigen::Index>(i)) += offsets[i];
  }
  return joint;
}

std::pair<Vector, Vector> CausalModel::predict_cate(const Matrix& xs) const {
  auto s0 = trial_gp_.solve_latents(xs, 0);
  auto s1 = trial_gp_.solve_latents(xs, 1);
  const double prior_cross = trial_gp_.coreg().task_matrix(0, 1) *
                             trial_gp_.kernel().signal_variance;
  Vector cross(xs.rows());
  if (s0.v.rows() == 0) {
    cross.setConstant(prior_cross);
  } else {
    Vector vdot = (s0.v.array() * s1.v.array()).colwise().sum().transpose();
    cross = (prior_cross - vdot.array()).matrix();
  }
  Vector mean = s1.mean - s0.mean;
  if (base_.valid()) mean += base_.tau_batch(xs);
  Vector var = (s0.var + s1.var - 2.0 * cross).cwiseMax(0.0);
  return {std::move(mean), std::move(var)};
}

std::pair<double, double> CausalModel::predict_cate(const Vector& x) const {
  Matrix xs(1, x.size());
  xs.row(0) = x;
  auto [mean, var] = predict_cate(xs);
  return {mean(0), var(0)};
}

}  // namespace rdesign
