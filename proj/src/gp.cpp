#include "rdesign/gp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "rdesign/rng.hpp"
#include "rdesign/threading.hpp"

namespace rdesign {

JointGaussian JointGaussian::marginal(const std::vector<int>& indices) const {
  JointGaussian out;
  out.labels.reserve(indices.size());
  out.mean.resize(static_cast<Eigen::Index>(indices.size()));
  out.cov.resize(static_cast<Eigen::Index>(indices.size()),
                 static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.labels.push_back(labels.at(static_cast<std::size_t>(indices[i])));
    out.mean(static_cast<Eigen::Index>(i)) = mean(indices[i]);
    for (std::size_t j = 0; j < indices.size(); ++j) {
      out.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cov(indices[i], indices[j]);
    }
  }
  return out;
}

void JointGaussian::validate() const {
  if (mean.size() != cov.rows() || cov.rows() != cov.cols() ||
      static_cast<Eigen::Index>(labels.size()) != mean.size()) {
    throw std::invalid_argument("JointGaussian dimensions are inconsistent");
  }
  if (cov.size() > 0 && (cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
    throw NumericalError("JointGaussian covariance is not symmetric");
  }
  if (cov.diagonal().minCoeff() < -1e-8) {
    throw NumericalError("JointGaussian covariance has negative variance");
  }
}

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

struct CholResult {
  Matrix l;
  double jitter = 0.0;
  bool ok = false;
};

// Jitter policy: always add 1e-8*trace/n, escalate x10 up to 1e-2*trace/n.
CholResult cholesky_with_jitter(const Matrix& k_sigma) {
  CholResult res;
  const Eigen::Index n = k_sigma.rows();
  const double scale = std::max(k_sigma.trace() / static_cast<double>(n), 1e-300);
  for (double mult = 1e-8; mult <= 1.01e-2; mult *= 10.0) {
    Matrix attempt = k_sigma;
    attempt.diagonal().array() += mult * scale;
    Eigen::LLT<Matrix> llt(attempt);
    if (llt.info() == Eigen::Success) {
      res.l = llt.matrixL();
      res.jitter = mult * scale;
      res.ok = true;
      return res;
    }
  }
  return res;
}

// Internal hyperparameter vector layout:
//   [log l_1..d, log sf2, {a, b, c, log k0, log k1}?, theta_n, {log rq_alpha}?]
// with sigma_n^2 = floor + exp(theta_n) and B = LL^T + diag(kappa),
// L = [[a, 0], [b, c]].
struct ParamLayout {
  int dim = 0;
  bool learn_coreg = true;
  KernelFamily family = KernelFamily::RBF;

  int size() const {
    return dim + 1 + (learn_coreg ? 5 : 0) + 1 +
           (family == KernelFamily::RationalQuadratic ? 1 : 0);
  }
  int idx_sf2() const { return dim; }
  int idx_coreg() const { return dim + 1; }
  int idx_noise() const { return dim + 1 + (learn_coreg ? 5 : 0); }
  int idx_alpha() const { return idx_noise() + 1; }
};

struct Unpacked {
  Vector lengthscales;
  double sf2 = 1.0;
  Eigen::Matrix2d b = Eigen::Matrix2d::Identity();
  double a = 1.0, bb = 0.0, c = 1.0, k0 = 0.0, k1 = 0.0;
  double noise = GpModel::kNoiseFloor;
  double noise_exp = 0.0;  // exp(theta_n), for the gradient
  double rq_alpha = 1.0;
};

Unpacked unpack(const ParamLayout& lay, const Vector& theta,
                const Eigen::Matrix2d& fixed_b) {
  Unpacked u;
  u.lengthscales = theta.head(lay.dim).array().exp();
  u.sf2 = std::exp(theta(lay.idx_sf2()));
  if (lay.learn_coreg) {
    u.a = theta(lay.idx_coreg());
    u.bb = theta(lay.idx_coreg() + 1);
    u.c = theta(lay.idx_coreg() + 2);
    u.k0 = std::exp(theta(lay.idx_coreg() + 3));
    u.k1 = std::exp(theta(lay.idx_coreg() + 4));
    u.b << u.a * u.a + u.k0, u.a * u.bb, u.a * u.bb, u.bb * u.bb + u.c * u.c + u.k1;
  } else {
    u.b = fixed_b;
  }
  u.noise_exp = std::exp(theta(lay.idx_noise()));
  u.noise = GpModel::kNoiseFloor + u.noise_exp;
  if (lay.family == KernelFamily::RationalQuadratic) {
    u.rq_alpha = std::exp(theta(lay.idx_alpha()));
  }
  return u;
}

// Negative log marginal likelihood with analytic gradient. Returns false when
// the kernel matrix cannot be factorized at this point (treated as +inf).
struct MarginalObjective {
  const Matrix& x;               // standardized inputs
  const std::vector<Arm>& arms;
  const Vector& y;               // centered targets
  ParamLayout layout;
  Eigen::Matrix2d fixed_b = Eigen::Matrix2d::Identity();

  bool operator()(const Vector& theta, double& f, Vector& grad) const {
    if (!theta.allFinite()) return false;
    const Eigen::Index n = x.rows();
    const Unpacked u = unpack(layout, theta, fixed_b);
    if (!u.lengthscales.allFinite() || !std::isfinite(u.sf2) ||
        !std::isfinite(u.noise) || u.sf2 <= 0.0) {
      return false;
    }

    // Scaled squared distances and kernel profile.
    Matrix xs = x.array().rowwise() / u.lengthscales.transpose().array();
    Vector sq = xs.rowwise().squaredNorm();
    Matrix r2 = (-2.0 * xs * xs.transpose()).colwise() + sq;
    r2.rowwise() += sq.transpose();
    r2 = r2.cwiseMax(0.0);

    Matrix prof(n, n), dprof(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        double p = detail::profile(layout.family, r2(i, j), u.rq_alpha);
        double dp = detail::d_profile_dr2(layout.family, r2(i, j), u.rq_alpha);
        prof(i, j) = prof(j, i) = p;
        dprof(i, j) = dprof(j, i) = dp;
      }
    }

    Matrix bpat(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        bpat(i, j) = bpat(j, i) = u.b(arms[static_cast<std::size_t>(i)],
                                      arms[static_cast<std::size_t>(j)]);
      }
    }

    Matrix kx = u.sf2 * prof;            // kernel without task factor
    Matrix k = bpat.cwiseProduct(kx);    // full kernel
    Matrix k_sigma = k;
    k_sigma.diagonal().array() += u.noise;

    CholResult chol = cholesky_with_jitter(k_sigma);
    if (!chol.ok) return false;

    Vector alpha = chol.l.triangularView<Eigen::Lower>().solve(y);
    double quad = alpha.squaredNorm();
    chol.l.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha);
    double logdet = 2.0 * chol.l.diagonal().array().log().sum();
    double lml = -0.5 * quad - 0.5 * logdet - 0.5 * static_cast<double>(n) * kLog2Pi;
    if (!std::isfinite(lml)) return false;
    f = -lml;

    // W = alpha alpha^T - K_sigma^{-1}; grad lml/dtheta = 0.5 tr(W dK/dtheta).
    Matrix kinv = Matrix::Identity(n, n);
    chol.l.triangularView<Eigen::Lower>().solveInPlace(kinv);
    chol.l.transpose().triangularView<Eigen::Upper>().solveInPlace(kinv);
    Matrix w = alpha * alpha.transpose() - kinv;

    grad.setZero(layout.size());
    // Lengthscales: dK/dlog l_d = bpat * sf2 * dprof * (-2 delta_d^2 / l_d^2),
    // with sum_ij G_ij delta_d^2 = 2 (sum_i x_id^2 rowsum_i(G) - x_d^T G x_d).
    Matrix g = w.cwiseProduct(bpat).cwiseProduct(dprof) * u.sf2;
    Vector row_sums = g.rowwise().sum();
    for (int d = 0; d < layout.dim; ++d) {
      Vector xd = x.col(d);
      double qd = (xd.array().square() * row_sums.array()).sum();
      double hd = xd.dot(g * xd);
      double dlml = -(2.0 * (qd - hd)) / (u.lengthscales(d) * u.lengthscales(d));
      grad(d) = -dlml;
    }

    // Signal variance: dK/dlog sf2 = K.
    grad(layout.idx_sf2()) = -0.5 * w.cwiseProduct(k).sum();

    if (layout.learn_coreg) {
      Matrix h = w.cwiseProduct(kx);
      double s[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          s[arms[static_cast<std::size_t>(i)]][arms[static_cast<std::size_t>(j)]] +=
              h(i, j);
        }
      }
      double s01 = 0.5 * (s[0][1] + s[1][0]);
      grad(layout.idx_coreg() + 0) = -(u.a * s[0][0] + u.bb * s01);
      grad(layout.idx_coreg() + 1) = -(u.a * s01 + u.bb * s[1][1]);
      grad(layout.idx_coreg() + 2) = -(u.c * s[1][1]);
      grad(layout.idx_coreg() + 3) = -0.5 * u.k0 * s[0][0];
      grad(layout.idx_coreg() + 4) = -0.5 * u.k1 * s[1][1];
    }

    grad(layout.idx_noise()) = -0.5 * w.trace() * u.noise_exp;

    if (layout.family == KernelFamily::RationalQuadratic) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          acc += w(i, j) * bpat(i, j) *
                 detail::d_profile_dlog_alpha(layout.family, r2(i, j), u.rq_alpha) *
                 u.sf2;
        }
      }
      grad(layout.idx_alpha()) = -0.5 * acc;
    }
    return true;
  }
};

struct LbfgsResult {
  Vector theta;
  double f = std::numeric_limits<double>::infinity();
  bool ok = false;
};

template <typename Fn>
LbfgsResult lbfgs_minimize(const Fn& fn, Vector theta, int max_iters, double grad_tol) {
  LbfgsResult res;
  double f;
  Vector grad;
  if (!fn(theta, f, grad)) return res;

  const int history = 8;
  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0; iter < max_iters; ++iter) {
    if (grad.cwiseAbs().maxCoeff() < grad_tol * std::max(1.0, std::abs(f))) break;

    // Two-loop recursion.
    Vector dir = -grad;
    std::vector<double> a_coef(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      a_coef[i] = rho_hist[i] * s_hist[i].dot(dir);
      dir -= a_coef[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      dir *= gamma;
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      double b_coef = rho_hist[i] * y_hist[i].dot(dir);
      dir += (a_coef[i] - b_coef) * s_hist[i];
    }

    double descent = grad.dot(dir);
    if (descent >= 0.0 || !dir.allFinite()) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -grad;
      descent = grad.dot(dir);
    }

    // Backtracking Armijo line search.
    double step = 1.0;
    const double c1 = 1e-4;
    double f_new = f;
    Vector theta_new, grad_new;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      theta_new = theta + step * dir;
      if (fn(theta_new, f_new, grad_new) && f_new <= f + c1 * step * descent) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Vector s = theta_new - theta;
    Vector yv = grad_new - grad;
    double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    double df = f - f_new;
    theta = std::move(theta_new);
    grad = std::move(grad_new);
    f = f_new;
    if (df < 1e-10 * (1.0 + std::abs(f))) break;
  }

  res.theta = std::move(theta);
  res.f = f;
  res.ok = true;
  return res;
}

std::string query_label(const Query& q, std::size_t index) {
  switch (q.kind) {
    case Query::Kind::Latent:
      return "f" + std::to_string(q.arm) + "#" + std::to_string(index);
    case Query::Kind::Noisy:
      return "y" + std::to_string(q.arm) + "#" + std::to_string(index);
    case Query::Kind::Contrast:
      return "contrast#" + std::to_string(index);
  }
  return "?";
}

}  // namespace

GpModel GpModel::with_hypers(KernelSpec kernel, CoregionalizationSpec coreg,
                             double noise_variance, Matrix x, std::vector<Arm> arms,
                             Vector y, bool center_targets) {
  if (x.rows() != y.size() || static_cast<Eigen::Index>(arms.size()) != y.size()) {
    throw std::invalid_argument("training inputs, arms and targets must align");
  }
  if (!y.allFinite()) throw std::invalid_argument("training targets must be finite");
  for (Arm a : arms) {
    if (a != 0 && a != 1) throw std::invalid_argument("treatment arm must be 0 or 1");
  }
  kernel.validate(static_cast<int>(x.cols()));
  coreg.validate();
  GpModel m;
  m.kernel_ = std::move(kernel);
  m.coreg_ = std::move(coreg);
  m.noise_var_ = std::max(noise_variance, kNoiseFloor);
  m.x_ = std::move(x);
  m.arms_ = std::move(arms);
  m.y_ = std::move(y);
  m.y_mean_ = center_targets && m.y_.size() > 0 ? m.y_.mean() : 0.0;
  m.factorize();
  return m;
}

GpModel GpModel::prior(KernelSpec kernel, CoregionalizationSpec coreg,
                       double noise_variance, int input_dim) {
  kernel.validate(input_dim);
  coreg.validate();
  GpModel m;
  m.kernel_ = std::move(kernel);
  m.coreg_ = std::move(coreg);
  m.noise_var_ = std::max(noise_variance, kNoiseFloor);
  m.x_.resize(0, input_dim);
  m.y_.resize(0);
  return m;
}

GpModel GpModel::fit(Matrix x, std::vector<Arm> arms, Vector y, const KernelSpec& init,
                     const CoregionalizationSpec& init_coreg, double init_noise,
                     const GpFitOptions& opts) {
  const Eigen::Index n = x.rows();
  if (n < 1) throw std::invalid_argument("fit requires at least one training point");
  if (x.rows() != y.size() || static_cast<Eigen::Index>(arms.size()) != y.size()) {
    throw std::invalid_argument("training inputs, arms and targets must align");
  }
  if (!y.allFinite()) throw std::invalid_argument("training targets must be finite");
  const int dim = static_cast<int>(x.cols());
  init.validate(dim);

  // Standardize inputs; the optimized lengthscales are mapped back below.
  Vector x_mean = x.colwise().mean();
  Vector x_scale(dim);
  for (int d = 0; d < dim; ++d) {
    double var = (x.col(d).array() - x_mean(d)).square().sum() /
                 std::max<double>(1.0, static_cast<double>(n));
    x_scale(d) = std::sqrt(var);
    if (!(x_scale(d) > 1e-12)) x_scale(d) = 1.0;
  }
  Matrix xs = (x.rowwise() - x_mean.transpose()).array().rowwise() /
              x_scale.transpose().array();

  double y_mean = y.mean();
  Vector yc = y.array() - y_mean;
  double y_var = n > 1 ? yc.squaredNorm() / static_cast<double>(n) : 1.0;
  if (!(y_var > 1e-12)) y_var = 1.0;

  // Optional seeded subsample for the hyperparameter search.
  Matrix xs_opt = xs;
  Vector yc_opt = yc;
  std::vector<Arm> arms_opt = arms;
  if (opts.hyper_subsample > 0 && n > opts.hyper_subsample) {
    Rng rng(derive_seed(opts.seed, 0x5ab5a));
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (std::size_t i = 0; i < static_cast<std::size_t>(opts.hyper_subsample); ++i) {
      std::size_t j = i + static_cast<std::size_t>(
                              rng.uniform_index(idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    xs_opt.resize(opts.hyper_subsample, dim);
    yc_opt.resize(opts.hyper_subsample);
    arms_opt.resize(static_cast<std::size_t>(opts.hyper_subsample));
    for (int i = 0; i < opts.hyper_subsample; ++i) {
      xs_opt.row(i) = xs.row(idx[static_cast<std::size_t>(i)]);
      yc_opt(i) = yc(idx[static_cast<std::size_t>(i)]);
      arms_opt[static_cast<std::size_t>(i)] = arms[static_cast<std::size_t>(
          idx[static_cast<std::size_t>(i)])];
    }
  }

  ParamLayout lay{dim, opts.learn_coreg, init.family};
  MarginalObjective obj{xs_opt, arms_opt, yc_opt, lay, init_coreg.task_matrix};

  auto default_start = [&] {
    Vector t(lay.size());
    t.head(dim).setZero();                        // lengthscale 1 in std units
    t(lay.idx_sf2()) = std::log(y_var);
    if (lay.learn_coreg) {
      t(lay.idx_coreg() + 0) = 1.0;
      t(lay.idx_coreg() + 1) = 0.7;
      t(lay.idx_coreg() + 2) = 0.71;
      t(lay.idx_coreg() + 3) = std::log(0.05);
      t(lay.idx_coreg() + 4) = std::log(0.05);
    }
    t(lay.idx_noise()) = std::log(std::max(0.1 * y_var, kNoiseFloor));
    if (lay.family == KernelFamily::RationalQuadratic) t(lay.idx_alpha()) = 0.0;
    return t;
  };

  auto warm_start = [&] {
    Vector t = default_start();
    t.head(dim) = (init.lengthscales.array() / x_scale.array()).log();
    t(lay.idx_sf2()) = std::log(init.signal_variance);
    t(lay.idx_noise()) =
        std::log(std::max(init_noise - kNoiseFloor, 0.5 * kNoiseFloor));
    if (lay.family == KernelFamily::RationalQuadratic) {
      t(lay.idx_alpha()) = std::log(init.rq_alpha);
    }
    return t;
  };

  int n_starts = std::max(1, opts.restarts);
  std::vector<Vector> starts;
  starts.reserve(static_cast<std::size_t>(n_starts));
  starts.push_back(opts.warm_start ? warm_start() : default_start());
  for (int r = 1; r < n_starts; ++r) {
    Rng rng(derive_seed(opts.seed, 0x57a27, static_cast<std::uint64_t>(r)));
    Vector t = default_start();
    for (int d = 0; d < dim; ++d) {
      t(d) = rng.uniform(std::log(0.1), std::log(10.0));
    }
    t(lay.idx_sf2()) = std::log(y_var * std::exp(rng.uniform(std::log(0.1), std::log(10.0))));
    t(lay.idx_noise()) = std::log(std::max(
        0.1 * y_var * std::exp(rng.uniform(std::log(0.1), std::log(10.0))),
        kNoiseFloor));
    if (lay.learn_coreg) {
      t(lay.idx_coreg() + 0) = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
      t(lay.idx_coreg() + 1) = rng.uniform(-1.0, 1.0);
      t(lay.idx_coreg() + 2) = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
    }
    if (lay.family == KernelFamily::RationalQuadratic) {
      t(lay.idx_alpha()) = rng.uniform(std::log(0.3), std::log(3.0));
    }
    starts.push_back(std::move(t));
  }

  std::vector<LbfgsResult> results(starts.size());
  parallel_for(
      starts.size(),
      [&](std::size_t i) {
        results[i] = lbfgs_minimize(obj, starts[i], opts.max_iters, opts.grad_tol);
      },
      opts.workers);

  int best = -1;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].ok) continue;
    if (best < 0 || results[i].f < results[static_cast<std::size_t>(best)].f) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) {
    throw NumericalError("all hyperparameter starts failed to factorize");
  }

  const Unpacked u =
      unpack(lay, results[static_cast<std::size_t>(best)].theta, init_coreg.task_matrix);

  GpModel m;
  m.kernel_ = init;
  m.kernel_.lengthscales = u.lengthscales.array() * x_scale.array();
  m.kernel_.signal_variance = u.sf2;
  m.kernel_.rq_alpha = u.rq_alpha;
  m.coreg_.task_matrix = u.b;
  m.noise_var_ = u.noise;
  m.x_ = std::move(x);
  m.arms_ = std::move(arms);
  m.y_ = std::move(y);
  m.y_mean_ = y_mean;
  m.factorize();
  return m;
}

void GpModel::factorize() {
  const Eigen::Index n = x_.rows();
  if (n == 0) return;
  Matrix k = kernel_matrix_x(kernel_, x_, x_);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      k(i, j) *= coreg_.task_matrix(arms_[static_cast<std::size_t>(i)],
                                    arms_[static_cast<std::size_t>(j)]);
    }
  }
  k.diagonal().array() += noise_var_;
  CholResult chol = cholesky_with_jitter(k);
  if (!chol.ok) {
    throw NumericalError("kernel matrix factorization failed after jitter escalation");
  }
  chol_l_ = std::move(chol.l);
  jitter_ = chol.jitter;
  Vector yc = y_.array() - y_mean_;
  Vector tmp = chol_l_.triangularView<Eigen::Lower>().solve(yc);
  double quad = tmp.squaredNorm();
  chol_l_.transpose().triangularView<Eigen::Upper>().solveInPlace(tmp);
  alpha_ = std::move(tmp);
  double logdet = 2.0 * chol_l_.diagonal().array().log().sum();
  lml_ = -0.5 * quad - 0.5 * logdet - 0.5 * static_cast<double>(n) * kLog2Pi;
}

double GpModel::log_marginal_likelihood() const {
  if (x_.rows() == 0) return 0.0;
  if (alpha_.size() != y_.size()) throw NumericalError("stale factorization");
  return lml_;
}

double GpModel::prior_latent_var(Arm arm) const {
  return coreg_.task_matrix(arm, arm) * kernel_.signal_variance;
}

Vector GpModel::prior_cross_train(const Query& q) const {
  const Eigen::Index n = x_.rows();
  Vector col(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double kx = kernel_eval_x(kernel_, x_.row(i), q.x);
    Arm ti = arms_[static_cast<std::size_t>(i)];
    if (q.kind == Query::Kind::Contrast) {
      col(i) = (coreg_.task_matrix(ti, 1) - coreg_.task_matrix(ti, 0)) * kx;
    } else {
      col(i) = coreg_.task_matrix(ti, q.arm) * kx;
    }
  }
  return col;
}

double GpModel::prior_cov(const Query& a, const Query& b) const {
  double kx = kernel_eval_x(kernel_, a.x, b.x);
  const auto& bm = coreg_.task_matrix;
  bool ca = a.kind == Query::Kind::Contrast;
  bool cb = b.kind == Query::Kind::Contrast;
  if (ca && cb) return (bm(0, 0) + bm(1, 1) - 2.0 * bm(0, 1)) * kx;
  if (ca) return (bm(1, b.arm) - bm(0, b.arm)) * kx;
  if (cb) return (bm(a.arm, 1) - bm(a.arm, 0)) * kx;
  return bm(a.arm, b.arm) * kx;
}

JointGaussian GpModel::posterior(std::span<const Query> queries) const {
  if (queries.empty()) throw std::invalid_argument("posterior requires queries");
  const Eigen::Index n = x_.rows();
  const Eigen::Index m = static_cast<Eigen::Index>(queries.size());

  JointGaussian out;
  out.labels.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (queries[i].x.size() != input_dim()) {
      throw std::invalid_argument("query dimension mismatch");
    }
    out.labels.push_back(query_label(queries[i], i));
  }

  Matrix k_prior(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double c = prior_cov(queries[static_cast<std::size_t>(i)],
                           queries[static_cast<std::size_t>(j)]);
      k_prior(i, j) = k_prior(j, i) = c;
    }
    if (queries[static_cast<std::size_t>(i)].kind == Query::Kind::Noisy) {
      k_prior(i, i) += noise_var_;
    }
  }

  out.mean.setZero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (queries[static_cast<std::size_t>(i)].kind != Query::Kind::Contrast) {
      out.mean(i) = y_mean_;
    }
  }

  if (n == 0) {
    out.cov = k_prior;
    return out;
  }

  Matrix k_star(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    k_star.col(j) = prior_cross_train(queries[static_cast<std::size_t>(j)]);
  }
  out.mean += k_star.transpose() * alpha_;
  Matrix v = chol_l_.triangularView<Eigen::Lower>().solve(k_star);
  out.cov = k_prior - v.transpose() * v;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

namespace detail {

bool lml_with_grad(const Matrix& x, const std::vector<Arm>& arms,
                   const Vector& y_centered, KernelFamily family, bool learn_coreg,
                   const Eigen::Matrix2d& fixed_b, const Vector& theta, double& lml,
                   Vector& grad) {
  ParamLayout lay{static_cast<int>(x.cols()), learn_coreg, family};
  MarginalObjective obj{x, arms, y_centered, lay, fixed_b};
  double f;
  if (!obj(theta, f, grad)) return false;
  lml = -f;
  grad = -grad;
  return true;
}

}  // namespace detail

GpModel::BatchSolve GpModel::solve_latents(const Matrix& xs, Arm arm) const {
  if (arm != 0 && arm != 1) throw std::invalid_argument("treatment arm must be 0 or 1");
  const Eigen::Index n = x_.rows();
  const Eigen::Index m = xs.rows();
  BatchSolve out;
  const double prior = prior_latent_var(arm);
  if (n == 0) {
    out.mean = Vector::Constant(m, y_mean_);
    out.var = Vector::Constant(m, prior);
    out.v.resize(0, m);
    return out;
  }
  Matrix k_star = kernel_matrix_x(kernel_, x_, xs);
  for (Eigen::Index i = 0; i < n; ++i) {
    k_star.row(i) *= coreg_.task_matrix(arms_[static_cast<std::size_t>(i)], arm);
  }
  out.mean = (k_star.transpose() * alpha_).array() + y_mean_;
  out.v = chol_l_.triangularView<Eigen::Lower>().solve(k_star);
  out.var = (prior - out.v.colwise().squaredNorm().transpose().array()).cwiseMax(0.0);
  return out;
}

}  // namespace rdesign
