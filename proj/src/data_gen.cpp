#include "rdesign/data_gen.hpp"

#include <cmath>
#include <memory>
#include <numbers>

namespace rdesign {

namespace {

constexpr double kPi = std::numbers::pi;

double eta_simple(double x) { return 2.0 * std::exp(-0.8 * (x + 2.0)); }
double eta_complex(double x) {
  return 5.0 * std::exp(-(x + 3.0) * (x + 3.0) / 12.5) * (1.0 + 0.2 * std::cos(x));
}
double mu0_simple(double x) { return 0.8 * x * x * x - x; }
double mu0_complex(double x) {
  return 2.0 * std::sin(3.0 * kPi * x) - 1.5 * std::exp(1.5 * (x - 0.8));
}
double tau_simple(double x) { return 1.0 - x; }
double tau_complex(double x) { return 1.0 + x - x * x; }

/// Fixed-weight tanh network: two hidden layers of width 32 with N(0,1)/sqrt(fan_in)
/// weights, linear readout.
class RandomMlp {
 public:
  RandomMlp(int input_dim, std::uint64_t seed) {
    Rng rng(seed);
    w1_ = draw(32, input_dim, rng);
    w2_ = draw(32, 32, rng);
    w3_ = draw(1, 32, rng);
  }

  double operator()(const Vector& z) const {
    Vector h1 = (w1_ * z).array().tanh();
    Vector h2 = (w2_ * h1).array().tanh();
    return (w3_ * h2)(0);
  }

 private:
  static Matrix draw(int rows, int cols, Rng& rng) {
    Matrix w(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) w(i, j) = scale * rng.normal();
    }
    return w;
  }

  Matrix w1_, w2_, w3_;
};

std::function<Vector(Rng&)> uniform_box_sampler(int dim, double lo, double hi) {
  return [dim, lo, hi](Rng& rng) {
    Vector x(dim);
    for (int d = 0; d < dim; ++d) x(d) = rng.uniform(lo, hi);
    return x;
  };
}

}  // namespace

ScenarioId ScenarioId::from_index(int index) {
  if (index < 1 || index > 8) {
    throw std::invalid_argument("scenario index must be in 1..8");
  }
  int bits = index - 1;
  return {bits / 4 == 1, (bits / 2) % 2 == 1, bits % 2 == 1};
}

GroundTruthEnv univariate_env(ScenarioId scenario, UnivariateParams params) {
  GroundTruthEnv env;
  env.dim = 1;
  env.noise_sd = params.noise_sd;
  env.name = "sim" + std::to_string(scenario.index());
  env.eta = scenario.eta_complex
                ? std::function<double(const Vector&)>(
                      [](const Vector& x) { return eta_complex(x(0)); })
                : [](const Vector& x) { return eta_simple(x(0)); };
  env.mu0 = scenario.mu0_complex
                ? std::function<double(const Vector&)>(
                      [](const Vector& x) { return mu0_complex(x(0)); })
                : [](const Vector& x) { return mu0_simple(x(0)); };
  env.tau = scenario.tau_complex
                ? std::function<double(const Vector&)>(
                      [](const Vector& x) { return tau_complex(x(0)); })
                : [](const Vector& x) { return tau_simple(x(0)); };
  env.propensity = [](const Vector& x) { return sigmoid(x(0)); };
  const double b0 = params.participation_beta0;
  const double b1 = params.participation_beta1;
  env.participation = [b0, b1](const Vector& x) { return sigmoid(b0 + b1 * x(0)); };
  env.draw_obs_x = uniform_box_sampler(1, -2.0, 2.0);
  env.draw_pool_x = uniform_box_sampler(1, -2.0, 2.0);
  env.draw_target_x = uniform_box_sampler(1, -2.0, 2.0);
  return env;
}

GroundTruthEnv multivariate_env(int dim, bool covariate_shift, std::uint64_t seed,
                                double noise_sd) {
  if (dim < 6 || dim % 3 != 0) {
    throw std::invalid_argument(
        "multivariate environment needs dim >= 6 divisible by 3");
  }
  const int group = dim / 3;  // confounders first, then prognostic, then noise
  auto f_mu = std::make_shared<RandomMlp>(2 * group, derive_seed(seed, 0x300001));
  auto f_prop = std::make_shared<RandomMlp>(group, derive_seed(seed, 0x300002));

  GroundTruthEnv env;
  env.dim = dim;
  env.noise_sd = noise_sd;
  env.name = "mv" + std::to_string(dim) + (covariate_shift ? "-shift" : "");
  env.tau = [](const Vector& x) {
    return 1.0 + 2.0 * std::sin(2.0 * kPi * x(0)) + 0.5 * std::cos(kPi * x(1));
  };
  env.eta = [](const Vector& x) {
    return 1.5 + (x(0) + x(1)) + 0.5 * x(0) * x(0);
  };
  env.mu0 = [f_mu, group](const Vector& x) {
    return (*f_mu)(x.head(2 * group)) +
           0.5 * std::sin(3.0 * kPi * x(0)) * std::cos(kPi * x(1));
  };
  env.propensity = [f_prop, group](const Vector& x) {
    Vector xc = x.head(group);
    return sigmoid((*f_prop)(xc) + 0.2 * std::tanh(xc.sum()));
  };
  env.draw_obs_x = uniform_box_sampler(dim, -2.0, 2.0);
  env.draw_pool_x =
      uniform_box_sampler(dim, covariate_shift ? -4.0 : -2.0, 2.0);
  env.draw_target_x = uniform_box_sampler(dim, -2.0, 2.0);
  return env;
}

double SurfaceSpec::operator()(const Vector& x) const {
  double v = constant;
  if (linear.size() > 0) v += linear.dot(x);
  if (quadratic.size() > 0) v += quadratic.dot(Vector(x.array().square()));
  return v;
}

void SurfaceSpec::validate(int dim) const {
  if (linear.size() > 0 && linear.size() != dim) {
    throw std::invalid_argument("surface linear coefficients must match dimension");
  }
  if (quadratic.size() > 0 && quadratic.size() != dim) {
    throw std::invalid_argument("surface quadratic coefficients must match dimension");
  }
}

GroundTruthEnv csv_env(Matrix covariates, SurfaceSpec mu0, SurfaceSpec tau,
                       SurfaceSpec eta, double noise_sd) {
  if (covariates.rows() < 1) throw std::invalid_argument("covariate table is empty");
  const int dim = static_cast<int>(covariates.cols());
  mu0.validate(dim);
  tau.validate(dim);
  eta.validate(dim);
  auto table = std::make_shared<Matrix>(std::move(covariates));

  GroundTruthEnv env;
  env.dim = dim;
  env.noise_sd = noise_sd;
  env.name = "csv";
  env.mu0 = [mu0](const Vector& x) { return mu0(x); };
  env.tau = [tau](const Vector& x) { return tau(x); };
  env.eta = [eta](const Vector& x) { return eta(x); };
  env.propensity = [](const Vector& x) { return sigmoid(x(0)); };
  auto draw_row = [table](Rng& rng) -> Vector {
    return table->row(static_cast<Eigen::Index>(
        rng.uniform_index(static_cast<std::uint64_t>(table->rows()))));
  };
  env.draw_obs_x = draw_row;
  env.draw_pool_x = draw_row;
  env.draw_target_x = draw_row;
  return env;
}

CausalDataset sample_observational(const GroundTruthEnv& env, Eigen::Index n,
                                   Rng& rng) {
  if (n < 1) throw std::invalid_argument("observational sample size must be >= 1");
  CausalDataset data = CausalDataset::empty(env.dim);
  data.x.resize(n, env.dim);
  data.y.resize(n);
  data.t.resize(static_cast<std::size_t>(n));
  data.s.assign(static_cast<std::size_t>(n), Source::Observational);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector x = env.draw_obs_x(rng);
    Arm t = rng.bernoulli(env.propensity(x)) ? 1 : 0;
    data.x.row(i) = x;
    data.t[static_cast<std::size_t>(i)] = t;
    data.y(i) = env.mu_obs(x, t) + env.noise_sd * rng.normal();
  }
  return data;
}

Matrix sample_pool(const GroundTruthEnv& env, Eigen::Index n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("pool size must be >= 1");
  Matrix pool(n, env.dim);
  Eigen::Index accepted = 0;
  std::uint64_t rejections = 0;
  while (accepted < n) {
    Vector x = env.draw_pool_x(rng);
    if (env.participation && !rng.bernoulli(env.participation(x))) {
      if (++rejections > 1000000) {
        throw NumericalError("pool rejection sampling stalled");
      }
      continue;
    }
    pool.row(accepted++) = x;
  }
  return pool;
}

double query_outcome(const GroundTruthEnv& env, const Vector& x, Arm t, Rng& rng) {
  if (t != 0 && t != 1) throw std::invalid_argument("treatment arm must be 0 or 1");
  return env.mu(x, t) + env.noise_sd * rng.normal();
}

EvalGrid sample_eval_grid(const GroundTruthEnv& env, Eigen::Index n, Rng& rng) {
  EvalGrid grid;
  grid.x.resize(n, env.dim);
  grid.true_tau.resize(n);
  grid.true_mu0.resize(n);
  grid.true_mu1.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector x = env.draw_target_x(rng);
    grid.x.row(i) = x;
    grid.true_mu0(i) = env.mu(x, 0);
    grid.true_mu1(i) = env.mu(x, 1);
    grid.true_tau(i) = grid.true_mu1(i) - grid.true_mu0(i);
  }
  return grid;
}

}  // namespace rdesign
