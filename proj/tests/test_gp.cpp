#include <doctest.h>

#include <cmath>
#include <vector>

#include "rdesign/gp.hpp"
#include "rdesign/rng.hpp"
#include "support/dense_oracle.hpp"

using namespace rdesign;
using rdesign::testing::DenseProblem;

namespace {

Vector vec1(double v) { return Vector::Constant(1, v); }

DenseProblem random_problem(Rng& rng, int n, int dim, bool coupled_arms = true) {
  DenseProblem p;
  KernelFamily families[] = {KernelFamily::RBF, KernelFamily::Matern32,
                             KernelFamily::Matern52, KernelFamily::RationalQuadratic};
  p.kernel.family = families[rng.uniform_index(4)];
  p.kernel.lengthscales = Vector(dim);
  for (int d = 0; d < dim; ++d) p.kernel.lengthscales(d) = rng.uniform(0.3, 2.0);
  p.kernel.signal_variance = rng.uniform(0.5, 2.0);
  p.kernel.rq_alpha = rng.uniform(0.5, 2.0);
  if (coupled_arms) {
    p.coreg = CoregionalizationSpec::from_cholesky(
        rng.uniform(0.6, 1.2), rng.uniform(-0.8, 0.8), rng.uniform(0.4, 1.0),
        rng.uniform(0.0, 0.1), rng.uniform(0.0, 0.1));
  }
  p.noise_variance = rng.uniform(1e-3, 0.5);
  p.x.resize(n, dim);
  p.arms.resize(static_cast<std::size_t>(n));
  p.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) p.x(i, d) = rng.uniform(-2.0, 2.0);
    p.arms[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
    p.y(i) = rng.normal(0.0, 1.0);
  }
  return p;
}

GpModel model_of(const DenseProblem& p) {
  return GpModel::with_hypers(p.kernel, p.coreg, p.noise_variance, p.x, p.arms, p.y);
}

std::vector<Query> random_queries(Rng& rng, int m, int dim) {
  std::vector<Query> qs;
  for (int j = 0; j < m; ++j) {
    Vector x(dim);
    for (int d = 0; d < dim; ++d) x(d) = rng.uniform(-2.0, 2.0);
    switch (rng.uniform_index(3)) {
      case 0: qs.push_back(Query::latent(x, rng.bernoulli(0.5) ? 1 : 0)); break;
      case 1: qs.push_back(Query::noisy(x, rng.bernoulli(0.5) ? 1 : 0)); break;
      default: qs.push_back(Query::contrast(x)); break;
    }
  }
  return qs;
}

}  // namespace

TEST_CASE("posterior at a training point nearly interpolates with tiny noise") {
  DenseProblem p;
  p.kernel = KernelSpec::rbf(1, 1.0, 1.0);
  p.noise_variance = 1e-8;  // floored to 1e-6 internally; still near-interpolating
  p.x.resize(3, 1);
  p.x << -1.0, 0.0, 1.0;
  p.arms = {0, 0, 0};
  p.y.resize(3);
  p.y << 0.5, -0.2, 0.8;
  GpModel m = model_of(p);
  std::vector<Query> q{Query::latent(vec1(0.0), 0)};
  JointGaussian post = m.posterior(q);
  CHECK(post.mean(0) == doctest::Approx(-0.2).epsilon(1e-3));
  // The documented noise floor (1e-6) plus diagonal jitter is the attainable
  // variance at a training point, so the bound sits just above the floor.
  CHECK(post.cov(0, 0) <= 2e-6);
}

TEST_CASE("empty training set returns the prior") {
  KernelSpec spec = KernelSpec::rbf(2, 1.3, 1.7);
  auto coreg = CoregionalizationSpec::from_cholesky(1.0, 0.5, 0.8, 0.1, 0.1);
  GpModel m = GpModel::prior(spec, coreg, 0.01, 2);
  Vector x(2);
  x << 0.4, -0.9;
  std::vector<Query> q{Query::latent(x, 1), Query::contrast(x)};
  JointGaussian post = m.posterior(q);
  CHECK(post.mean(0) == doctest::Approx(0.0));
  CHECK(post.mean(1) == doctest::Approx(0.0));
  CHECK(post.cov(0, 0) ==
        doctest::Approx(kernel_eval(spec, coreg, x, 1, x, 1)).epsilon(1e-12));
  const auto& b = coreg.task_matrix;
  CHECK(post.cov(1, 1) == doctest::Approx((b(0, 0) + b(1, 1) - 2 * b(0, 1)) *
                                          spec.signal_variance)
                              .epsilon(1e-12));
}

TEST_CASE("three-point posterior matches the dense oracle") {
  Rng rng(7);
  DenseProblem p = random_problem(rng, 3, 2);
  GpModel m = model_of(p);
  auto queries = random_queries(rng, 2, 2);
  JointGaussian post = m.posterior(queries);
  JointGaussian oracle = rdesign::testing::dense_posterior(p, queries);
  CHECK((post.mean - oracle.mean).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((post.cov - oracle.cov).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("posterior matches the dense oracle on random instances") {
  Rng rng(2024);
  for (int rep = 0; rep < 25; ++rep) {
    int n = 1 + static_cast<int>(rng.uniform_index(20));
    int dim = 1 + static_cast<int>(rng.uniform_index(6));
    DenseProblem p = random_problem(rng, n, dim);
    GpModel m = model_of(p);
    auto queries = random_queries(rng, 4, dim);
    JointGaussian post = m.posterior(queries);
    JointGaussian oracle = rdesign::testing::dense_posterior(p, queries);
    CHECK((post.mean - oracle.mean).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((post.cov - oracle.cov).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("log marginal likelihood of a single standardized point") {
  DenseProblem p;
  p.kernel = KernelSpec::rbf(1, 1.0, 1.0);
  p.noise_variance = 0.0;  // floors to 1e-6
  p.x.resize(1, 1);
  p.x << 0.0;
  p.arms = {0};
  p.y = vec1(0.0);
  GpModel m = model_of(p);
  CHECK(m.log_marginal_likelihood() == doctest::Approx(-0.9189385).epsilon(1e-3));
}

TEST_CASE("zero targets zero the quadratic term") {
  Rng rng(11);
  DenseProblem p = random_problem(rng, 5, 1);
  p.y.setZero();
  GpModel m = model_of(p);
  // Remaining terms only: -1/2 log det - n/2 log 2pi, via the dense oracle.
  CHECK(m.log_marginal_likelihood() ==
        doctest::Approx(rdesign::testing::dense_log_marginal_likelihood(p))
            .epsilon(1e-9));
}

TEST_CASE("two-point log marginal likelihood matches the dense oracle") {
  DenseProblem p;
  p.kernel = KernelSpec::rbf(1, 0.7, 1.4);
  p.noise_variance = 0.3;
  p.x.resize(2, 1);
  p.x << -0.5, 1.0;
  p.arms = {0, 1};
  p.coreg = CoregionalizationSpec::from_cholesky(1.0, 0.4, 0.9, 0.0, 0.0);
  p.y.resize(2);
  p.y << 0.3, -1.1;
  GpModel m = model_of(p);
  CHECK(m.log_marginal_likelihood() ==
        doctest::Approx(rdesign::testing::dense_log_marginal_likelihood(p))
            .epsilon(1e-10));
}

TEST_CASE("analytic marginal-likelihood gradient agrees with finite differences") {
  Rng rng(31);
  for (auto family : {KernelFamily::RBF, KernelFamily::Matern32,
                      KernelFamily::Matern52, KernelFamily::RationalQuadratic}) {
    DenseProblem p = random_problem(rng, 12, 2);
    p.kernel.family = family;
    Vector yc = p.y.array() - p.y.mean();
    int n_params = 2 + 1 + 5 + 1 + (family == KernelFamily::RationalQuadratic ? 1 : 0);
    Vector theta(n_params);
    theta.setZero();
    theta(0) = std::log(0.8);
    theta(1) = std::log(1.2);
    theta(2) = std::log(0.9);   // sf2
    theta(3) = 1.0;             // coreg a
    theta(4) = 0.4;             // coreg b
    theta(5) = 0.8;             // coreg c
    theta(6) = std::log(0.05);  // kappa0
    theta(7) = std::log(0.03);  // kappa1
    theta(8) = std::log(0.2);   // noise
    if (n_params == 10) theta(9) = std::log(1.3);

    double lml;
    Vector grad;
    REQUIRE(detail::lml_with_grad(p.x, p.arms, yc, family, true,
                                  Eigen::Matrix2d::Identity(), theta, lml, grad));
    const double h = 1e-6;
    for (int k = 0; k < n_params; ++k) {
      Vector tp = theta, tm = theta;
      tp(k) += h;
      tm(k) -= h;
      double lp, lm;
      Vector g_unused;
      REQUIRE(detail::lml_with_grad(p.x, p.arms, yc, family, true,
                                    Eigen::Matrix2d::Identity(), tp, lp, g_unused));
      REQUIRE(detail::lml_with_grad(p.x, p.arms, yc, family, true,
                                    Eigen::Matrix2d::Identity(), tm, lm, g_unused));
      double fd = (lp - lm) / (2.0 * h);
      CHECK(grad(k) == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("fit recovers a constant function") {
  Matrix x(6, 1);
  x << -2, -1, 0, 1, 1.5, 2;
  Vector y = Vector::Constant(6, 3.25);
  GpFitOptions opts;
  opts.restarts = 2;
  GpModel m = GpModel::fit(x, {0, 0, 0, 1, 1, 1}, y, KernelSpec::rbf(1),
                           CoregionalizationSpec::identity(), 0.1, opts);
  std::vector<Query> q{Query::latent(vec1(0.3), 0), Query::latent(vec1(-1.7), 1)};
  JointGaussian post = m.posterior(q);
  CHECK(post.mean(0) == doctest::Approx(3.25).epsilon(1e-6));
  CHECK(post.mean(1) == doctest::Approx(3.25).epsilon(1e-6));
}

TEST_CASE("fit completes on a single training point") {
  Matrix x(1, 1);
  x << 0.5;
  Vector y = vec1(1.0);
  GpFitOptions opts;
  opts.restarts = 2;
  GpModel m = GpModel::fit(x, {1}, y, KernelSpec::rbf(1),
                           CoregionalizationSpec::identity(), 0.1, opts);
  CHECK(std::isfinite(m.log_marginal_likelihood()));
}

TEST_CASE("fit rejects bad inputs") {
  Matrix x(2, 1);
  x << 0.0, 1.0;
  Vector y(2);
  y << 1.0, std::numeric_limits<double>::quiet_NaN();
  GpFitOptions opts;
  CHECK_THROWS_AS(GpModel::fit(x, {0, 0}, y, KernelSpec::rbf(1),
                               CoregionalizationSpec::identity(), 0.1, opts),
                  std::invalid_argument);
  CHECK_THROWS_AS(GpModel::fit(Matrix(0, 1), {}, Vector(0), KernelSpec::rbf(1),
                               CoregionalizationSpec::identity(), 0.1, opts),
                  std::invalid_argument);
}

TEST_CASE("fit recovers the lengthscale of a known generator") {
  // Data from a known single-task GP; the refit lengthscale should land in a
  // factor-two bracket of the truth (median over seeds).
  const double true_ls = 0.5;
  std::vector<double> recovered;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(derive_seed(seed, 0xf17));
    int n = 100;
    Matrix x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = rng.uniform(-2.0, 2.0);
    KernelSpec gen = KernelSpec::rbf(1, true_ls, 1.0);
    Matrix k = kernel_matrix_x(gen, x, x);
    k.diagonal().array() += 1e-10;
    Eigen::LLT<Matrix> llt(k);
    Vector z(n);
    for (int i = 0; i < n; ++i) z(i) = rng.normal(0.0, 1.0);
    Vector f = Matrix(llt.matrixL()) * z;
    Vector y = f;
    for (int i = 0; i < n; ++i) y(i) += rng.normal(0.0, 0.1);

    GpFitOptions opts;
    opts.seed = seed;
    opts.learn_coreg = false;
    GpModel m = GpModel::fit(x, std::vector<Arm>(static_cast<std::size_t>(n), 0), y,
                             KernelSpec::rbf(1), CoregionalizationSpec::identity(),
                             0.01, opts);
    recovered.push_back(m.kernel().lengthscales(0));
  }
  std::sort(recovered.begin(), recovered.end());
  double median = 0.5 * (recovered[4] + recovered[5]);
  CHECK(median >= 0.25);
  CHECK(median <= 1.0);
}

TEST_CASE("covariances are symmetric with near-PSD spectra") {
  Rng rng(99);
  for (int rep = 0; rep < 10; ++rep) {
    DenseProblem p = random_problem(rng, 8, 2);
    GpModel m = model_of(p);
    auto queries = random_queries(rng, 5, 2);
    JointGaussian post = m.posterior(queries);
    CHECK((post.cov - post.cov.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> es(post.cov);
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
    CHECK_NOTHROW(post.validate());
  }
}

TEST_CASE("posterior marginalization consistency") {
  Rng rng(123);
  DenseProblem p = random_problem(rng, 10, 3);
  GpModel m = model_of(p);
  auto queries = random_queries(rng, 6, 3);
  JointGaussian full = m.posterior(queries);
  std::vector<Query> subset{queries[1], queries[4], queries[5]};
  JointGaussian small = m.posterior(subset);
  JointGaussian selected = full.marginal({1, 4, 5});
  CHECK((small.mean - selected.mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((small.cov - selected.cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("adding a training point never increases posterior variance") {
  Rng rng(55);
  for (int rep = 0; rep < 5; ++rep) {
    DenseProblem p = random_problem(rng, 9, 2);
    DenseProblem smaller = p;
    smaller.x = p.x.topRows(8);
    smaller.y = p.y.head(8);
    smaller.arms.assign(p.arms.begin(), p.arms.end() - 1);
    GpModel before = model_of(smaller);
    GpModel after = model_of(p);
    auto queries = random_queries(rng, 6, 2);
    JointGaussian pre = before.posterior(queries);
    JointGaussian post = after.posterior(queries);
    for (int i = 0; i < 6; ++i) {
      CHECK(post.cov(i, i) <= pre.cov(i, i) + 1e-8);
    }
  }
}

TEST_CASE("contrast variance equals the assembled identity") {
  Rng rng(77);
  DenseProblem p = random_problem(rng, 7, 2);
  GpModel m = model_of(p);
  Vector x(2);
  x << 0.25, -0.75;
  std::vector<Query> q{Query::contrast(x), Query::latent(x, 0), Query::latent(x, 1)};
  JointGaussian post = m.posterior(q);
  double assembled = post.cov(2, 2) + post.cov(1, 1) - 2.0 * post.cov(1, 2);
  CHECK(post.cov(0, 0) == doctest::Approx(assembled).epsilon(1e-12));
}

TEST_CASE("solve_latents agrees with posterior()") {
  Rng rng(88);
  DenseProblem p = random_problem(rng, 12, 2);
  GpModel m = model_of(p);
  Matrix xs(4, 2);
  for (int i = 0; i < 4; ++i) {
    xs(i, 0) = rng.uniform(-2, 2);
    xs(i, 1) = rng.uniform(-2, 2);
  }
  for (Arm arm : {0, 1}) {
    auto batch = m.solve_latents(xs, arm);
    std::vector<Query> qs;
    for (int i = 0; i < 4; ++i) qs.push_back(Query::latent(xs.row(i), arm));
    JointGaussian post = m.posterior(qs);
    CHECK((batch.mean - post.mean).cwiseAbs().maxCoeff() < 1e-10);
    for (int i = 0; i < 4; ++i) {
      CHECK(batch.var(i) == doctest::Approx(post.cov(i, i)).epsilon(1e-10));
    }
  }
}

TEST_CASE("posterior rejects an empty query list") {
  GpModel m = GpModel::prior(KernelSpec::rbf(1), CoregionalizationSpec::identity(),
                             0.1, 1);
  std::vector<Query> none;
  CHECK_THROWS_AS(m.posterior(none), std::invalid_argument);
}
