#include <doctest.h>

#include <cmath>

#include "rdesign/gauss_hermite.hpp"
#include "rdesign/kernels.hpp"

using namespace rdesign;

namespace {
Vector vec1(double v) { return Vector::Constant(1, v); }
}  // namespace

TEST_CASE("kernel_eval at zero distance returns signal variance") {
  KernelSpec spec = KernelSpec::rbf(1, 1.0, 2.5);
  auto coreg = CoregionalizationSpec::identity();
  CHECK(kernel_eval(spec, coreg, vec1(0.3), 0, vec1(0.3), 0) == doctest::Approx(2.5));
  CHECK(kernel_eval(spec, coreg, vec1(0.3), 1, vec1(0.3), 1) == doctest::Approx(2.5));
}

TEST_CASE("identity task matrix kills cross-arm covariance") {
  KernelSpec spec = KernelSpec::rbf(1, 1.0, 1.0);
  auto coreg = CoregionalizationSpec::identity();
  CHECK(kernel_eval(spec, coreg, vec1(-1.2), 0, vec1(0.7), 1) == doctest::Approx(0.0));
}

TEST_CASE("RBF unit distance evaluates to exp(-1/2)") {
  KernelSpec spec = KernelSpec::rbf(1, 1.0, 1.0);
  auto coreg = CoregionalizationSpec::identity();
  double k = kernel_eval(spec, coreg, vec1(0.0), 0, vec1(1.0), 0);
  CHECK(k == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(k == doctest::Approx(0.6065306597).epsilon(1e-9));
}

TEST_CASE("kernel is symmetric in its arguments") {
  for (auto family : {KernelFamily::RBF, KernelFamily::Matern32,
                      KernelFamily::Matern52, KernelFamily::RationalQuadratic}) {
    KernelSpec spec;
    spec.family = family;
    spec.lengthscales = Vector::Constant(2, 0.8);
    spec.signal_variance = 1.3;
    spec.rq_alpha = 1.7;
    auto coreg = CoregionalizationSpec::from_cholesky(1.0, 0.6, 0.7, 0.05, 0.02);
    Vector a(2), b(2);
    a << 0.2, -1.4;
    b << 1.1, 0.5;
    CHECK(kernel_eval(spec, coreg, a, 0, b, 1) ==
          doctest::Approx(kernel_eval(spec, coreg, b, 1, a, 0)).epsilon(1e-15));
  }
}

TEST_CASE("dimension mismatch is rejected") {
  KernelSpec spec = KernelSpec::rbf(2);
  auto coreg = CoregionalizationSpec::identity();
  CHECK_THROWS_AS(kernel_eval(spec, coreg, vec1(0.0), 0, vec1(1.0), 0),
                  std::invalid_argument);
}

TEST_CASE("kernel_matrix_x matches pairwise scalar evaluation") {
  for (auto family : {KernelFamily::RBF, KernelFamily::Matern32,
                      KernelFamily::Matern52, KernelFamily::RationalQuadratic}) {
    KernelSpec spec;
    spec.family = family;
    spec.lengthscales = Vector(3);
    spec.lengthscales << 0.5, 1.5, 2.0;
    spec.signal_variance = 0.9;
    spec.rq_alpha = 0.8;
    Matrix a(4, 3), b(2, 3);
    a << 0.1, -0.2, 0.3, 1.0, 0.5, -1.5, -2.0, 0.2, 0.0, 0.7, 0.7, 0.7;
    b << 0.0, 0.0, 0.0, -1.0, 2.0, 0.5;
    Matrix k = kernel_matrix_x(spec, a, b);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 2; ++j) {
        CHECK(k(i, j) ==
              doctest::Approx(kernel_eval_x(spec, a.row(i), b.row(j))).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("coregionalization from_cholesky is symmetric PSD") {
  auto coreg = CoregionalizationSpec::from_cholesky(0.9, -0.4, 1.2, 0.01, 0.3);
  CHECK_NOTHROW(coreg.validate());
  CHECK(coreg.task_matrix(0, 1) == doctest::Approx(coreg.task_matrix(1, 0)));
}

TEST_CASE("gauss_hermite nodes integrate low moments exactly") {
  for (int n : {2, 8, 31, 96}) {
    auto [z, w] = gauss_hermite(n);
    double sqrt_pi = std::sqrt(std::numbers::pi);
    CHECK(w.sum() == doctest::Approx(sqrt_pi).epsilon(1e-12));
    CHECK(w.dot(z) == doctest::Approx(0.0).epsilon(1e-10));
    // int z^2 exp(-z^2) dz = sqrt(pi)/2
    CHECK(w.dot(Vector(z.array().square())) ==
          doctest::Approx(0.5 * sqrt_pi).epsilon(1e-10));
    if (n >= 4) {
      // int z^4 exp(-z^2) dz = 3 sqrt(pi)/4
      CHECK(w.dot(Vector(z.array().pow(4))) ==
            doctest::Approx(0.75 * sqrt_pi).epsilon(1e-10));
    }
  }
}

TEST_CASE("gauss_hermite matches a normal expectation against dense sums") {
  auto [z, w] = gauss_hermite(96);
  // E[cos(z)] for z ~ N(0,1) equals exp(-1/2).
  double acc = 0.0;
  for (int k = 0; k < z.size(); ++k) {
    acc += w(k) * std::cos(std::sqrt(2.0) * z(k));
  }
  acc /= std::sqrt(std::numbers::pi);
  CHECK(acc == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}
