#include "rdesign/metrics.hpp"

#include <cmath>

namespace rdesign {

void EvalGrid::validate() const {
  if (true_tau.size() != x.rows() || true_mu0.size() != x.rows() ||
      true_mu1.size() != x.rows()) {
    throw std::invalid_argument("EvalGrid columns must align with covariates");
  }
  if ((true_mu1 - true_mu0 - true_tau).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("EvalGrid tau must equal mu1 - mu0");
  }
}

namespace {
void check_lengths(const Vector& tau_hat, const EvalGrid& grid) {
  if (grid.size() == 0) throw std::invalid_argument("evaluation grid is empty");
  if (tau_hat.size() != grid.size()) {
    throw std::invalid_argument("estimate length does not match the grid");
  }
}
}  // namespace

double pehe(const Vector& tau_hat, const EvalGrid& grid) {
  check_lengths(tau_hat, grid);
  return (tau_hat - grid.true_tau).squaredNorm() / static_cast<double>(grid.size());
}

double ape(const Vector& tau_hat, const EvalGrid& grid) {
  check_lengths(tau_hat, grid);
  Eigen::Index mismatches = 0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if ((tau_hat(i) > 0.0) != (grid.true_tau(i) > 0.0)) ++mismatches;
  }
  return static_cast<double>(mismatches) / static_cast<double>(grid.size());
}

double avg_regret(const Vector& tau_hat, const EvalGrid& grid) {
  check_lengths(tau_hat, grid);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if ((tau_hat(i) > 0.0) != (grid.true_tau(i) > 0.0)) {
      loss += std::abs(grid.true_tau(i));
    }
  }
  return loss / static_cast<double>(grid.size());
}

MetricReport evaluate(const Vector& tau_hat, const EvalGrid& grid) {
  MetricReport r;
  r.sqrt_pehe = std::sqrt(pehe(tau_hat, grid));
  r.ape = ape(tau_hat, grid);
  r.avg_regret = avg_regret(tau_hat, grid);
  r.n_eval = grid.size();
  return r;
}

double normalized_auc(const std::vector<std::pair<double, double>>& curve) {
  if (curve.size() < 2) {
    throw std::invalid_argument("normalized_auc needs at least two curve points");
  }
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].first <= curve[i - 1].first) {
      throw std::invalid_argument("curve acquired counts must be increasing");
    }
  }
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += 0.5 * (curve[i].second + curve[i - 1].second) *
            (curve[i].first - curve[i - 1].first);
  }
  double span = curve.back().first - curve.front().first;
  double anchor = curve.front().second;
  if (anchor == 0.0) throw std::invalid_argument("first curve value must be nonzero");
  return area / (span * anchor);
}

}  // namespace rdesign
