#pragma once

#include <string>
#include <vector>

#include "rdesign/types.hpp"

namespace rdesign {

enum class Source : char { Observational = 'o', Experimental = 'e' };

/// One unit record: covariates, treatment, outcome and data source.
struct CausalSample {
  Vector x;
  Arm t = 0;
  double y = 0.0;
  Source s = Source::Experimental;
};

/// Column-oriented collection of unit records.
struct CausalDataset {
  Matrix x;                  // rows are units
  std::vector<Arm> t;
  Vector y;
  std::vector<Source> s;

  Eigen::Index size() const { return x.rows(); }
  int dim() const { return static_cast<int>(x.cols()); }
  CausalSample sample(Eigen::Index i) const;
  void append(const CausalSample& sample);
  static CausalDataset empty(int dim);
};

/// Writes `x_0,...,x_{d-1},t,y,s` with LF line endings and '.' decimals.
void write_dataset_csv(const CausalDataset& data, const std::string& path);
CausalDataset read_dataset_csv(const std::string& path);

/// Reads a covariate CSV (header row then numeric columns). Errors carry the
/// offending row and column.
Matrix load_covariates_csv(const std::string& path);
void write_covariates_csv(const Matrix& x, const std::string& path);

}  // namespace rdesign
