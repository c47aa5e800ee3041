#pragma once

#include <vector>

#include "tpsurv/cox.hpp"
#include "tpsurv/dataset.hpp"

namespace tpsurv {

/// Per-coefficient penalty specification for the partially penalized fit.
/// The effective multiplier on coordinate j is penalty_factors[j] *
/// adaptive_weights[j]; coordinates where this is 0 are never shrunk.
struct PenaltySpec {
  double lambda = 0.0;
  double alpha = 1.0;     // elastic-net mix; 1 = lasso
  Vec penalty_factors;    // empty = all ones
  Vec adaptive_weights;   // empty = all ones

  void validate(int n_covariates) const;
  Vec effective(int n_covariates) const;
};

/// Minimizes -l(beta)/n + lambda * sum_j pen_j (alpha |b_j| + (1-alpha) b_j^2 / 2)
/// by outer IRLS steps with inner cyclic coordinate descent.
CoxFit fit_penalized_cox(const Dataset& data, const PenaltySpec& penalty,
                         const FitConfig& config = {});

/// Smallest lambda at which every penalized coordinate is zero, computed from
/// the score at the unpenalized-coordinates-only fit.
double lambda_max(const Dataset& data, const PenaltySpec& penalty,
                  const FitConfig& config = {});

/// Log-spaced descending path from lmax to min_ratio * lmax.
std::vector<double> lambda_path(double lmax, int size, double min_ratio = 0.01);

/// Coefficients along a descending lambda path, warm-started; original scale.
struct PenalizedPath {
  std::vector<double> lambdas;
  std::vector<Vec> coefficients;
};
PenalizedPath fit_penalized_cox_path(const Dataset& data, const PenaltySpec& penalty,
                                     const std::vector<double>& lambdas,
                                     const FitConfig& config = {});

}  // namespace tpsurv
