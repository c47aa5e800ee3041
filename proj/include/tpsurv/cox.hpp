#pragma once

#include <string>
#include <vector>

#include "tpsurv/breslow.hpp"
#include "tpsurv/dataset.hpp"

namespace tpsurv {

struct FitConfig {
  int max_outer_iterations = 100;
  int max_cd_passes = 1000;
  double convergence_tol = 1e-8;
  bool standardize = true;
  /// Separation policy: coefficients are clamped here and the fit flagged
  /// non-converged instead of failing outright.
  double coefficient_cap = 20.0;

  void validate() const;
};

struct CoxFit {
  Vec coefficients;
  double log_partial_likelihood = 0.0;
  BreslowBaseline baseline;
  bool converged = false;
  int n_iterations = 0;
  /// Training-set mean of the linear predictor; prognostic indices are
  /// centered by this value.
  double lp_mean = 0.0;
  std::string diagnostic;
  /// Penalized fits only: -l/n + penalty after each outer IRLS iteration.
  std::vector<double> objective_trace;

  Vec linear_predictors(const Mat& x) const { return x * coefficients; }
};

/// Log partial likelihood with Breslow tie handling.
double partial_loglik(const Dataset& data, const Vec& beta);
Vec partial_loglik_gradient(const Dataset& data, const Vec& beta);
Mat partial_loglik_hessian(const Dataset& data, const Vec& beta);

/// Per-observation score u_i = dl/deta_i and curvature w_i = -d2l/deta_i2
/// at the given linear predictors (the IRLS working quantities).
struct CoxIrlsTerms {
  double loglik = 0.0;
  Vec score;      // u_i
  Vec curvature;  // w_i >= 0
};
CoxIrlsTerms cox_irls_terms(const Dataset& data, const Vec& eta);

/// Unpenalized Cox fit: Newton-Raphson with step halving.
CoxFit fit_cox(const Dataset& data, const FitConfig& config = {});

}  // namespace tpsurv
