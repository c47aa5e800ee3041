#pragma once

#include <vector>

#include "tpsurv/dataset.hpp"

namespace tpsurv {

/// Breslow estimate of the cumulative baseline hazard H0(t) on the event-time
/// grid of the fitting data. Queries beyond the grid return the last value.
struct BreslowBaseline {
  std::vector<double> times;
  std::vector<double> cumulative_hazard;

  double cumhaz(double t) const;
  /// S(t | linear predictor) = exp(-H0(t) * exp(lp)).
  double survival(double t, double lp) const;
};

BreslowBaseline breslow_baseline(const Dataset& data, const Vec& linear_predictors);

}  // namespace tpsurv
