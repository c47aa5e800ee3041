#pragma once

#include <cmath>

namespace tpsurv {

double norm_cdf(double x);
double norm_quantile(double p);

/// P(X > x) for X ~ chi-square with `df` degrees of freedom.
double chi_square_sf(double x, double df);

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace tpsurv
