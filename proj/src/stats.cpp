#include "tpsurv/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <stdexcept>

namespace tpsurv {

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("norm_quantile: p must be in (0,1)");
  static const boost::math::normal_distribution<double> dist;
  return boost::math::quantile(dist, p);
}

double chi_square_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  const boost::math::chi_squared_distribution<double> dist(df);
  return boost::math::cdf(boost::math::complement(dist, x));
}

}  // namespace tpsurv
