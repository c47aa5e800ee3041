#include "tpsurv/breslow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tpsurv {

double BreslowBaseline::cumhaz(double t) const {
  // times is increasing; rightmost grid point <= t
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0.0;
  return cumulative_hazard[static_cast<size_t>(it - times.begin()) - 1];
}

double BreslowBaseline::survival(double t, double lp) const {
  return std::exp(-cumhaz(t) * std::exp(lp));
}

BreslowBaseline breslow_baseline(const Dataset& data, const Vec& linear_predictors) {
  const int n = data.n();
  if (linear_predictors.size() != n)
    throw std::invalid_argument("breslow_baseline: lp length mismatch");
  if (data.n_events() == 0)
    throw std::invalid_argument("breslow_baseline: no events");

  const auto& time = data.time();
  const auto& event = data.event();
  std::vector<int> ord(n);
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](int a, int b) {
    if (time[a] != time[b]) return time[a] < time[b];
    return event[a] > event[b];
  });

  // Shift exponentials by max(lp) for overflow safety; the shift cancels in
  // the ratio d / S0 only if applied consistently, so fold it back below.
  const double shift = linear_predictors.maxCoeff();
  Vec w(n);
  for (int i = 0; i < n; ++i) w[i] = std::exp(linear_predictors[i] - shift);

  // Walk from the largest time down, accumulating the at-risk sum.
  std::vector<double> grid_times, increments;
  double s0 = 0.0;
  int i = n - 1;
  while (i >= 0) {
    const double t = time[ord[i]];
    int d = 0;
    int j = i;
    while (j >= 0 && time[ord[j]] == t) {
      s0 += w[ord[j]];
      d += event[ord[j]] ? 1 : 0;
      --j;
    }
    if (d > 0) {
      grid_times.push_back(t);
      increments.push_back(d / (s0 * std::exp(shift)));
    }
    i = j;
  }

  BreslowBaseline out;
  out.times.assign(grid_times.rbegin(), grid_times.rend());
  out.cumulative_hazard.resize(out.times.size());
  double h = 0.0;
  for (size_t k = 0; k < out.times.size(); ++k) {
    h += increments[increments.size() - 1 - k];
    out.cumulative_hazard[k] = h;
  }
  return out;
}

}  // namespace tpsurv
