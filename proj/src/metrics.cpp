#include "tpsurv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tpsurv/cox.hpp"
#include "tpsurv/km.hpp"

namespace tpsurv {

double c_index(const Dataset& test, const Vec& risk_scores) {
  const int n = test.n();
  if (risk_scores.size() != n)
    throw std::invalid_argument("c_index: score length mismatch");
  const auto& time = test.time();
  const auto& event = test.event();

  double comparable = 0.0, concordant = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!event[i]) continue;
    for (int j = 0; j < n; ++j) {
      if (j == i || !(time[i] < time[j])) continue;
      comparable += 1.0;
      if (risk_scores[i] > risk_scores[j])
        concordant += 1.0;
      else if (risk_scores[i] == risk_scores[j])
        concordant += 0.5;
    }
  }
  if (comparable == 0.0)
    throw std::invalid_argument("c_index: no comparable pairs");
  return concordant / comparable;
}

double calibration_slope(const Dataset& test, const Vec& linear_predictors) {
  if (linear_predictors.size() != test.n())
    throw std::invalid_argument("calibration_slope: lp length mismatch");
  if (test.n_events() == 0)
    throw std::invalid_argument("calibration_slope: test data has no events");
  const double lo = linear_predictors.minCoeff();
  const double hi = linear_predictors.maxCoeff();
  if (hi - lo <= 1e-12)
    throw std::invalid_argument("calibration_slope: constant linear predictor");

  Mat x(test.n(), 1);
  x.col(0) = linear_predictors;
  const Dataset refit_data = test.with_covariates(std::move(x), {"lp"});
  return fit_cox(refit_data).coefficients[0];
}

double brier_score(const Dataset& test, const SurvivalFn& survival, double t) {
  const int n = test.n();
  const KaplanMeierCurve g = censoring_km(test);
  if (g.at(t) <= 0.0)
    throw std::invalid_argument("brier_score: censoring survival is 0 at t");
  const auto& time = test.time();
  const auto& event = test.event();

  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s_hat = survival(t, i);
    if (time[i] <= t && event[i]) {
      sum += s_hat * s_hat / g.at_left(time[i]);
    } else if (time[i] > t) {
      sum += (1.0 - s_hat) * (1.0 - s_hat) / g.at(t);
    }
    // censored at or before t contributes 0 (its status at t is unknown)
  }
  return sum / n;
}

double integrated_brier_score(const Dataset& test, const SurvivalFn& survival,
                              std::optional<double> tau) {
  const KaplanMeierCurve g = censoring_km(test);
  std::vector<double> event_times;
  for (int i = 0; i < test.n(); ++i)
    if (test.event()[i]) event_times.push_back(test.time()[i]);
  if (event_times.empty())
    throw std::invalid_argument("integrated_brier_score: no event times");
  std::sort(event_times.begin(), event_times.end());
  event_times.erase(std::unique(event_times.begin(), event_times.end()),
                    event_times.end());

  double horizon;
  if (tau) {
    horizon = *tau;
    // G can die before the requested horizon; truncate rather than divide by 0.
    while (horizon > 0.0 && g.at(horizon) <= 0.0) {
      auto it = std::lower_bound(event_times.begin(), event_times.end(), horizon);
      if (it == event_times.begin()) break;
      horizon = *(--it);
    }
  } else {
    horizon = 0.0;
    for (double t : event_times)
      if (g.at(t) > 0.0) horizon = std::max(horizon, t);
  }
  if (!(horizon > 0.0))
    throw std::invalid_argument("integrated_brier_score: empty evaluation window");

  std::vector<double> grid = {0.0};
  for (double t : event_times)
    if (t <= horizon) grid.push_back(t);
  if (grid.back() != horizon) grid.push_back(horizon);

  double integral = 0.0;
  double prev_t = grid[0];
  double prev_bs = brier_score(test, survival, grid[0]);
  for (size_t k = 1; k < grid.size(); ++k) {
    const double bs = brier_score(test, survival, grid[k]);
    integral += 0.5 * (bs + prev_bs) * (grid[k] - prev_t);
    prev_t = grid[k];
    prev_bs = bs;
  }
  return integral / horizon;
}

double mcc(const std::vector<bool>& selected, const std::vector<bool>& truth) {
  if (selected.size() != truth.size())
    throw std::invalid_argument("mcc: mask length mismatch");
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (size_t j = 0; j < selected.size(); ++j) {
    if (selected[j] && truth[j]) tp += 1;
    else if (selected[j] && !truth[j]) fp += 1;
    else if (!selected[j] && truth[j]) fn += 1;
    else tn += 1;
  }
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom <= 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

std::vector<int> risk_stratify(const Vec& lp, int n_groups) {
  const int n = static_cast<int>(lp.size());
  if (n_groups < 2) throw std::invalid_argument("risk_stratify: need >= 2 groups");
  if (n < n_groups) throw std::invalid_argument("risk_stratify: fewer values than groups");
  if (lp.maxCoeff() - lp.minCoeff() <= 0.0)
    throw std::invalid_argument("risk_stratify: all values equal");

  std::vector<double> sorted(lp.data(), lp.data() + n);
  std::sort(sorted.begin(), sorted.end());
  // Upper boundary value of each group; ties at a boundary fall to the lower
  // group because membership uses <=.
  std::vector<double> cuts(n_groups - 1);
  for (int k = 1; k < n_groups; ++k)
    cuts[k - 1] = sorted[static_cast<int>(std::ceil(static_cast<double>(n) * k / n_groups)) - 1];

  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    int g = n_groups - 1;
    for (int k = 0; k < n_groups - 1; ++k)
      if (lp[i] <= cuts[k]) {
        g = k;
        break;
      }
    labels[i] = g;
  }
  return labels;
}

std::string risk_group_name(int label, int n_groups) {
  if (n_groups == 3) {
    static const char* names[] = {"low", "medium", "high"};
    return names[std::clamp(label, 0, 2)];
  }
  return "group" + std::to_string(label + 1);
}

}  // namespace tpsurv
