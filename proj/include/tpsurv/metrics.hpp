#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tpsurv/dataset.hpp"

namespace tpsurv {

struct MetricReport {
  std::optional<double> c_index;
  std::optional<double> calibration_slope;
  std::optional<double> ibs;
  std::optional<double> mcc;  // only when the true coefficient mask is known
};

/// Harrell's c-index. A pair is comparable when the strictly earlier time is
/// an event; tied event times are not comparable; tied risks count 1/2.
double c_index(const Dataset& test, const Vec& risk_scores);

/// van Houwelingen calibration slope: Cox coefficient of the linear
/// predictor refit on the test data.
double calibration_slope(const Dataset& test, const Vec& linear_predictors);

using SurvivalFn = std::function<double(double t, int subject)>;

/// Graf IPCW Brier score at time t.
double brier_score(const Dataset& test, const SurvivalFn& survival, double t);

/// (1/tau) * integral of BS(t) over [0, tau], trapezoid on the event grid.
/// Default tau: largest test event time with positive censoring survival.
double integrated_brier_score(const Dataset& test, const SurvivalFn& survival,
                              std::optional<double> tau = std::nullopt);

/// Matthews correlation of a selection mask against the truth; defined as 0
/// whenever a confusion-matrix margin vanishes.
double mcc(const std::vector<bool>& selected, const std::vector<bool>& truth);

/// Quantile groups of increasing risk, 0-based labels; ties go to the lower
/// group.
std::vector<int> risk_stratify(const Vec& lp, int n_groups);

std::string risk_group_name(int label, int n_groups);

}  // namespace tpsurv
