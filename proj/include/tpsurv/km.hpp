#pragma once

#include <utility>
#include <vector>

#include "tpsurv/dataset.hpp"

namespace tpsurv {

/// Product-limit curve. The grid holds the distinct times with at least one
/// event; `survival` is right-continuous and non-increasing. Greenwood
/// variance accumulators support log(-log) confidence intervals.
struct KaplanMeierCurve {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<int> at_risk;
  std::vector<int> n_events;
  std::vector<double> greenwood;  // sum d/(n(n-d)) up to each grid point

  /// S(t); 1 before the first event time, last value after the grid.
  double at(double t) const;
  /// S(t-): value just before t.
  double at_left(double t) const;
  /// log(-log)-transformed pointwise CI at grid index i.
  std::pair<double, double> confidence_interval(int i, double level = 0.95) const;
};

KaplanMeierCurve kaplan_meier(const Dataset& data);

/// Kaplan-Meier of the censoring distribution G(t): event flags inverted.
KaplanMeierCurve censoring_km(const Dataset& data);

struct LogRankResult {
  double chi_square = 0.0;
  double p_value = 1.0;
  int df = 0;
};

LogRankResult log_rank_test(const std::vector<Dataset>& groups);

/// All pairwise log-rank tests with Bonferroni-Holm adjusted p-values.
/// Returns (i, j, raw p, adjusted p) tuples.
struct PairwiseLogRank {
  int i = 0, j = 0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
};
std::vector<PairwiseLogRank> pairwise_log_rank(const std::vector<Dataset>& groups);

}  // namespace tpsurv
