#include "tpsurv/km.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tpsurv/stats.hpp"

namespace tpsurv {

namespace {

// Sort order shared by every estimator here: time ascending, events before
// censorings at tied times.
std::vector<int> survival_order(const Vec& time, const std::vector<int>& event) {
  std::vector<int> ord(time.size());
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](int a, int b) {
    if (time[a] != time[b]) return time[a] < time[b];
    return event[a] > event[b];
  });
  return ord;
}

}  // namespace

double KaplanMeierCurve::at(double t) const {
  double s = 1.0;
  for (size_t i = 0; i < times.size() && times[i] <= t; ++i) s = survival[i];
  return s;
}

double KaplanMeierCurve::at_left(double t) const {
  double s = 1.0;
  for (size_t i = 0; i < times.size() && times[i] < t; ++i) s = survival[i];
  return s;
}

std::pair<double, double> KaplanMeierCurve::confidence_interval(int i, double level) const {
  const double s = survival[i];
  if (s <= 0.0) return {0.0, 0.0};
  if (s >= 1.0) return {1.0, 1.0};
  const double z = norm_quantile(0.5 + level / 2.0);
  const double se = std::sqrt(greenwood[i]) / std::fabs(std::log(s));
  const double theta = std::log(-std::log(s));
  return {std::exp(-std::exp(theta + z * se)), std::exp(-std::exp(theta - z * se))};
}

KaplanMeierCurve kaplan_meier(const Dataset& data) {
  if (data.n() == 0) throw std::invalid_argument("kaplan_meier: empty dataset");
  const auto& time = data.time();
  const auto& event = data.event();
  const auto ord = survival_order(time, event);
  const int n = data.n();

  KaplanMeierCurve curve;
  double s = 1.0;
  double gw = 0.0;
  int i = 0;
  while (i < n) {
    const double t = time[ord[i]];
    int d = 0, m = 0;
    while (i + m < n && time[ord[i + m]] == t) {
      d += event[ord[i + m]] ? 1 : 0;
      ++m;
    }
    const int at_risk = n - i;
    if (d > 0) {
      s *= 1.0 - static_cast<double>(d) / at_risk;
      if (at_risk > d)
        gw += static_cast<double>(d) / (static_cast<double>(at_risk) * (at_risk - d));
      else
        gw = std::numeric_limits<double>::infinity();
      curve.times.push_back(t);
      curve.survival.push_back(s);
      curve.at_risk.push_back(at_risk);
      curve.n_events.push_back(d);
      curve.greenwood.push_back(gw);
    }
    i += m;
  }
  return curve;
}

KaplanMeierCurve censoring_km(const Dataset& data) {
  return kaplan_meier(data.flipped_events());
}

LogRankResult log_rank_test(const std::vector<Dataset>& groups) {
  const int g = static_cast<int>(groups.size());
  if (g < 2) throw std::invalid_argument("log_rank_test: need >= 2 groups");
  int n_total = 0, events_total = 0;
  for (const auto& grp : groups) {
    if (grp.n() == 0) throw std::invalid_argument("log_rank_test: empty group");
    n_total += grp.n();
    events_total += grp.n_events();
  }
  if (events_total == 0) throw std::invalid_argument("log_rank_test: no events");

  // Pool (time, event, group), sorted.
  struct Obs {
    double time;
    int event;
    int group;
  };
  std::vector<Obs> obs;
  obs.reserve(n_total);
  for (int k = 0; k < g; ++k)
    for (int i = 0; i < groups[k].n(); ++i)
      obs.push_back({groups[k].time()[i], groups[k].event()[i], k});
  std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.event > b.event;
  });

  // Observed-minus-expected and hypergeometric covariance over the first
  // g-1 groups; the statistic is (O-E)' V^{-1} (O-E).
  Eigen::VectorXd oe = Eigen::VectorXd::Zero(g - 1);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(g - 1, g - 1);
  std::vector<int> at_risk(g, 0);
  for (const auto& o : obs) at_risk[o.group]++;

  size_t i = 0;
  const size_t n = obs.size();
  while (i < n) {
    const double t = obs[i].time;
    size_t m = 0;
    std::vector<int> d(g, 0);
    int d_total = 0;
    while (i + m < n && obs[i + m].time == t) {
      if (obs[i + m].event) {
        d[obs[i + m].group]++;
        d_total++;
      }
      ++m;
    }
    const int r_total = std::accumulate(at_risk.begin(), at_risk.end(), 0);
    if (d_total > 0 && r_total > 1) {
      for (int a = 0; a < g - 1; ++a) {
        const double ra = at_risk[a];
        oe[a] += d[a] - d_total * ra / r_total;
        for (int b = 0; b < g - 1; ++b) {
          const double rb = at_risk[b];
          const double same = (a == b) ? 1.0 : 0.0;
          cov(a, b) += static_cast<double>(d_total) * (ra / r_total) *
                       (same - rb / r_total) *
                       (static_cast<double>(r_total - d_total) / (r_total - 1));
        }
      }
    }
    for (size_t k = 0; k < m; ++k) at_risk[obs[i + k].group]--;
    i += m;
  }

  LogRankResult res;
  res.df = g - 1;
  // Guard the degenerate all-identical case where cov is singular.
  Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
  if (lu.isInvertible()) {
    res.chi_square = oe.dot(lu.solve(oe));
  } else {
    res.chi_square = oe.isZero(1e-12) ? 0.0 : std::numeric_limits<double>::infinity();
  }
  if (res.chi_square < 0.0 && res.chi_square > -1e-10) res.chi_square = 0.0;
  res.p_value = chi_square_sf(res.chi_square, res.df);
  return res;
}

std::vector<PairwiseLogRank> pairwise_log_rank(const std::vector<Dataset>& groups) {
  const int g = static_cast<int>(groups.size());
  if (g < 2) throw std::invalid_argument("pairwise_log_rank: need >= 2 groups");
  std::vector<PairwiseLogRank> out;
  for (int i = 0; i < g; ++i)
    for (int j = i + 1; j < g; ++j) {
      auto r = log_rank_test({groups[i], groups[j]});
      out.push_back({i, j, r.p_value, r.p_value});
    }
  // Bonferroni-Holm step-down on the raw p-values.
  std::vector<size_t> ord(out.size());
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(),
            [&](size_t a, size_t b) { return out[a].p_raw < out[b].p_raw; });
  const double m = static_cast<double>(out.size());
  double running = 0.0;
  for (size_t k = 0; k < ord.size(); ++k) {
    double adj = std::min(1.0, (m - k) * out[ord[k]].p_raw);
    running = std::max(running, adj);
    out[ord[k]].p_adjusted = running;
  }
  return out;
}

}  // namespace tpsurv
