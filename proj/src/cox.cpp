#include "tpsurv/cox.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tpsurv {

void FitConfig::validate() const {
  if (max_outer_iterations < 1 || max_cd_passes < 1)
    throw std::invalid_argument("fit config: iteration limits must be positive");
  if (!(convergence_tol > 0.0))
    throw std::invalid_argument("fit config: tolerance must be positive");
  if (!(coefficient_cap > 0.0))
    throw std::invalid_argument("fit config: coefficient cap must be positive");
}

namespace {

struct SortedData {
  std::vector<int> ord;  // time ascending, events before censorings at ties
  explicit SortedData(const Dataset& data) : ord(data.n()) {
    std::iota(ord.begin(), ord.end(), 0);
    const auto& t = data.time();
    const auto& e = data.event();
    std::sort(ord.begin(), ord.end(), [&](int a, int b) {
      if (t[a] != t[b]) return t[a] < t[b];
      return e[a] > e[b];
    });
  }
};

void check_inputs(const Dataset& data, const Vec& beta) {
  if (beta.size() != data.n_covariates())
    throw std::invalid_argument("cox: beta length != covariate dimension");
  if (data.n_events() == 0) throw std::invalid_argument("cox: no events in data");
  if (!beta.allFinite()) throw std::invalid_argument("cox: non-finite beta");
}

// One backward sweep over the risk sets. Accumulates whichever of
// (loglik, gradient, hessian) the caller asked for.
void risk_set_sweep(const Dataset& data, const SortedData& sorted, const Vec& eta,
                    double* loglik, Vec* grad, Mat* hess) {
  const int n = data.n();
  const int J = data.n_covariates();
  const auto& time = data.time();
  const auto& event = data.event();
  const Mat& x = data.covariates();

  const double shift = eta.maxCoeff();
  double s0 = 0.0;
  Vec s1;
  Mat s2;
  const bool need_s1 = grad || hess;
  if (need_s1) s1 = Vec::Zero(J);
  if (grad) *grad = Vec::Zero(J);
  if (hess) {
    *hess = Mat::Zero(J, J);
    s2 = Mat::Zero(J, J);
  }
  if (loglik) *loglik = 0.0;

  int i = n - 1;
  while (i >= 0) {
    const double t = time[sorted.ord[i]];
    int d = 0;
    double eta_events = 0.0;
    Vec x_events;
    if (grad) x_events = Vec::Zero(J);
    int j = i;
    while (j >= 0 && time[sorted.ord[j]] == t) {
      const int idx = sorted.ord[j];
      const double w = std::exp(eta[idx] - shift);
      s0 += w;
      if (need_s1) s1.noalias() += w * x.row(idx).transpose();
      if (hess) s2.noalias() += w * (x.row(idx).transpose() * x.row(idx));
      if (event[idx]) {
        ++d;
        eta_events += eta[idx];
        if (grad) x_events += x.row(idx).transpose();
      }
      --j;
    }
    if (d > 0) {
      if (loglik) *loglik += eta_events - d * (shift + std::log(s0));
      if (grad) *grad += x_events - (d / s0) * s1;
      if (hess) {
        const Vec mean = s1 / s0;
        hess->noalias() -= d * (s2 / s0 - mean * mean.transpose());
      }
    }
    i = j;
  }
}

}  // namespace

double partial_loglik(const Dataset& data, const Vec& beta) {
  check_inputs(data, beta);
  const Vec eta = data.covariates() * beta;
  SortedData sorted(data);
  double l;
  risk_set_sweep(data, sorted, eta, &l, nullptr, nullptr);
  return l;
}

Vec partial_loglik_gradient(const Dataset& data, const Vec& beta) {
  check_inputs(data, beta);
  const Vec eta = data.covariates() * beta;
  SortedData sorted(data);
  Vec g;
  risk_set_sweep(data, sorted, eta, nullptr, &g, nullptr);
  return g;
}

Mat partial_loglik_hessian(const Dataset& data, const Vec& beta) {
  check_inputs(data, beta);
  const Vec eta = data.covariates() * beta;
  SortedData sorted(data);
  Mat h;
  risk_set_sweep(data, sorted, eta, nullptr, nullptr, &h);
  return h;
}

CoxIrlsTerms cox_irls_terms(const Dataset& data, const Vec& eta) {
  const int n = data.n();
  if (eta.size() != n) throw std::invalid_argument("cox_irls_terms: eta length mismatch");
  if (data.n_events() == 0) throw std::invalid_argument("cox: no events in data");
  const auto& time = data.time();
  const auto& event = data.event();
  SortedData sorted(data);

  const double shift = eta.maxCoeff();

  // Backward sweep: S0 per unique event time (shifted scale).
  struct Block {
    double t;
    int d;
    double s0;  // sum exp(eta - shift) over the risk set
  };
  std::vector<Block> blocks;
  double s0 = 0.0;
  double loglik = 0.0;
  int i = n - 1;
  while (i >= 0) {
    const double t = time[sorted.ord[i]];
    int d = 0;
    double eta_events = 0.0;
    int j = i;
    while (j >= 0 && time[sorted.ord[j]] == t) {
      const int idx = sorted.ord[j];
      s0 += std::exp(eta[idx] - shift);
      if (event[idx]) {
        ++d;
        eta_events += eta[idx];
      }
      --j;
    }
    if (d > 0) {
      blocks.push_back({t, d, s0});
      loglik += eta_events - d * (shift + std::log(s0));
    }
    i = j;
  }
  std::reverse(blocks.begin(), blocks.end());

  // Prefix sums of d/S0 and d/S0^2 over event times (true scale).
  const size_t m = blocks.size();
  std::vector<double> cum1(m), cum2(m);
  double a = 0.0, b = 0.0;
  for (size_t k = 0; k < m; ++k) {
    const double s0_true_log = std::log(blocks[k].s0) + shift;
    a += blocks[k].d * std::exp(-s0_true_log);
    b += blocks[k].d * std::exp(-2.0 * s0_true_log);
    cum1[k] = a;
    cum2[k] = b;
  }

  // Assign A_i, B_i: the prefix at the last event time <= T_i.
  CoxIrlsTerms out;
  out.loglik = loglik;
  out.score = Vec::Zero(n);
  out.curvature = Vec::Zero(n);
  size_t k = 0;
  double A = 0.0, B = 0.0;
  for (int pos = 0; pos < n; ++pos) {
    const int idx = sorted.ord[pos];
    while (k < m && blocks[k].t <= time[idx]) {
      A = cum1[k];
      B = cum2[k];
      ++k;
    }
    const double e1 = std::exp(eta[idx]);
    out.score[idx] = (event[idx] ? 1.0 : 0.0) - e1 * A;
    out.curvature[idx] = std::max(e1 * A - e1 * e1 * B, 0.0);
  }
  return out;
}

CoxFit fit_cox(const Dataset& data, const FitConfig& config) {
  config.validate();
  if (data.n_events() == 0) throw std::invalid_argument("fit_cox: no events in data");
  const int J = data.n_covariates();

  CoxFit fit;
  fit.coefficients = Vec::Zero(J);
  if (J == 0) {
    fit.converged = true;
    fit.log_partial_likelihood = 0.0;  // constant term only
    const Vec eta = Vec::Zero(data.n());
    SortedData sorted(data);
    risk_set_sweep(data, sorted, eta, &fit.log_partial_likelihood, nullptr, nullptr);
    fit.baseline = breslow_baseline(data, eta);
    return fit;
  }
  if (J >= data.n_events())
    fit.diagnostic = "covariate dimension >= number of events; estimates may be unstable";

  SortedData sorted(data);
  Vec beta = Vec::Zero(J);
  Vec eta = Vec::Zero(data.n());
  double l;
  risk_set_sweep(data, sorted, eta, &l, nullptr, nullptr);

  bool capped = false;
  int iter = 0;
  for (; iter < config.max_outer_iterations; ++iter) {
    Vec g;
    Mat h;
    risk_set_sweep(data, sorted, eta, nullptr, &g, &h);
    Mat info = -h;
    info.diagonal().array() += 1e-10;  // guard exact singularity
    Eigen::LDLT<Mat> ldlt(info);
    Vec step = ldlt.solve(g);
    if (!step.allFinite()) {
      fit.diagnostic = "Newton step failed";
      break;
    }

    // Step halving on the log partial likelihood.
    double scale = 1.0;
    Vec beta_new;
    double l_new = l;
    bool improved = false;
    for (int h_iter = 0; h_iter < 32; ++h_iter) {
      beta_new = beta + scale * step;
      const Vec eta_new = data.covariates() * beta_new;
      double l_try;
      risk_set_sweep(data, sorted, eta_new, &l_try, nullptr, nullptr);
      if (std::isfinite(l_try) && l_try >= l - 1e-12) {
        l_new = l_try;
        eta = eta_new;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) break;

    const double max_change = (scale * step).cwiseAbs().maxCoeff();
    beta = beta_new;
    l = l_new;
    if (beta.cwiseAbs().maxCoeff() > config.coefficient_cap) {
      beta = beta.cwiseMax(-config.coefficient_cap).cwiseMin(config.coefficient_cap);
      eta = data.covariates() * beta;
      risk_set_sweep(data, sorted, eta, &l, nullptr, nullptr);
      capped = true;
      break;
    }
    if (max_change < config.convergence_tol) {
      fit.converged = true;
      ++iter;
      break;
    }
  }

  fit.coefficients = beta;
  fit.n_iterations = iter;
  fit.log_partial_likelihood = l;
  if (capped) {
    fit.converged = false;
    fit.diagnostic = "monotone likelihood suspected (separation); coefficients capped";
  }
  fit.lp_mean = eta.mean();
  fit.baseline = breslow_baseline(data, eta);
  return fit;
}

}  // namespace tpsurv
