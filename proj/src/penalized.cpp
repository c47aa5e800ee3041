#include "tpsurv/penalized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tpsurv {

void PenaltySpec::validate(int n_covariates) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("penalty: lambda must be finite and >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("penalty: alpha must be in [0,1]");
  for (const Vec* v : {&penalty_factors, &adaptive_weights}) {
    if (v->size() != 0 && v->size() != n_covariates)
      throw std::invalid_argument("penalty: factor/weight length mismatch");
    for (Eigen::Index j = 0; j < v->size(); ++j)
      if (!((*v)[j] >= 0.0) || !std::isfinite((*v)[j]))
        throw std::invalid_argument("penalty: factors/weights must be finite and >= 0");
  }
}

Vec PenaltySpec::effective(int n_covariates) const {
  Vec pen = penalty_factors.size() ? penalty_factors : Vec::Ones(n_covariates);
  if (adaptive_weights.size()) pen = pen.cwiseProduct(adaptive_weights);
  return pen;
}

namespace {

double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

// IRLS + coordinate-descent state shared across the points of a lambda path.
class Solver {
 public:
  Solver(const Dataset& data, const PenaltySpec& spec, const FitConfig& config)
      : data_(data), config_(config), alpha_(spec.alpha), n_(data.n()),
        J_(data.n_covariates()), pen_(spec.effective(data.n_covariates())) {
    config.validate();
    spec.validate(J_);
    if (data.n_events() == 0)
      throw std::invalid_argument("fit_penalized_cox: no events in data");

    // Center every column; scale penalized ones to unit variance when asked.
    xs_ = data.covariates();
    center_ = xs_.colwise().mean();
    scale_ = Vec::Ones(J_);
    dead_.assign(J_, false);
    for (int j = 0; j < J_; ++j) {
      xs_.col(j).array() -= center_[j];
      const double sd = std::sqrt(xs_.col(j).squaredNorm() / n_);
      if (sd <= 1e-12) {
        dead_[j] = true;  // constant column: unidentifiable without intercept
        continue;
      }
      if (config.standardize && pen_[j] > 0.0) {
        scale_[j] = sd;
        xs_.col(j) /= sd;
      }
    }
    beta_ = Vec::Zero(J_);
    eta_ = Vec::Zero(n_);
  }

  // Score of l/n w.r.t. the standardized coordinates at the current eta.
  Vec score_std() const {
    const CoxIrlsTerms terms = cox_irls_terms(data_, eta_);
    return (xs_.transpose() * terms.score) / n_;
  }

  const Vec& penalties() const { return pen_; }

  CoxFit solve(double lambda) {
    std::vector<double> trace;
    double f_prev = std::numeric_limits<double>::infinity();
    bool converged = false;
    int outer = 0;

    for (; outer < config_.max_outer_iterations; ++outer) {
      const Vec beta_before = beta_;
      CoxIrlsTerms terms = cox_irls_terms(data_, eta_);
      Vec w = terms.curvature.cwiseMax(1e-10);
      // working response z = eta + u/w; CD uses the residual z - eta directly
      Vec resid = terms.score.cwiseQuotient(w);  // z - eta

      Vec xx(J_);
      for (int j = 0; j < J_; ++j)
        xx[j] = dead_[j] ? 1.0 : xs_.col(j).cwiseAbs2().dot(w) / n_;

      for (int pass = 0; pass < config_.max_cd_passes; ++pass) {
        double max_delta = 0.0;
        for (int j = 0; j < J_; ++j) {
          if (dead_[j]) continue;
          const double num =
              (xs_.col(j).cwiseProduct(w)).dot(resid) / n_ + xx[j] * beta_[j];
          double b_new;
          if (pen_[j] <= 0.0) {
            b_new = num / std::max(xx[j], 1e-12);
          } else {
            b_new = soft_threshold(num, lambda * alpha_ * pen_[j]) /
                    (xx[j] + lambda * (1.0 - alpha_) * pen_[j]);
          }
          const double delta = b_new - beta_[j];
          if (delta != 0.0) {
            beta_[j] = b_new;
            resid -= xs_.col(j) * delta;  // eta moved, so z - eta moved
            max_delta = std::max(max_delta, std::fabs(delta));
          }
        }
        if (max_delta < config_.convergence_tol) break;
      }

      eta_ = xs_ * beta_;
      double f = objective(lambda);
      // The quadratic model can overshoot; halve back toward the previous
      // iterate until the true objective is non-increasing.
      if (f > f_prev + 1e-12) {
        Vec direction = beta_ - beta_before;
        double s = 0.5;
        for (int h = 0; h < 32 && f > f_prev + 1e-12; ++h, s *= 0.5) {
          beta_ = beta_before + s * direction;
          eta_ = xs_ * beta_;
          f = objective(lambda);
        }
        if (f > f_prev + 1e-12) {  // no descent direction left
          beta_ = beta_before;
          eta_ = xs_ * beta_;
          f = objective(lambda);
          trace.push_back(f);
          converged = true;
          ++outer;
          break;
        }
      }
      trace.push_back(f);
      const double change = (beta_ - beta_before).cwiseAbs().maxCoeff();
      f_prev = f;
      if (change < config_.convergence_tol) {
        converged = true;
        ++outer;
        break;
      }
    }

    CoxFit fit;
    fit.coefficients = beta_.cwiseQuotient(scale_);
    fit.converged = converged;
    fit.n_iterations = outer;
    fit.objective_trace = std::move(trace);

    if (fit.coefficients.cwiseAbs().maxCoeff() > config_.coefficient_cap) {
      fit.coefficients = fit.coefficients.cwiseMax(-config_.coefficient_cap)
                             .cwiseMin(config_.coefficient_cap);
      beta_ = fit.coefficients.cwiseProduct(scale_);
      eta_ = xs_ * beta_;
      fit.converged = false;
      fit.diagnostic = "monotone likelihood suspected (separation); coefficients capped";
    }

    const Vec lp = data_.covariates() * fit.coefficients;
    fit.log_partial_likelihood = partial_loglik(data_, fit.coefficients);
    fit.lp_mean = lp.mean();
    fit.baseline = breslow_baseline(data_, lp);
    return fit;
  }

  double restricted_lambda_max() {
    // Fit with only the unpenalized coordinates active, then take the
    // largest weighted absolute score among penalized coordinates.
    solve_restricted();
    const Vec g = score_std();
    double lmax = 0.0;
    const double a = std::max(alpha_, 1e-3);
    for (int j = 0; j < J_; ++j) {
      if (dead_[j] || pen_[j] <= 0.0) continue;
      lmax = std::max(lmax, std::fabs(g[j]) / (a * pen_[j]));
    }
    return lmax * 1.000001 + 1e-12;
  }

 private:
  void solve_restricted() {
    bool any_free = false;
    for (int j = 0; j < J_; ++j) any_free |= (!dead_[j] && pen_[j] <= 0.0);
    beta_.setZero();
    eta_.setZero();
    if (any_free) solve(1e30);
  }

  double objective(double lambda) {
    const CoxIrlsTerms terms = cox_irls_terms(data_, eta_);
    double pen_term = 0.0;
    for (int j = 0; j < J_; ++j)
      pen_term += pen_[j] * (alpha_ * std::fabs(beta_[j]) +
                             0.5 * (1.0 - alpha_) * beta_[j] * beta_[j]);
    return -terms.loglik / n_ + lambda * pen_term;
  }

  const Dataset& data_;
  const FitConfig& config_;
  double alpha_;
  int n_, J_;
  Vec pen_;
  Mat xs_;
  Vec center_, scale_;
  std::vector<bool> dead_;
  Vec beta_;  // standardized scale
  Vec eta_;
};

}  // namespace

CoxFit fit_penalized_cox(const Dataset& data, const PenaltySpec& penalty,
                         const FitConfig& config) {
  Solver solver(data, penalty, config);
  return solver.solve(penalty.lambda);
}

double lambda_max(const Dataset& data, const PenaltySpec& penalty,
                  const FitConfig& config) {
  Solver solver(data, penalty, config);
  return solver.restricted_lambda_max();
}

std::vector<double> lambda_path(double lmax, int size, double min_ratio) {
  if (size < 1) throw std::invalid_argument("lambda_path: size must be >= 1");
  if (!(lmax > 0.0)) lmax = 1e-3;  // no penalized signal at all; nominal path
  std::vector<double> path(size);
  if (size == 1) {
    path[0] = lmax;
    return path;
  }
  const double lmin = min_ratio * lmax;
  for (int k = 0; k < size; ++k) {
    const double frac = static_cast<double>(k) / (size - 1);
    path[k] = std::exp(std::log(lmax) + frac * (std::log(lmin) - std::log(lmax)));
  }
  return path;
}

PenalizedPath fit_penalized_cox_path(const Dataset& data, const PenaltySpec& penalty,
                                     const std::vector<double>& lambdas,
                                     const FitConfig& config) {
  Solver solver(data, penalty, config);
  PenalizedPath out;
  out.lambdas = lambdas;
  out.coefficients.reserve(lambdas.size());
  for (double lam : lambdas) out.coefficients.push_back(solver.solve(lam).coefficients);
  return out;
}

}  // namespace tpsurv
