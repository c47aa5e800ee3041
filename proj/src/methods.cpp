#include "tpsurv/methods.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tpsurv/rng.hpp"
#include "tpsurv/stats.hpp"

namespace tpsurv {

std::string method_name(Method m) {
  switch (m) {
    case Method::ExpertGuided: return "eg";
    case Method::CCA: return "cca";
    case Method::NaiveImputation: return "ni";
    case Method::MIWood: return "mi-wood";
    case Method::MIBartlett: return "mi-bartlett";
    case Method::Oracle: return "oracle";
  }
  return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
  if (name == "eg") return Method::ExpertGuided;
  if (name == "cca") return Method::CCA;
  if (name == "ni") return Method::NaiveImputation;
  if (name == "mi-wood") return Method::MIWood;
  if (name == "mi-bartlett") return Method::MIBartlett;
  if (name == "oracle") return Method::Oracle;
  return std::nullopt;
}

Vec prognostic_index(const CoxFit& stage1, const Mat& u_rows) {
  if (u_rows.cols() != stage1.coefficients.size())
    throw std::invalid_argument("prognostic_index: dimension mismatch");
  return (u_rows * stage1.coefficients).array() - stage1.lp_mean;
}

namespace {

void check_stage2_size(int n_complete, int n_complete_events, const MethodConfig& config,
                       const char* what) {
  if (n_complete < config.min_stage2_subjects ||
      n_complete_events < config.min_stage2_events)
    throw std::invalid_argument(std::string(what) +
                                ": too few complete subjects or events "
                                "(need >= " + std::to_string(config.min_stage2_subjects) +
                                " subjects, >= " + std::to_string(config.min_stage2_events) +
                                " events)");
}

int complete_events(const TwoPhaseDataset& data) {
  int k = 0;
  for (int i = 0; i < data.n(); ++i) k += (data.v_observed[i] && data.event[i]);
  return k;
}

// Penalty factors for the single-model methods: everything penalized unless
// the domain-knowledge repeat mode unpenalizes the named coordinates.
Vec comparison_penalty_factors(const TwoPhaseDataset& data, const DomainKnowledge& dk) {
  Vec pf = Vec::Ones(data.p() + data.d());
  if (dk.apply_to_comparison_methods) {
    for (int j : dk.retained_u_indices) {
      if (j < 0 || j >= data.p())
        throw std::invalid_argument("domain knowledge: retained index out of range");
      pf[j] = 0.0;
    }
    for (int c = 0; c < data.d(); ++c) pf[data.p() + c] = 0.0;
  }
  return pf;
}

// Analysis-model CV stream. Shared across methods and imputations on purpose:
// with no missing data all single-model fits must coincide exactly.
std::uint64_t analysis_seed(std::uint64_t seed) {
  return Rng(seed).fork("analysis").next_u64();
}

FittedMethod from_single_fit(Method method, const TwoPhaseDataset& data, CoxFit fit) {
  FittedMethod out;
  out.method = method;
  out.beta_u = fit.coefficients.head(data.p());
  out.beta_v = fit.coefficients.tail(data.d());
  out.baseline = std::move(fit.baseline);
  out.selected_mask.resize(data.p() + data.d());
  for (int j = 0; j < data.p() + data.d(); ++j)
    out.selected_mask[j] = fit.coefficients[j] != 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Imputation-model machinery (Bayesian parameter draws)

struct GaussianDraws {
  Vec coef;
  Mat cov_chol;      // lower Cholesky of the coefficient covariance
  double sigma = 0.0;  // linear model only
  double rss = 0.0;
  int df = 0;

  Vec draw_coef(Rng& rng, double sd_scale = 1.0) const {
    Vec z(coef.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
    return coef + sd_scale * (cov_chol * z);
  }
};

GaussianDraws fit_logistic(const Mat& x, const Vec& y) {
  const int q = static_cast<int>(x.cols());
  Vec theta = Vec::Zero(q);
  Mat info = Mat::Identity(q, q);
  for (int iter = 0; iter < 100; ++iter) {
    Vec eta = x * theta;
    Vec p(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) p[i] = logistic(eta[i]);
    Vec w = p.array() * (1.0 - p.array());
    w = w.cwiseMax(1e-9);
    info = x.transpose() * w.asDiagonal() * x;
    info.diagonal().array() += 1e-8;
    Vec g = x.transpose() * (y - p);
    Vec step = info.ldlt().solve(g);
    if (!step.allFinite())
      throw std::runtime_error("imputation model: logistic fit failed on degenerate design");
    theta += step;
    if (theta.cwiseAbs().maxCoeff() > 15.0) {
      theta = theta.cwiseMax(-15.0).cwiseMin(15.0);
      break;
    }
    if (step.cwiseAbs().maxCoeff() < 1e-10) break;
  }
  GaussianDraws out;
  out.coef = theta;
  Mat cov = info.inverse();
  Eigen::LLT<Mat> llt(0.5 * (cov + cov.transpose()));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("imputation model: logistic covariance not PD");
  out.cov_chol = llt.matrixL();
  return out;
}

GaussianDraws fit_linear(const Mat& x, const Vec& y) {
  const int q = static_cast<int>(x.cols());
  const int m = static_cast<int>(x.rows());
  Mat xtx = x.transpose() * x;
  xtx.diagonal().array() += 1e-10;
  Mat xtx_inv = xtx.inverse();
  GaussianDraws out;
  out.coef = xtx_inv * (x.transpose() * y);
  out.rss = (y - x * out.coef).squaredNorm();
  out.df = std::max(m - q, 1);
  out.sigma = std::sqrt(out.rss / out.df);
  Eigen::LLT<Mat> llt(0.5 * (xtx_inv + xtx_inv.transpose()));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("imputation model: linear covariance not PD");
  out.cov_chol = llt.matrixL();
  if (!out.coef.allFinite())
    throw std::runtime_error("imputation model: linear fit failed on degenerate design");
  return out;
}

// Posterior draw of (sigma, beta) for the linear imputation model.
struct LinearParamDraw {
  Vec coef;
  double sigma;
};
LinearParamDraw draw_linear(const GaussianDraws& model, Rng& rng) {
  const double chi2 = rng.chi_square(model.df);
  const double sigma = std::sqrt(model.rss / std::max(chi2, 1e-12));
  LinearParamDraw out;
  out.sigma = sigma;
  out.coef = model.draw_coef(rng, sigma);
  return out;
}

// Design matrix [1 | u_cols | extra...]
Mat design(const Mat& base, const std::vector<Vec>& extra) {
  Mat x(base.rows(), 1 + base.cols() + static_cast<Eigen::Index>(extra.size()));
  x.col(0).setOnes();
  x.middleCols(1, base.cols()) = base;
  for (size_t c = 0; c < extra.size(); ++c) x.col(1 + base.cols() + c) = extra[c];
  return x;
}

Mat rows_of(const Mat& m, const std::vector<int>& idx) {
  Mat out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (size_t k = 0; k < idx.size(); ++k) out.row(k) = m.row(idx[k]);
  return out;
}

Vec elems_of(const Vec& v, const std::vector<int>& idx) {
  Vec out(static_cast<Eigen::Index>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) out[k] = v[idx[k]];
  return out;
}

// ---------------------------------------------------------------------------

struct MiPooled {
  Vec coefficients;
  std::vector<bool> selected;
};

MiPooled pool(const std::vector<Vec>& fits) {
  const int K = static_cast<int>(fits.size());
  const int J = static_cast<int>(fits[0].size());
  const int quorum = (K + 1) / 2;  // ceil(K/2)
  MiPooled out;
  out.coefficients = Vec::Zero(J);
  out.selected.assign(J, false);
  for (int j = 0; j < J; ++j) {
    int votes = 0;
    double sum = 0.0;
    for (const Vec& b : fits)
      if (b[j] != 0.0) {
        ++votes;
        sum += b[j];
      }
    if (votes >= quorum) {
      out.selected[j] = true;
      out.coefficients[j] = sum / votes;
    }
  }
  return out;
}

FittedMethod pooled_method(Method method, const TwoPhaseDataset& data,
                           const std::vector<Vec>& fits,
                           const std::vector<Mat>& imputed_v) {
  MiPooled pooled = pool(fits);
  FittedMethod out;
  out.method = method;
  out.beta_u = pooled.coefficients.head(data.p());
  out.beta_v = pooled.coefficients.tail(data.d());
  out.selected_mask = pooled.selected;

  // One baseline for the pooled coefficients: average each subject's linear
  // predictor over the completed datasets.
  Mat v_mean = Mat::Zero(data.n(), data.d());
  for (const Mat& v : imputed_v) v_mean += v;
  v_mean /= static_cast<double>(imputed_v.size());
  const Vec lp = data.u * out.beta_u + v_mean * out.beta_v;
  out.baseline = breslow_baseline(Dataset(data.time, data.event, Mat::Zero(data.n(), 0)), lp);
  return out;
}

// Completed V matrix: observed values kept, missing cells from `fill`.
Mat completed_v(const TwoPhaseDataset& data, const Mat& fill) {
  Mat v = data.v;
  for (int i = 0; i < data.n(); ++i)
    if (!data.v_observed[i]) v.row(i) = fill.row(i);
  return v;
}

}  // namespace

Vec pool_mi_coefficients(const std::vector<Vec>& fits) {
  if (fits.empty()) throw std::invalid_argument("pool_mi_coefficients: no fits");
  return pool(fits).coefficients;
}

double bartlett_binary_posterior(double pi, bool event, double cumhaz,
                                 double lp_without_v, double beta_v) {
  if (!(pi >= 0.0 && pi <= 1.0))
    throw std::invalid_argument("bartlett_binary_posterior: pi outside [0,1]");
  const double d = event ? 1.0 : 0.0;
  const double log_l0 = d * lp_without_v - cumhaz * std::exp(lp_without_v);
  const double log_l1 =
      d * (lp_without_v + beta_v) - cumhaz * std::exp(lp_without_v + beta_v);
  if (pi <= 0.0) return 0.0;
  if (pi >= 1.0) return 1.0;
  // p1 = pi e^{l1} / (pi e^{l1} + (1-pi) e^{l0}), computed stably
  const double t = std::log(pi) + log_l1 - (std::log1p(-pi) + log_l0);
  return logistic(t);
}

FittedMethod fit_expert_guided(const TwoPhaseDataset& data, const DomainKnowledge& dk,
                               const MethodConfig& config, std::uint64_t seed) {
  data.validate();
  const int p = data.p();
  const int d = data.d();
  check_stage2_size(data.n_complete(), complete_events(data), config, "fit_expert_guided");

  // Stage I: partially penalized adaptive lasso on U over all n subjects.
  Vec pf = Vec::Ones(p);
  for (int j : dk.retained_u_indices) {
    if (j < 0 || j >= p)
      throw std::invalid_argument("domain knowledge: retained index out of range");
    pf[j] = 0.0;
  }
  const TunedFit stage1 =
      fit_adaptive_lasso_cv(data.full_u(), pf, config.fit, analysis_seed(seed),
                            config.delta_grid, config.lambda_grid_size, config.cv_folds);

  // Stage II: unpenalized Cox on the target subsample with (zeta, V).
  const auto idx = data.complete_rows();
  const Mat u_c = rows_of(data.u, idx);
  const Mat v_c = rows_of(data.v, idx);
  const Vec zeta = prognostic_index(stage1.fit, u_c);

  std::vector<int> v_cols;
  if (!dk.pi_only) {
    if (dk.force_v)
      for (int c = 0; c < d; ++c) v_cols.push_back(c);
    else
      v_cols = dk.v_included;
  }
  Mat x2(static_cast<Eigen::Index>(idx.size()), 1 + v_cols.size());
  x2.col(0) = zeta;
  for (size_t c = 0; c < v_cols.size(); ++c) x2.col(1 + c) = v_c.col(v_cols[c]);

  Vec t2(static_cast<Eigen::Index>(idx.size()));
  std::vector<int> e2(idx.size());
  for (size_t k = 0; k < idx.size(); ++k) {
    t2[k] = data.time[idx[k]];
    e2[k] = data.event[idx[k]];
  }
  const CoxFit stage2 = fit_cox(Dataset(t2, e2, x2), config.fit);

  FittedMethod out;
  out.method = Method::ExpertGuided;
  out.stage1 = stage1.fit;
  out.theta0 = stage2.coefficients[0];
  out.theta1 = Vec::Zero(d);
  for (size_t c = 0; c < v_cols.size(); ++c) out.theta1[v_cols[c]] = stage2.coefficients[1 + c];
  out.beta_u = out.theta0 * stage1.fit.coefficients;
  out.beta_v = out.theta1;
  out.lp_offset = -out.theta0 * stage1.fit.lp_mean;
  out.baseline = stage2.baseline;

  out.selected_mask.assign(p + d, false);
  for (int j = 0; j < p; ++j) out.selected_mask[j] = stage1.fit.coefficients[j] != 0.0;
  for (int c = 0; c < d; ++c) out.selected_mask[p + c] = out.theta1[c] != 0.0;
  return out;
}

FittedMethod fit_cca(const TwoPhaseDataset& data, const DomainKnowledge& dk,
                     const MethodConfig& config, std::uint64_t seed) {
  data.validate();
  check_stage2_size(data.n_complete(), complete_events(data), config, "fit_cca");
  const Dataset ds = data.complete_joint();
  const TunedFit tuned = fit_adaptive_lasso_cv(
      ds, comparison_penalty_factors(data, dk), config.fit, analysis_seed(seed),
      config.delta_grid, config.lambda_grid_size, config.cv_folds);
  return from_single_fit(Method::CCA, data, tuned.fit);
}

FittedMethod fit_naive_imputation(const TwoPhaseDataset& data, const DomainKnowledge& dk,
                                  const MethodConfig& config, std::uint64_t seed) {
  data.validate();
  const auto idx = data.complete_rows();
  if (idx.empty())
    throw std::invalid_argument("fit_naive_imputation: no observed V values");

  Mat fill(data.n(), data.d());
  for (int c = 0; c < data.d(); ++c) {
    double value;
    if (data.v_kinds[c] == VKind::Binary) {
      int ones = 0;
      for (int i : idx) ones += data.v(i, c) != 0.0;
      const int zeros = static_cast<int>(idx.size()) - ones;
      value = ones > zeros ? 1.0 : 0.0;  // tie falls to 0
    } else {
      double sum = 0.0;
      for (int i : idx) sum += data.v(i, c);
      value = sum / idx.size();
    }
    fill.col(c).setConstant(value);
  }

  const Dataset ds = data.joint_with_v(completed_v(data, fill));
  const TunedFit tuned = fit_adaptive_lasso_cv(
      ds, comparison_penalty_factors(data, dk), config.fit, analysis_seed(seed),
      config.delta_grid, config.lambda_grid_size, config.cv_folds);
  return from_single_fit(Method::NaiveImputation, data, tuned.fit);
}

FittedMethod fit_mi_wood(const TwoPhaseDataset& data, int k_imputations,
                         const DomainKnowledge& dk, const MethodConfig& config,
                         std::uint64_t seed) {
  data.validate();
  if (k_imputations < 1)
    throw std::invalid_argument("fit_mi_wood: need at least one imputation");
  const auto obs_idx = data.complete_rows();
  std::vector<int> mis_idx;
  for (int i = 0; i < data.n(); ++i)
    if (!data.v_observed[i]) mis_idx.push_back(i);

  // Outcome carriers per White-Royston: event indicator and the Nelson-Aalen
  // cumulative hazard at the subject's time.
  const BreslowBaseline na =
      breslow_baseline(Dataset(data.time, data.event, Mat::Zero(data.n(), 0)),
                       Vec::Zero(data.n()));
  Vec carrier_event(data.n()), carrier_hazard(data.n());
  for (int i = 0; i < data.n(); ++i) {
    carrier_event[i] = data.event[i] ? 1.0 : 0.0;
    carrier_hazard[i] = na.cumhaz(data.time[i]);
  }

  const Vec pf = comparison_penalty_factors(data, dk);
  const std::uint64_t fit_seed = analysis_seed(seed);
  Rng mi_rng = Rng(seed).fork("mi-wood");

  std::vector<Vec> fits;
  std::vector<Mat> imputed;
  for (int k = 0; k < k_imputations; ++k) {
    Rng rng = mi_rng.fork(static_cast<std::uint64_t>(k));
    Mat fill = Mat::Zero(data.n(), data.d());
    // Chained over V columns: later columns condition on the earlier ones.
    std::vector<Vec> extra = {carrier_event, carrier_hazard};
    std::vector<Vec> extra_completed = extra;
    for (int c = 0; c < data.d(); ++c) {
      const Mat x_obs = design(rows_of(data.u, obs_idx),
                               {elems_of(extra[0], obs_idx), elems_of(extra[1], obs_idx)});
      Mat x_obs_full(x_obs.rows(), x_obs.cols() + c);
      x_obs_full.leftCols(x_obs.cols()) = x_obs;
      for (int cc = 0; cc < c; ++cc)
        x_obs_full.col(x_obs.cols() + cc) = elems_of(data.v.col(cc), obs_idx);
      const Vec y_obs = elems_of(data.v.col(c), obs_idx);

      if (data.v_kinds[c] == VKind::Binary) {
        const GaussianDraws model = fit_logistic(x_obs_full, y_obs);
        const Vec theta = model.draw_coef(rng);
        for (int i : mis_idx) {
          Vec row(x_obs_full.cols());
          row[0] = 1.0;
          row.segment(1, data.p()) = data.u.row(i).transpose();
          row[1 + data.p()] = carrier_event[i];
          row[2 + data.p()] = carrier_hazard[i];
          for (int cc = 0; cc < c; ++cc) row[3 + data.p() + cc] = fill(i, cc);
          fill(i, c) = rng.bernoulli(logistic(theta.dot(row))) ? 1.0 : 0.0;
        }
      } else {
        const GaussianDraws model = fit_linear(x_obs_full, y_obs);
        const LinearParamDraw draw = draw_linear(model, rng);
        for (int i : mis_idx) {
          Vec row(x_obs_full.cols());
          row[0] = 1.0;
          row.segment(1, data.p()) = data.u.row(i).transpose();
          row[1 + data.p()] = carrier_event[i];
          row[2 + data.p()] = carrier_hazard[i];
          for (int cc = 0; cc < c; ++cc) row[3 + data.p() + cc] = fill(i, cc);
          fill(i, c) = draw.coef.dot(row) + draw.sigma * rng.normal();
        }
      }
    }
    const Mat v_complete = completed_v(data, fill);
    const Dataset ds = data.joint_with_v(v_complete);
    const TunedFit tuned =
        fit_adaptive_lasso_cv(ds, pf, config.fit, fit_seed, config.delta_grid,
                              config.lambda_grid_size, config.cv_folds);
    fits.push_back(tuned.fit.coefficients);
    imputed.push_back(v_complete);
  }
  return pooled_method(Method::MIWood, data, fits, imputed);
}

FittedMethod fit_mi_bartlett(const TwoPhaseDataset& data, int k_imputations,
                             const DomainKnowledge& dk, const MethodConfig& config,
                             std::uint64_t seed) {
  data.validate();
  if (k_imputations < 1)
    throw std::invalid_argument("fit_mi_bartlett: need at least one imputation");
  const auto obs_idx = data.complete_rows();
  std::vector<int> mis_idx;
  for (int i = 0; i < data.n(); ++i)
    if (!data.v_observed[i]) mis_idx.push_back(i);

  const int p = data.p();
  const int d = data.d();
  const Vec pf = comparison_penalty_factors(data, dk);
  const std::uint64_t fit_seed = analysis_seed(seed);
  Rng mi_rng = Rng(seed).fork("mi-bartlett");

  // Covariate models V_c | (U, V_<c>) on the complete rows; the outcome
  // enters only through the acceptance step.
  std::vector<GaussianDraws> cov_models;
  for (int c = 0; c < d; ++c) {
    Mat x_obs = design(rows_of(data.u, obs_idx), {});
    Mat x_full(x_obs.rows(), x_obs.cols() + c);
    x_full.leftCols(x_obs.cols()) = x_obs;
    for (int cc = 0; cc < c; ++cc)
      x_full.col(x_obs.cols() + cc) = elems_of(data.v.col(cc), obs_idx);
    const Vec y = elems_of(data.v.col(c), obs_idx);
    cov_models.push_back(data.v_kinds[c] == VKind::Binary ? fit_logistic(x_full, y)
                                                          : fit_linear(x_full, y));
  }

  int fallback_draws = 0;
  std::vector<Vec> fits;
  std::vector<Mat> imputed;
  for (int k = 0; k < k_imputations; ++k) {
    Rng rng = mi_rng.fork(static_cast<std::uint64_t>(k));

    // Per-imputation parameter draws for the covariate models.
    std::vector<Vec> theta(d);
    std::vector<double> sigma(d, 0.0);
    for (int c = 0; c < d; ++c) {
      if (data.v_kinds[c] == VKind::Binary) {
        theta[c] = cov_models[c].draw_coef(rng);
      } else {
        const LinearParamDraw lin = draw_linear(cov_models[c], rng);
        theta[c] = lin.coef;
        sigma[c] = lin.sigma;
      }
    }

    auto covariate_row = [&](int i, int c, const Mat& fill) {
      Vec row(1 + p + c);
      row[0] = 1.0;
      row.segment(1, p) = data.u.row(i).transpose();
      for (int cc = 0; cc < c; ++cc) row[1 + p + cc] = fill(i, cc);
      return row;
    };

    // Initial fill: plain covariate-model draws.
    Mat fill = Mat::Zero(data.n(), d);
    for (int i : mis_idx)
      for (int c = 0; c < d; ++c) {
        const Vec row = covariate_row(i, c, fill);
        if (data.v_kinds[c] == VKind::Binary)
          fill(i, c) = rng.bernoulli(logistic(theta[c].dot(row))) ? 1.0 : 0.0;
        else
          fill(i, c) = theta[c].dot(row) + sigma[c] * rng.normal();
      }

    // Sweeps: refit the substantive model, then redraw the missing values
    // compatibly with it. Tuning parameters are selected at the first sweep
    // and reused for the refreshes.
    PenaltySpec refresh_spec;
    refresh_spec.alpha = 1.0;
    refresh_spec.penalty_factors = pf;
    bool tuned_once = false;

    Vec beta;
    BreslowBaseline h0;
    for (int sweep = 0; sweep < config.bartlett_sweeps; ++sweep) {
      const Dataset ds = data.joint_with_v(completed_v(data, fill));
      if (!tuned_once) {
        const TunedFit tuned =
            fit_adaptive_lasso_cv(ds, pf, config.fit, fit_seed, config.delta_grid,
                                  config.lambda_grid_size, config.cv_folds);
        refresh_spec.lambda = tuned.cv.selected_point().lambda;
        refresh_spec.adaptive_weights = tuned.weights;
        beta = tuned.fit.coefficients;
        h0 = tuned.fit.baseline;
        tuned_once = true;
      } else {
        const CoxFit fit = fit_penalized_cox(ds, refresh_spec, config.fit);
        beta = fit.coefficients;
        h0 = fit.baseline;
      }

      for (int i : mis_idx) {
        const double cumhaz = h0.cumhaz(data.time[i]);
        const bool event = data.event[i] != 0;
        for (int c = 0; c < d; ++c) {
          // Linear predictor with V_c excluded; other V columns at their
          // current imputed values.
          double lp0 = beta.head(p).dot(data.u.row(i));
          for (int cc = 0; cc < d; ++cc)
            if (cc != c) lp0 += beta[p + cc] * fill(i, cc);
          const double beta_vc = beta[p + c];
          const Vec row = covariate_row(i, c, fill);

          if (data.v_kinds[c] == VKind::Binary) {
            const double pi = logistic(theta[c].dot(row));
            fill(i, c) =
                rng.bernoulli(bartlett_binary_posterior(pi, event, cumhaz, lp0, beta_vc))
                    ? 1.0
                    : 0.0;
          } else {
            const double mu = theta[c].dot(row);
            // Envelope: sup over v of exp(delta*u - H*e^u), u = lp0 + b*v.
            // Events peak at e^u = 1/H; censored contributions approach 1.
            double log_m;
            if (beta_vc == 0.0)
              log_m = (event ? lp0 : 0.0) - cumhaz * std::exp(lp0);  // constant in v
            else if (event)
              log_m = -std::log(std::max(cumhaz, 1e-300)) - 1.0;
            else
              log_m = 0.0;

            bool accepted = false;
            double value = mu;
            for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
              const double v_prop = mu + sigma[c] * rng.normal();
              const double u_lin = lp0 + beta_vc * v_prop;
              const double log_l = (event ? u_lin : 0.0) - cumhaz * std::exp(u_lin);
              if (std::log(rng.uniform_pos()) < log_l - log_m) {
                accepted = true;
                value = v_prop;
              }
            }
            if (!accepted) {
              // Truncated-proposal fallback: exact draw on a grid.
              ++fallback_draws;
              const int grid_n = 401;
              std::vector<double> vs(grid_n), wts(grid_n);
              double wmax = -1e300;
              for (int g = 0; g < grid_n; ++g) {
                const double v_g = mu + sigma[c] * (-5.0 + 10.0 * g / (grid_n - 1));
                const double u_lin = lp0 + beta_vc * v_g;
                const double z = (v_g - mu) / sigma[c];
                const double lw =
                    -0.5 * z * z + (event ? u_lin : 0.0) - cumhaz * std::exp(u_lin);
                vs[g] = v_g;
                wts[g] = lw;
                wmax = std::max(wmax, lw);
              }
              double total = 0.0;
              for (double& w : wts) {
                w = std::exp(w - wmax);
                total += w;
              }
              double pick = rng.uniform() * total;
              for (int g = 0; g < grid_n; ++g) {
                pick -= wts[g];
                if (pick <= 0.0) {
                  value = vs[g];
                  break;
                }
              }
            }
            fill(i, c) = value;
          }
        }
      }
    }

    // Analysis fit on the final completed dataset, pooled like MI-Wood.
    const Mat v_complete = completed_v(data, fill);
    const Dataset ds = data.joint_with_v(v_complete);
    const TunedFit tuned =
        fit_adaptive_lasso_cv(ds, pf, config.fit, fit_seed, config.delta_grid,
                              config.lambda_grid_size, config.cv_folds);
    fits.push_back(tuned.fit.coefficients);
    imputed.push_back(v_complete);
  }

  FittedMethod out = pooled_method(Method::MIBartlett, data, fits, imputed);
  out.fallback_draws = fallback_draws;
  return out;
}

FittedMethod fit_method(Method method, const TwoPhaseDataset& data,
                        const DomainKnowledge& dk, const MethodConfig& config,
                        std::uint64_t seed) {
  switch (method) {
    case Method::ExpertGuided: return fit_expert_guided(data, dk, config, seed);
    case Method::CCA: return fit_cca(data, dk, config, seed);
    case Method::NaiveImputation: return fit_naive_imputation(data, dk, config, seed);
    case Method::MIWood:
      return fit_mi_wood(data, config.mi_imputations, dk, config, seed);
    case Method::MIBartlett:
      return fit_mi_bartlett(data, config.mi_imputations, dk, config, seed);
    case Method::Oracle:
      throw std::invalid_argument("oracle method requires the true coefficients");
  }
  throw std::invalid_argument("unknown method");
}

std::vector<bool> select_variables(const FittedMethod& fit) {
  const int p = static_cast<int>(fit.beta_u.size());
  const int d = static_cast<int>(fit.beta_v.size());
  std::vector<bool> mask(p + d);
  if (fit.method == Method::ExpertGuided && fit.stage1) {
    // theta0 scaling cannot change zero/nonzero status; read stage I directly.
    for (int j = 0; j < p; ++j) mask[j] = fit.stage1->coefficients[j] != 0.0;
  } else {
    for (int j = 0; j < p; ++j) mask[j] = fit.beta_u[j] != 0.0;
  }
  for (int c = 0; c < d; ++c) mask[p + c] = fit.beta_v[c] != 0.0;
  return mask;
}

}  // namespace tpsurv
