#include "tpsurv/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tpsurv/rng.hpp"

namespace tpsurv {

Vec weights_from_pilot(const Vec& pilot, int n, double delta) {
  if (n < 1) throw std::invalid_argument("weights_from_pilot: n must be positive");
  if (!(delta >= 0.0)) throw std::invalid_argument("weights_from_pilot: delta must be >= 0");
  Vec w(pilot.size());
  for (Eigen::Index j = 0; j < pilot.size(); ++j)
    w[j] = std::pow(std::fabs(pilot[j]) + 1.0 / n, -delta);
  return w;
}

std::vector<int> make_folds(const Dataset& data, int folds, std::uint64_t seed) {
  const int n = data.n();
  if (folds < 2) throw std::invalid_argument("cross_validate: folds must be >= 2");
  if (folds > n) throw std::invalid_argument("cross_validate: more folds than subjects");
  Rng rng(seed);

  auto assign = [&](const std::vector<int>& order) {
    std::vector<int> label(n);
    for (int i = 0; i < n; ++i) label[order[i]] = i % folds;
    return label;
  };
  auto shuffled = [&](std::vector<int> idx) {
    for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i)
      std::swap(idx[i], idx[rng.below(i + 1)]);
    return idx;
  };
  auto training_parts_have_events = [&](const std::vector<int>& label) {
    std::vector<int> fold_events(folds, 0);
    int total = 0;
    for (int i = 0; i < n; ++i)
      if (data.event()[i]) {
        fold_events[label[i]]++;
        total++;
      }
    for (int k = 0; k < folds; ++k)
      if (total - fold_events[k] < 1) return false;
    return true;
  };

  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  auto label = assign(shuffled(all));
  if (training_parts_have_events(label)) return label;

  // Retry once, dealing events and censorings round-robin separately.
  std::vector<int> ev, cs;
  for (int i = 0; i < n; ++i) (data.event()[i] ? ev : cs).push_back(i);
  ev = shuffled(ev);
  cs = shuffled(cs);
  std::vector<int> order = ev;
  order.insert(order.end(), cs.begin(), cs.end());
  label = assign(order);
  if (training_parts_have_events(label)) return label;
  throw std::runtime_error("cross_validate: a training part has no events");
}

namespace {

struct WeightedGrid {
  double delta;
  Vec weights;
};

// CVPL over one lambda path for one (delta, weights) setting.
struct PathDeviance {
  std::vector<double> lambdas;
  std::vector<double> mean_dev;
  std::vector<double> se_dev;
};

PathDeviance cv_one_path(const Dataset& data, const Vec& penalty_factors,
                         double alpha, const Vec& weights, int lambda_grid_size,
                         const std::vector<int>& fold_labels, int folds,
                         const FitConfig& config) {
  PenaltySpec base;
  base.alpha = alpha;
  base.penalty_factors = penalty_factors;
  base.adaptive_weights = weights;

  const double lmax = lambda_max(data, base, config);
  PathDeviance out;
  out.lambdas = lambda_path(lmax, lambda_grid_size);
  const int L = static_cast<int>(out.lambdas.size());

  Mat dev(folds, L);
  for (int k = 0; k < folds; ++k) {
    std::vector<int> train_idx;
    for (int i = 0; i < data.n(); ++i)
      if (fold_labels[i] != k) train_idx.push_back(i);
    const Dataset train = data.subset(train_idx);
    const PenalizedPath path = fit_penalized_cox_path(train, base, out.lambdas, config);
    for (int l = 0; l < L; ++l) {
      const Vec& beta = path.coefficients[l];
      dev(k, l) = -2.0 * (partial_loglik(data, beta) - partial_loglik(train, beta));
    }
  }

  out.mean_dev.resize(L);
  out.se_dev.resize(L);
  for (int l = 0; l < L; ++l) {
    const double m = dev.col(l).mean();
    out.mean_dev[l] = m;
    double ss = 0.0;
    for (int k = 0; k < folds; ++k) ss += (dev(k, l) - m) * (dev(k, l) - m);
    out.se_dev[l] = folds > 1 ? std::sqrt(ss / (folds - 1) / folds) : 0.0;
  }
  return out;
}

CvResult cv_over_deltas(const Dataset& data, const std::vector<WeightedGrid>& settings,
                        int lambda_grid_size, const std::vector<int>& fold_labels,
                        int folds, const Vec& penalty_factors, double alpha,
                        const FitConfig& config) {
  CvResult result;
  for (const auto& s : settings) {
    const PathDeviance pd = cv_one_path(data, penalty_factors, alpha, s.weights,
                                        lambda_grid_size, fold_labels, folds, config);
    for (size_t l = 0; l < pd.lambdas.size(); ++l)
      result.grid.push_back({s.delta, pd.lambdas[l], pd.mean_dev[l], pd.se_dev[l]});
  }
  for (size_t g = 0; g < result.grid.size(); ++g) {
    if (result.selected < 0) {
      result.selected = static_cast<int>(g);
      continue;
    }
    const CvPoint& best = result.grid[result.selected];
    const CvPoint& cand = result.grid[g];
    if (cand.mean_deviance < best.mean_deviance ||
        (cand.mean_deviance == best.mean_deviance &&
         (cand.lambda < best.lambda ||
          (cand.lambda == best.lambda && cand.delta < best.delta))))
      result.selected = static_cast<int>(g);
  }
  return result;
}

Vec penalty_factors_from_indices(int J, const std::vector<int>& penalized_indices) {
  Vec pf = Vec::Zero(J);
  for (int j : penalized_indices) {
    if (j < 0 || j >= J)
      throw std::invalid_argument("penalized index out of range");
    pf[j] = 1.0;
  }
  return pf;
}

std::vector<int> penalized_indices_of(const Vec& pf) {
  std::vector<int> idx;
  for (Eigen::Index j = 0; j < pf.size(); ++j)
    if (pf[j] > 0.0) idx.push_back(static_cast<int>(j));
  return idx;
}

}  // namespace

Vec pilot_elastic_net(const Dataset& data, const std::vector<int>& penalized_indices,
                      const FitConfig& config, std::uint64_t seed) {
  const int J = data.n_covariates();
  const Vec pf = penalty_factors_from_indices(J, penalized_indices);

  const int folds = 5;
  const auto labels = make_folds(data, folds, Rng(seed).fork("pilot-folds").next_u64());
  const std::vector<WeightedGrid> setting = {{0.0, Vec::Ones(J)}};
  const CvResult cv =
      cv_over_deltas(data, setting, 50, labels, folds, pf, 0.5, config);

  PenaltySpec spec;
  spec.alpha = 0.5;
  spec.penalty_factors = pf;
  spec.lambda = cv.selected_point().lambda;
  return fit_penalized_cox(data, spec, config).coefficients;
}

Vec adaptive_weights(const Dataset& data, const std::vector<int>& penalized_indices,
                     double delta, const FitConfig& config, std::uint64_t seed) {
  const Vec pilot = pilot_elastic_net(data, penalized_indices, config, seed);
  Vec w = weights_from_pilot(pilot, data.n(), delta);
  // Unpenalized coordinates carry no weight; normalize them to 1 so the
  // weight vector composes cleanly with penalty factors.
  Vec pf = penalty_factors_from_indices(data.n_covariates(), penalized_indices);
  for (Eigen::Index j = 0; j < w.size(); ++j)
    if (pf[j] == 0.0) w[j] = 1.0;
  return w;
}

namespace {

Vec delta_weights(const Vec& pilot, const Vec& pf, int n, double delta) {
  Vec w = weights_from_pilot(pilot, n, delta);
  for (Eigen::Index j = 0; j < pf.size(); ++j)
    if (pf[j] == 0.0) w[j] = 1.0;  // unpenalized coordinates carry no weight
  return w;
}

CvResult cross_validate_with_pilot(const Dataset& data, const Vec& pilot,
                                   const std::vector<double>& delta_grid,
                                   int lambda_grid_size, int folds, const Vec& pf,
                                   std::uint64_t fold_seed, const FitConfig& config) {
  if (delta_grid.empty())
    throw std::invalid_argument("cross_validate: empty delta grid");
  if (lambda_grid_size < 1)
    throw std::invalid_argument("cross_validate: lambda grid size must be >= 1");
  const auto labels = make_folds(data, folds, fold_seed);
  std::vector<WeightedGrid> settings;
  for (double delta : delta_grid)
    settings.push_back({delta, delta_weights(pilot, pf, data.n(), delta)});
  return cv_over_deltas(data, settings, lambda_grid_size, labels, folds, pf, 1.0, config);
}

}  // namespace

CvResult cross_validate(const Dataset& data, const std::vector<double>& delta_grid,
                        int lambda_grid_size, int folds, const Vec& penalty_factors,
                        std::uint64_t seed, const FitConfig& config) {
  Vec pf = penalty_factors.size() ? penalty_factors
                                  : Vec::Ones(data.n_covariates());
  Rng rng(seed);
  const Vec pilot =
      pilot_elastic_net(data, penalized_indices_of(pf), config, rng.fork("pilot").next_u64());
  return cross_validate_with_pilot(data, pilot, delta_grid, lambda_grid_size, folds, pf,
                                   rng.fork("folds").next_u64(), config);
}

TunedFit fit_adaptive_lasso_cv(const Dataset& data, const Vec& penalty_factors,
                               const FitConfig& config, std::uint64_t seed,
                               const std::vector<double>& delta_grid,
                               int lambda_grid_size, int folds) {
  Vec pf = penalty_factors.size() ? penalty_factors
                                  : Vec::Ones(data.n_covariates());
  Rng rng(seed);
  const Vec pilot =
      pilot_elastic_net(data, penalized_indices_of(pf), config, rng.fork("pilot").next_u64());

  TunedFit out;
  out.cv = cross_validate_with_pilot(data, pilot, delta_grid, lambda_grid_size, folds, pf,
                                     rng.fork("folds").next_u64(), config);
  out.weights = delta_weights(pilot, pf, data.n(), out.cv.selected_point().delta);

  PenaltySpec spec;
  spec.alpha = 1.0;
  spec.penalty_factors = pf;
  spec.adaptive_weights = out.weights;
  spec.lambda = out.cv.selected_point().lambda;
  out.fit = fit_penalized_cox(data, spec, config);
  return out;
}

}  // namespace tpsurv
