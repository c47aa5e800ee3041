#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tpsurv/cox.hpp"
#include "tpsurv/dataset.hpp"
#include "tpsurv/tuning.hpp"

namespace tpsurv {

enum class Method { ExpertGuided, CCA, NaiveImputation, MIWood, MIBartlett, Oracle };

std::string method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

/// Clinical input to the expert-guided procedure: which U columns form the
/// retained Z block, and how stage II treats V.
struct DomainKnowledge {
  std::vector<int> retained_u_indices;  // may be empty (no-domain-knowledge mode)
  bool force_v = true;                  // include every V column in stage II
  std::vector<int> v_included;          // used when !force_v and !pi_only
  bool pi_only = false;                 // stage II on the prognostic index alone
  /// Also unpenalize the retained U and V coordinates in the comparison
  /// methods (the repeat-analysis-with-domain-knowledge mode).
  bool apply_to_comparison_methods = false;
};

struct MethodConfig {
  FitConfig fit;
  std::vector<double> delta_grid = {0.5, 1.0, 2.0};
  int lambda_grid_size = 50;
  int cv_folds = 5;
  int mi_imputations = 5;
  int bartlett_sweeps = 5;
  int min_stage2_subjects = 20;
  int min_stage2_events = 5;
};

struct FittedMethod {
  Method method = Method::CCA;
  Vec beta_u;
  Vec beta_v;
  double theta0 = 0.0;  // recalibration slope; EG only
  Vec theta1;           // EG only
  /// Constant that makes linear_predictor equal theta0*zeta + theta1'V for
  /// the expert-guided fit (zeta is centered); 0 for the other methods.
  double lp_offset = 0.0;
  BreslowBaseline baseline;
  std::vector<bool> selected_mask;  // over (U, V)
  std::optional<CoxFit> stage1;     // EG only
  int fallback_draws = 0;           // Bartlett low-acceptance fallbacks

  double linear_predictor(const Vec& u, const Vec& v) const {
    return beta_u.dot(u) + beta_v.dot(v) + lp_offset;
  }
  Vec linear_predictors(const Mat& u, const Mat& v) const {
    return (u * beta_u + v * beta_v).array() + lp_offset;
  }
  double survival(double t, const Vec& u, const Vec& v) const {
    return baseline.survival(t, linear_predictor(u, v));
  }
};

/// Stage-I linear predictor, centered by the stage-I training mean.
Vec prognostic_index(const CoxFit& stage1, const Mat& u_rows);

FittedMethod fit_expert_guided(const TwoPhaseDataset& data, const DomainKnowledge& dk,
                               const MethodConfig& config, std::uint64_t seed);
FittedMethod fit_cca(const TwoPhaseDataset& data, const DomainKnowledge& dk,
                     const MethodConfig& config, std::uint64_t seed);
FittedMethod fit_naive_imputation(const TwoPhaseDataset& data, const DomainKnowledge& dk,
                                  const MethodConfig& config, std::uint64_t seed);
FittedMethod fit_mi_wood(const TwoPhaseDataset& data, int k_imputations,
                         const DomainKnowledge& dk, const MethodConfig& config,
                         std::uint64_t seed);
FittedMethod fit_mi_bartlett(const TwoPhaseDataset& data, int k_imputations,
                             const DomainKnowledge& dk, const MethodConfig& config,
                             std::uint64_t seed);

FittedMethod fit_method(Method method, const TwoPhaseDataset& data,
                        const DomainKnowledge& dk, const MethodConfig& config,
                        std::uint64_t seed);

std::vector<bool> select_variables(const FittedMethod& fit);

/// Consensus pooling shared by the MI methods: a coordinate is selected when
/// nonzero in at least ceil(K/2) fits; its pooled value is the mean over the
/// fits that selected it.
Vec pool_mi_coefficients(const std::vector<Vec>& fits);

/// P(V = 1 | everything) for the Bartlett update of one binary value:
/// prior pi from the covariate model, tilted by the Cox likelihood
/// contribution exp(delta*lp - H0(T)*exp(lp)) evaluated at V = 0 and V = 1.
double bartlett_binary_posterior(double pi, bool event, double cumhaz,
                                 double lp_without_v, double beta_v);

}  // namespace tpsurv
