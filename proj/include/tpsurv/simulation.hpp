#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tpsurv/dataset.hpp"
#include "tpsurv/methods.hpp"
#include "tpsurv/metrics.hpp"
#include "tpsurv/rng.hpp"

namespace tpsurv {

enum class Mechanism { MCAR, MAR, MARViolation };
enum class CoefScenario { I, II, III };
enum class VMode { Binary, Continuous, Pair };

std::string mechanism_name(Mechanism m);
std::optional<Mechanism> mechanism_from_name(const std::string& s);
std::string coef_scenario_name(CoefScenario s);
std::optional<CoefScenario> coef_scenario_from_name(const std::string& s);
std::string v_mode_name(VMode v);
std::optional<VMode> v_mode_from_name(const std::string& s);

/// Full parameterization of one simulation cell.
struct ScenarioSpec {
  std::string name = "cell";
  int n = 150;
  int p = 10;
  double r = 0.3;  // target n'/n
  CoefScenario coefficient_scenario = CoefScenario::II;
  VMode v_kind = VMode::Binary;
  Mechanism mechanism = Mechanism::MCAR;
  double censor_rate = 0.8;
  bool ph_violation = false;
  double ph_attenuation = 0.5;  // multiplier on beta_U after the change point
  int replications = 100;
  std::uint64_t seed = 1;
  std::vector<Method> method_set = {Method::ExpertGuided, Method::CCA,
                                    Method::NaiveImputation, Method::MIWood,
                                    Method::MIBartlett};
  DomainKnowledge domain_knowledge = {{0, 1}, true, {}, false, false};
  MethodConfig method_config;
  double beta_v = 1.25;
  bool v_independent = false;  // V ~ Bernoulli(1/2), unlinked from U

  int d() const { return v_kind == VMode::Pair ? 2 : 1; }
  int n_test() const { return static_cast<int>(std::lround(r * n)); }
  Vec beta_u() const;
  Vec beta_v_vec() const;
  void validate() const;
};

/// One training/test draw plus the generating truth.
struct GeneratedData {
  TwoPhaseDataset train;  // missingness applied
  Mat v_true;             // train V before masking
  TwoPhaseDataset test;   // fully observed, size n'
  Vec true_beta_u;
  Vec true_beta_v;
  std::vector<bool> truth_mask;  // nonzero pattern over (U, V)
  double realized_missing_rate = 0.0;
};

Mat gen_covariates(int n, int p, Rng& rng);
Vec gen_binary_v(const Vec& u1, Rng& rng);
Vec gen_continuous_v(const Vec& u1, Rng& rng);
Vec gen_survival_times(const Vec& lp, Rng& rng);

/// Piecewise-exponential times: hazard exp(lp_full) before the change point,
/// exp(lp_late) after it.
Vec gen_nonph_times(const Vec& lp_full, const Vec& lp_late, double change_point,
                    Rng& rng);

/// Per-subject missingness indicators (1 = V missing). `v` supplies the
/// V-dependence of the MAR-violation mechanism through its first column.
std::vector<int> apply_missingness(const Mat& v, const Vec& u1, double r,
                                   Mechanism mechanism, Rng& rng,
                                   int* clamped = nullptr);

/// Bisection on the exponential rate c0 so that P(C < T) matches the target
/// under common random draws; `survival_times` are draws of T.
double calibrate_rate(const Vec& survival_times, double target, std::uint64_t seed);

/// Exponential censoring rate reaching the target censoring fraction for this
/// scenario, found by Monte-Carlo bisection; cached per scenario cell.
double calibrate_censoring_rate(const ScenarioSpec& spec, double target, int n_draws = 50000);

/// Change point for the non-PH variant: median observed event time of the
/// proportional-hazards version; cached per scenario cell.
double nonph_change_point(const ScenarioSpec& spec);

GeneratedData generate(const ScenarioSpec& spec, int rep_index);

struct MethodOutcome {
  Method method = Method::CCA;
  bool failed = false;
  std::string failure;
  MetricReport report;
};

struct ReplicationResult {
  int rep_index = 0;
  std::vector<MethodOutcome> outcomes;  // in method_set order
};

ReplicationResult run_replication(const ScenarioSpec& spec, int rep_index);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
  int count = 0;
};

struct MethodSummary {
  Method method = Method::CCA;
  MetricSummary c_index, calibration_slope, ibs, mcc;
  int failures = 0;
};

struct ScenarioResult {
  ScenarioSpec spec;
  std::vector<MethodSummary> summaries;       // in method_set order
  std::vector<ReplicationResult> replications;  // raw, in rep order

  const MethodSummary& summary(Method m) const;
};

/// Aggregates run_replication over seeds seed+1 .. seed+replications;
/// replications run in parallel on `jobs` threads (0 = hardware default).
ScenarioResult run_scenario(const ScenarioSpec& spec, int jobs = 0);

/// The truth-coefficient predictor, used as an upper-bound reference in tests.
FittedMethod oracle_method(const GeneratedData& gen);

}  // namespace tpsurv
