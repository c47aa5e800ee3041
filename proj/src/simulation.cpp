#include "tpsurv/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tpsurv/breslow.hpp"
#include "tpsurv/stats.hpp"

namespace tpsurv {

std::string mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::MCAR: return "mcar";
    case Mechanism::MAR: return "mar";
    case Mechanism::MARViolation: return "mar-viol";
  }
  return "?";
}

std::optional<Mechanism> mechanism_from_name(const std::string& s) {
  if (s == "mcar") return Mechanism::MCAR;
  if (s == "mar") return Mechanism::MAR;
  if (s == "mar-viol" || s == "mar_viol" || s == "marviol") return Mechanism::MARViolation;
  return std::nullopt;
}

std::string coef_scenario_name(CoefScenario s) {
  switch (s) {
    case CoefScenario::I: return "I";
    case CoefScenario::II: return "II";
    case CoefScenario::III: return "III";
  }
  return "?";
}

std::optional<CoefScenario> coef_scenario_from_name(const std::string& s) {
  if (s == "I" || s == "1" || s == "i") return CoefScenario::I;
  if (s == "II" || s == "2" || s == "ii") return CoefScenario::II;
  if (s == "III" || s == "3" || s == "iii") return CoefScenario::III;
  return std::nullopt;
}

std::string v_mode_name(VMode v) {
  switch (v) {
    case VMode::Binary: return "binary";
    case VMode::Continuous: return "continuous";
    case VMode::Pair: return "pair";
  }
  return "?";
}

std::optional<VMode> v_mode_from_name(const std::string& s) {
  if (s == "binary") return VMode::Binary;
  if (s == "continuous") return VMode::Continuous;
  if (s == "pair") return VMode::Pair;
  return std::nullopt;
}

Vec ScenarioSpec::beta_u() const {
  Vec b = Vec::Zero(p);
  switch (coefficient_scenario) {
    case CoefScenario::I:
      for (int j = 0; j < p / 2; ++j) b[j] = 0.5;
      break;
    case CoefScenario::II:
      b[0] = 1.25;
      b[1] = 1.0;
      b[2] = 0.75;
      break;
    case CoefScenario::III: {
      b[0] = 0.75;
      const int block = p / 5;  // 0.2 p
      for (int j = 0; j < block; ++j) b[2 + j] = 0.75;
      break;
    }
  }
  return b;
}

Vec ScenarioSpec::beta_v_vec() const { return Vec::Constant(d(), beta_v); }

void ScenarioSpec::validate() const {
  if (n < 2 || p < 1) throw std::invalid_argument("scenario: n and p must be positive");
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("scenario: r must be in (0,1)");
  if (!(censor_rate > 0.0 && censor_rate < 1.0))
    throw std::invalid_argument("scenario: censor_rate must be in (0,1)");
  if (replications < 1) throw std::invalid_argument("scenario: replications must be >= 1");
  if (method_set.empty()) throw std::invalid_argument("scenario: empty method set");
  switch (coefficient_scenario) {
    case CoefScenario::I:
      if (p % 2 != 0) throw std::invalid_argument("scenario I: p must be even");
      break;
    case CoefScenario::II:
      if (p < 3) throw std::invalid_argument("scenario II: p must be >= 3");
      break;
    case CoefScenario::III:
      if (p % 5 != 0 || p < 5)
        throw std::invalid_argument("scenario III: 0.2*p must be integral");
      break;
  }
  if (n_test() < 2) throw std::invalid_argument("scenario: test size r*n too small");
}

Mat gen_covariates(int n, int p, Rng& rng) {
  if (n < 1 || p < 1) throw std::invalid_argument("gen_covariates: n, p must be positive");
  Mat u(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) u(i, j) = rng.normal();
  return u;
}

Vec gen_binary_v(const Vec& u1, Rng& rng) {
  Vec v(u1.size());
  for (Eigen::Index i = 0; i < u1.size(); ++i) {
    const double pi = u1[i] < -0.5 ? 0.3 : (u1[i] < 1.0 ? 0.5 : 0.2);
    v[i] = rng.bernoulli(pi) ? 1.0 : 0.0;
  }
  return v;
}

Vec gen_continuous_v(const Vec& u1, Rng& rng) {
  Vec v(u1.size());
  for (Eigen::Index i = 0; i < u1.size(); ++i)
    v[i] = 0.4 * std::fabs(u1[i]) - 0.1 + 0.2 * rng.normal();
  return v;
}

Vec gen_survival_times(const Vec& lp, Rng& rng) {
  if (!lp.allFinite()) throw std::invalid_argument("gen_survival_times: non-finite lp");
  Vec t(lp.size());
  for (Eigen::Index i = 0; i < lp.size(); ++i)
    t[i] = -std::log(rng.uniform_pos()) / std::exp(lp[i]);
  return t;
}

Vec gen_nonph_times(const Vec& lp_full, const Vec& lp_late, double change_point,
                    Rng& rng) {
  if (lp_full.size() != lp_late.size())
    throw std::invalid_argument("gen_nonph_times: lp length mismatch");
  if (!(change_point > 0.0))
    throw std::invalid_argument("gen_nonph_times: change point must be positive");
  Vec t(lp_full.size());
  for (Eigen::Index i = 0; i < lp_full.size(); ++i) {
    const double e = -std::log(rng.uniform_pos());
    const double h1 = std::exp(lp_full[i]);
    const double h2 = std::exp(lp_late[i]);
    if (h1 == h2 || e <= change_point * h1)
      t[i] = e / h1;
    else
      t[i] = change_point + (e - change_point * h1) / h2;
  }
  return t;
}

std::vector<int> apply_missingness(const Mat& v, const Vec& u1, double r,
                                   Mechanism mechanism, Rng& rng, int* clamped) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("apply_missingness: r in (0,1)");
  const int n = static_cast<int>(u1.size());
  const double q = norm_quantile(r / 3.0);
  const double tail = norm_cdf(-q);  // P(U1 > q)
  std::vector<int> missing(n, 0);
  int clamp_count = 0;
  for (int i = 0; i < n; ++i) {
    double prob;
    switch (mechanism) {
      case Mechanism::MCAR:
        prob = 1.0 - r;
        break;
      case Mechanism::MAR:
        prob = u1[i] > q ? (1.0 - r) / tail : 0.0;
        break;
      case Mechanism::MARViolation: {
        const double v1 = v(i, 0);
        if (u1[i] > q)
          prob = (1.0 - r - 0.1 * (v1 <= 0.0 ? 1.0 : 0.0)) / tail +
                 0.1 * (v1 > 0.0 ? 1.0 : 0.0);
        else
          prob = 0.1;
        break;
      }
    }
    if (prob < 0.0 || prob > 1.0) {
      prob = std::clamp(prob, 0.0, 1.0);
      ++clamp_count;
    }
    missing[i] = rng.bernoulli(prob) ? 1 : 0;
  }
  if (clamped) *clamped = clamp_count;
  return missing;
}

namespace {

// Training-set draw before missingness; also used for calibration draws.
struct CompleteDraw {
  Mat u;
  Mat v;
  Vec time;  // uncensored survival times
};

Vec scenario_v_column(const ScenarioSpec& spec, VKind kind, const Vec& u1, Rng& rng) {
  if (kind == VKind::Binary) {
    if (spec.v_independent) {
      Vec v(u1.size());
      for (Eigen::Index i = 0; i < u1.size(); ++i) v[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
      return v;
    }
    return gen_binary_v(u1, rng);
  }
  return gen_continuous_v(u1, rng);
}

std::vector<VKind> scenario_v_kinds(const ScenarioSpec& spec) {
  switch (spec.v_kind) {
    case VMode::Binary: return {VKind::Binary};
    case VMode::Continuous: return {VKind::Continuous};
    case VMode::Pair: return {VKind::Binary, VKind::Continuous};
  }
  return {};
}

CompleteDraw draw_population(const ScenarioSpec& spec, int n, Rng& rng,
                             std::optional<double> change_point) {
  CompleteDraw out;
  out.u = gen_covariates(n, spec.p, rng);
  const auto kinds = scenario_v_kinds(spec);
  out.v.resize(n, spec.d());
  for (int c = 0; c < spec.d(); ++c)
    out.v.col(c) = scenario_v_column(spec, kinds[c], out.u.col(0), rng);

  const Vec bu = spec.beta_u();
  const Vec bv = spec.beta_v_vec();
  const Vec lp = out.u * bu + out.v * bv;
  if (spec.ph_violation) {
    const Vec lp_late = spec.ph_attenuation * (out.u * bu) + out.v * bv;
    out.time = gen_nonph_times(lp, lp_late, *change_point, rng);
  } else {
    out.time = gen_survival_times(lp, rng);
  }
  return out;
}

std::string scenario_cache_key(const ScenarioSpec& spec, double target) {
  std::ostringstream key;
  key << spec.p << '|' << coef_scenario_name(spec.coefficient_scenario) << '|'
      << v_mode_name(spec.v_kind) << '|' << spec.beta_v << '|' << spec.v_independent
      << '|' << spec.ph_violation << '|' << spec.ph_attenuation << '|' << target;
  return key.str();
}

std::mutex cache_mutex;
std::map<std::string, double> c0_cache;
std::map<std::string, double> change_point_cache;

double nonph_change_point_impl(const ScenarioSpec& spec) {
  // Median observed event time of the PH version, under calibrated censoring.
  ScenarioSpec ph = spec;
  ph.ph_violation = false;
  const double c0 = calibrate_censoring_rate(ph, ph.censor_rate);
  Rng rng(0xC0FFEEull);  // fixed internal stream: cached value is scenario-determined
  const int n = 50000;
  const CompleteDraw draw = draw_population(ph, n, rng, std::nullopt);
  std::vector<double> event_times;
  for (int i = 0; i < n; ++i) {
    const double c = rng.exponential(c0);
    if (draw.time[i] <= c) event_times.push_back(draw.time[i]);
  }
  if (event_times.empty())
    throw std::runtime_error("nonph_change_point: no events at calibration scale");
  const size_t mid = event_times.size() / 2;
  std::nth_element(event_times.begin(), event_times.begin() + mid, event_times.end());
  return event_times[mid];
}

}  // namespace

double nonph_change_point(const ScenarioSpec& spec) {
  const std::string key = scenario_cache_key(spec, -1.0);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = change_point_cache.find(key);
    if (it != change_point_cache.end()) return it->second;
  }
  const double t0 = nonph_change_point_impl(spec);
  std::lock_guard<std::mutex> lock(cache_mutex);
  change_point_cache.emplace(key, t0);
  return t0;
}

double calibrate_rate(const Vec& survival_times, double target, std::uint64_t seed) {
  if (!(target > 0.0 && target < 1.0))
    throw std::invalid_argument("calibrate_rate: target in (0,1)");
  const int n = static_cast<int>(survival_times.size());
  Rng rng(seed);
  Vec cens_unit(n);
  for (int i = 0; i < n; ++i) cens_unit[i] = rng.exponential(1.0);

  // P(C < T) with C = E/c0 is monotone increasing in c0 under common draws.
  auto censored_fraction = [&](double c0) {
    int k = 0;
    for (int i = 0; i < n; ++i) k += (cens_unit[i] / c0 < survival_times[i]);
    return static_cast<double>(k) / n;
  };

  double lo = 1e-8, hi = 1.0;
  int widen = 0;
  while (censored_fraction(hi) < target) {
    hi *= 10.0;
    if (++widen > 12)
      throw std::runtime_error("calibrate_rate: cannot bracket target");
  }
  double c0 = hi;
  for (int iter = 0; iter < 200; ++iter) {
    c0 = 0.5 * (lo + hi);
    const double f = censored_fraction(c0);
    if (std::fabs(f - target) <= 0.005) break;
    (f < target ? lo : hi) = c0;
    if (hi - lo < 1e-12) break;
  }
  return c0;
}

double calibrate_censoring_rate(const ScenarioSpec& spec, double target, int n_draws) {
  if (!(target > 0.0 && target < 1.0))
    throw std::invalid_argument("calibrate_censoring_rate: target in (0,1)");
  const std::string key = scenario_cache_key(spec, target);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = c0_cache.find(key);
    if (it != c0_cache.end()) return it->second;
  }

  std::optional<double> change_point;
  if (spec.ph_violation) change_point = nonph_change_point(spec);

  Rng rng(0xCA11B8ull);  // fixed internal stream, common random numbers
  const CompleteDraw draw = draw_population(spec, n_draws, rng, change_point);
  const double c0 = calibrate_rate(draw.time, target, rng.fork("cens").next_u64());

  std::lock_guard<std::mutex> lock(cache_mutex);
  c0_cache.emplace(key, c0);
  return c0;
}

GeneratedData generate(const ScenarioSpec& spec, int rep_index) {
  spec.validate();
  std::optional<double> change_point;
  if (spec.ph_violation) change_point = nonph_change_point(spec);
  const double c0 = calibrate_censoring_rate(spec, spec.censor_rate);

  Rng rep_rng = Rng(spec.seed).fork(static_cast<std::uint64_t>(rep_index));
  GeneratedData out;
  out.true_beta_u = spec.beta_u();
  out.true_beta_v = spec.beta_v_vec();
  out.truth_mask.resize(spec.p + spec.d());
  for (int j = 0; j < spec.p; ++j) out.truth_mask[j] = out.true_beta_u[j] != 0.0;
  for (int c = 0; c < spec.d(); ++c) out.truth_mask[spec.p + c] = out.true_beta_v[c] != 0.0;

  const auto kinds = scenario_v_kinds(spec);

  // Training data with censoring and missingness.
  {
    Rng rng = rep_rng.fork("train");
    CompleteDraw draw = draw_population(spec, spec.n, rng, change_point);
    Vec time(spec.n);
    std::vector<int> event(spec.n);
    for (int i = 0; i < spec.n; ++i) {
      const double c = rng.exponential(c0);
      event[i] = draw.time[i] <= c ? 1 : 0;
      time[i] = std::min(draw.time[i], c);
    }
    const auto missing =
        apply_missingness(draw.v, draw.u.col(0), spec.r, spec.mechanism, rng);
    out.v_true = draw.v;
    out.train.u = std::move(draw.u);
    out.train.v = draw.v;
    out.train.v_observed.resize(spec.n);
    int n_missing = 0;
    for (int i = 0; i < spec.n; ++i) {
      out.train.v_observed[i] = missing[i] ? 0 : 1;
      if (missing[i]) {
        out.train.v.row(i).setZero();  // masked cells carry no information
        ++n_missing;
      }
    }
    out.train.v_kinds = kinds;
    out.train.time = std::move(time);
    out.train.event = std::move(event);
    out.realized_missing_rate = static_cast<double>(n_missing) / spec.n;
  }

  // Independent fully observed test set of size n'.
  {
    Rng rng = rep_rng.fork("test");
    const int m = spec.n_test();
    CompleteDraw draw = draw_population(spec, m, rng, change_point);
    Vec time(m);
    std::vector<int> event(m);
    for (int i = 0; i < m; ++i) {
      const double c = rng.exponential(c0);
      event[i] = draw.time[i] <= c ? 1 : 0;
      time[i] = std::min(draw.time[i], c);
    }
    out.test.u = std::move(draw.u);
    out.test.v = std::move(draw.v);
    out.test.v_observed.assign(m, 1);
    out.test.v_kinds = kinds;
    out.test.time = std::move(time);
    out.test.event = std::move(event);
  }
  return out;
}

FittedMethod oracle_method(const GeneratedData& gen) {
  FittedMethod out;
  out.method = Method::Oracle;
  out.beta_u = gen.true_beta_u;
  out.beta_v = gen.true_beta_v;
  out.selected_mask = gen.truth_mask;
  const Vec lp = gen.train.u * out.beta_u + gen.v_true * out.beta_v;
  out.baseline = breslow_baseline(
      Dataset(gen.train.time, gen.train.event, Mat::Zero(gen.train.n(), 0)), lp);
  return out;
}

ReplicationResult run_replication(const ScenarioSpec& spec, int rep_index) {
  const GeneratedData gen = generate(spec, rep_index);
  const Dataset test_outcomes(gen.test.time, gen.test.event,
                              Mat::Zero(gen.test.n(), 0));
  const std::uint64_t method_seed =
      Rng(spec.seed).fork(static_cast<std::uint64_t>(rep_index)).fork("methods").next_u64();

  ReplicationResult result;
  result.rep_index = rep_index;
  for (Method m : spec.method_set) {
    MethodOutcome outcome;
    outcome.method = m;
    try {
      const FittedMethod fit =
          m == Method::Oracle
              ? oracle_method(gen)
              : fit_method(m, gen.train, spec.domain_knowledge, spec.method_config,
                           method_seed);
      const Vec lp = fit.linear_predictors(gen.test.u, gen.test.v);

      try {
        outcome.report.c_index = c_index(test_outcomes, lp);
      } catch (const std::exception&) {
      }
      try {
        outcome.report.calibration_slope = calibration_slope(test_outcomes, lp);
      } catch (const std::exception&) {
      }
      try {
        outcome.report.ibs = integrated_brier_score(
            test_outcomes,
            [&](double t, int i) {
              return fit.baseline.survival(t, lp[i]);
            });
      } catch (const std::exception&) {
      }
      outcome.report.mcc = mcc(select_variables(fit), gen.truth_mask);
    } catch (const std::exception& e) {
      outcome.failed = true;
      outcome.failure = e.what();
    }
    result.outcomes.push_back(std::move(outcome));
  }
  return result;
}

const MethodSummary& ScenarioResult::summary(Method m) const {
  for (const auto& s : summaries)
    if (s.method == m) return s;
  throw std::invalid_argument("scenario result: method not present");
}

ScenarioResult run_scenario(const ScenarioSpec& spec, int jobs) {
  spec.validate();
  // Resolve the cached scenario constants before spawning workers.
  if (spec.ph_violation) nonph_change_point(spec);
  calibrate_censoring_rate(spec, spec.censor_rate);

  ScenarioResult result;
  result.spec = spec;
  result.replications.resize(spec.replications);

  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int n_threads = std::max(1, std::min(jobs > 0 ? jobs : (hw > 0 ? hw : 1),
                                             spec.replications));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= spec.replications) return;
      // Replication seeds run seed+1 .. seed+replications.
      result.replications[rep] = run_replication(spec, rep + 1);
    }
  };
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Fixed-order aggregation.
  for (size_t mi = 0; mi < spec.method_set.size(); ++mi) {
    MethodSummary s;
    s.method = spec.method_set[mi];
    auto accumulate = [&](auto getter, MetricSummary& cell) {
      std::vector<double> values;
      for (const auto& rep : result.replications) {
        const MethodOutcome& o = rep.outcomes[mi];
        if (o.failed) continue;
        const auto v = getter(o.report);
        if (v && std::isfinite(*v)) values.push_back(*v);
      }
      cell.count = static_cast<int>(values.size());
      if (values.empty()) return;
      double sum = 0.0;
      for (double v : values) sum += v;
      cell.mean = sum / values.size();
      double ss = 0.0;
      for (double v : values) ss += (v - cell.mean) * (v - cell.mean);
      cell.sd = values.size() > 1 ? std::sqrt(ss / (values.size() - 1)) : 0.0;
    };
    accumulate([](const MetricReport& r) { return r.c_index; }, s.c_index);
    accumulate([](const MetricReport& r) { return r.calibration_slope; },
               s.calibration_slope);
    accumulate([](const MetricReport& r) { return r.ibs; }, s.ibs);
    accumulate([](const MetricReport& r) { return r.mcc; }, s.mcc);
    for (const auto& rep : result.replications) s.failures += rep.outcomes[mi].failed;
    result.summaries.push_back(std::move(s));
  }
  return result;
}

}  // namespace tpsurv
