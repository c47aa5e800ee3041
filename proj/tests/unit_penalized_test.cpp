#include <cmath>

#include "doctest.h"
#include "test_support.hpp"
#include "tpsurv/penalized.hpp"

using namespace tpsurv;

TEST_CASE("fit_penalized_cox: lambda = 0 recovers the unpenalized fit") {
  Rng rng(71);
  const Dataset data = testing::random_instance(rng, 70, 4, false, 0.6);
  const CoxFit mle = fit_cox(data);
  REQUIRE(mle.converged);
  PenaltySpec spec;
  spec.lambda = 0.0;
  const CoxFit pen = fit_penalized_cox(data, spec);
  CHECK((pen.coefficients - mle.coefficients).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("fit_penalized_cox: zero penalty factors ignore lambda entirely") {
  Rng rng(72);
  const Dataset data = testing::random_instance(rng, 50, 3, false, 0.6);
  const CoxFit mle = fit_cox(data);
  PenaltySpec spec;
  spec.lambda = 5.0;
  spec.penalty_factors = Vec::Zero(3);
  const CoxFit pen = fit_penalized_cox(data, spec);
  CHECK((pen.coefficients - mle.coefficients).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("fit_penalized_cox: lambda >= lambda_max yields an all-zero fit") {
  Rng rng(73);
  const Dataset data = testing::random_instance(rng, 60, 5, false, 0.6);
  PenaltySpec spec;
  const double lmax = lambda_max(data, spec);
  spec.lambda = lmax;
  const CoxFit at_top = fit_penalized_cox(data, spec);
  CHECK(at_top.coefficients.cwiseAbs().maxCoeff() == 0.0);
  spec.lambda = 2.0 * lmax;
  CHECK(fit_penalized_cox(data, spec).coefficients.cwiseAbs().maxCoeff() == 0.0);
  // Just below the top of the path something must move.
  spec.lambda = 0.8 * lmax;
  CHECK(fit_penalized_cox(data, spec).coefficients.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("fit_penalized_cox: unpenalized coordinate survives the whole path") {
  Rng rng(74);
  // Strong effect on coordinate 0 so the unpenalized MLE keeps it nonzero.
  const int n = 80;
  Vec time(n);
  std::vector<int> event(n, 1);
  Mat x(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
  for (int i = 0; i < n; ++i) time[i] = rng.exponential(std::exp(1.2 * x(i, 0)));
  const Dataset data(time, event, x);

  PenaltySpec spec;
  spec.penalty_factors = Vec::Ones(3);
  spec.penalty_factors[0] = 0.0;
  const double lmax = lambda_max(data, spec);
  for (double lam : lambda_path(lmax, 12)) {
    spec.lambda = lam;
    const CoxFit fit = fit_penalized_cox(data, spec);
    CHECK(fit.coefficients[0] != 0.0);
  }
}

TEST_CASE("fit_penalized_cox: objective trace is non-increasing") {
  Rng rng(75);
  const Dataset data = testing::random_instance(rng, 60, 6, true, 0.5);
  PenaltySpec spec;
  spec.lambda = 0.05;
  const CoxFit fit = fit_penalized_cox(data, spec);
  REQUIRE(fit.objective_trace.size() >= 1);
  for (size_t i = 1; i < fit.objective_trace.size(); ++i)
    CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1] + 1e-9);
}

TEST_CASE("fit_penalized_cox: matches 2-d brute force on the penalized objective") {
  Rng rng(76);
  const Dataset data = testing::random_instance(rng, 30, 2, false, 0.8);
  PenaltySpec spec;
  spec.lambda = 0.08;
  spec.alpha = 1.0;
  FitConfig config;
  config.standardize = false;  // grid oracle works on the raw scale
  const CoxFit fit = fit_penalized_cox(data, spec, config);

  const int n = data.n();
  auto objective = [&](double b0, double b1) {
    Vec beta(2);
    beta << b0, b1;
    return -partial_loglik(data, beta) / n +
           spec.lambda * (std::fabs(b0) + std::fabs(b1));
  };
  double best0 = 0, best1 = 0, best = 1e300;
  for (double b0 = -2.0; b0 <= 2.0; b0 += 4e-3)
    for (double b1 = -2.0; b1 <= 2.0; b1 += 4e-3) {
      const double f = objective(b0, b1);
      if (f < best) {
        best = f;
        best0 = b0;
        best1 = b1;
      }
    }
  CHECK(std::fabs(fit.coefficients[0] - best0) < 5e-3);
  CHECK(std::fabs(fit.coefficients[1] - best1) < 5e-3);
  CHECK(objective(fit.coefficients[0], fit.coefficients[1]) <= best + 1e-9);
}

TEST_CASE("fit_penalized_cox: standardized fits are column-scaling equivariant") {
  Rng rng(77);
  const Dataset data = testing::random_instance(rng, 70, 3, false, 0.6);
  PenaltySpec spec;
  spec.lambda = 0.03;
  const CoxFit fit = fit_penalized_cox(data, spec);

  Mat x2 = data.covariates();
  x2.col(1) *= 5.0;
  const CoxFit scaled = fit_penalized_cox(data.with_covariates(x2), spec);
  CHECK(scaled.coefficients[1] == doctest::Approx(fit.coefficients[1] / 5.0).epsilon(1e-5));
  CHECK(scaled.coefficients[0] == doctest::Approx(fit.coefficients[0]).epsilon(1e-5));
}

TEST_CASE("fit_penalized_cox: shifting a column leaves the fit unchanged") {
  Rng rng(78);
  const Dataset data = testing::random_instance(rng, 50, 3, false, 0.7);
  PenaltySpec spec;
  spec.lambda = 0.02;
  const CoxFit fit = fit_penalized_cox(data, spec);
  Mat x2 = data.covariates();
  x2.col(2).array() += 100.0;
  const CoxFit shifted = fit_penalized_cox(data.with_covariates(x2), spec);
  CHECK((shifted.coefficients - fit.coefficients).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("penalty spec validation") {
  PenaltySpec spec;
  spec.lambda = -1.0;
  CHECK_THROWS_AS(spec.validate(3), std::invalid_argument);
  spec.lambda = 0.0;
  spec.alpha = 1.5;
  CHECK_THROWS_AS(spec.validate(3), std::invalid_argument);
  spec.alpha = 0.5;
  spec.penalty_factors = Vec::Ones(2);
  CHECK_THROWS_AS(spec.validate(3), std::invalid_argument);
}
