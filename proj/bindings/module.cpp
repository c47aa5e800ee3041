#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tpsurv/config.hpp"
#include "tpsurv/csv.hpp"
#include "tpsurv/km.hpp"
#include "tpsurv/metrics.hpp"
#include "tpsurv/methods.hpp"
#include "tpsurv/simulation.hpp"
#include "tpsurv/tuning.hpp"

namespace py = pybind11;
using namespace tpsurv;

namespace {

Dataset make_dataset(const Vec& time, const std::vector<int>& event, const Mat& x,
                     const std::vector<std::string>& names) {
  return Dataset(time, event, x, names);
}

MetricReport replication_report(const MethodOutcome& o) { return o.report; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "two-phase survival modeling toolkit (C++ core)";
  m.attr("__version__") = TPSURV_VERSION;

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("time"), py::arg("event"),
           py::arg("covariates"),
           py::arg("column_names") = std::vector<std::string>{})
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("n_events", &Dataset::n_events)
      .def_property_readonly("time", &Dataset::time)
      .def_property_readonly("event", &Dataset::event)
      .def_property_readonly("covariates", &Dataset::covariates)
      .def_property_readonly("column_names", &Dataset::column_names);

  py::class_<TwoPhaseDataset>(m, "TwoPhaseDataset")
      .def(py::init([](const Mat& u, const Mat& v, const std::vector<int>& v_observed,
                       const std::vector<std::string>& v_kinds, const Vec& time,
                       const std::vector<int>& event) {
             TwoPhaseDataset d;
             d.u = u;
             d.v = v;
             d.v_observed = v_observed;
             for (const auto& k : v_kinds)
               d.v_kinds.push_back(k == "binary" ? VKind::Binary : VKind::Continuous);
             d.time = time;
             d.event = event;
             d.validate();
             return d;
           }),
           py::arg("u"), py::arg("v"), py::arg("v_observed"), py::arg("v_kinds"),
           py::arg("time"), py::arg("event"))
      .def_property_readonly("n", &TwoPhaseDataset::n)
      .def_property_readonly("n_complete", &TwoPhaseDataset::n_complete)
      .def_readonly("u", &TwoPhaseDataset::u)
      .def_readonly("v", &TwoPhaseDataset::v)
      .def_readonly("v_observed", &TwoPhaseDataset::v_observed)
      .def_readonly("time", &TwoPhaseDataset::time)
      .def_readonly("event", &TwoPhaseDataset::event);

  py::class_<KaplanMeierCurve>(m, "KaplanMeierCurve")
      .def_readonly("times", &KaplanMeierCurve::times)
      .def_readonly("survival", &KaplanMeierCurve::survival)
      .def_readonly("at_risk", &KaplanMeierCurve::at_risk)
      .def_readonly("n_events", &KaplanMeierCurve::n_events)
      .def("at", &KaplanMeierCurve::at)
      .def("confidence_interval", &KaplanMeierCurve::confidence_interval,
           py::arg("i"), py::arg("level") = 0.95);

  py::class_<BreslowBaseline>(m, "BreslowBaseline")
      .def_readonly("times", &BreslowBaseline::times)
      .def_readonly("cumulative_hazard", &BreslowBaseline::cumulative_hazard)
      .def("cumhaz", &BreslowBaseline::cumhaz)
      .def("survival", &BreslowBaseline::survival);

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("max_outer_iterations", &FitConfig::max_outer_iterations)
      .def_readwrite("max_cd_passes", &FitConfig::max_cd_passes)
      .def_readwrite("convergence_tol", &FitConfig::convergence_tol)
      .def_readwrite("standardize", &FitConfig::standardize);

  py::class_<CoxFit>(m, "CoxFit")
      .def_readonly("coefficients", &CoxFit::coefficients)
      .def_readonly("log_partial_likelihood", &CoxFit::log_partial_likelihood)
      .def_readonly("baseline", &CoxFit::baseline)
      .def_readonly("converged", &CoxFit::converged)
      .def_readonly("n_iterations", &CoxFit::n_iterations)
      .def_readonly("diagnostic", &CoxFit::diagnostic);

  py::class_<PenaltySpec>(m, "PenaltySpec")
      .def(py::init<>())
      .def_readwrite("lambda_", &PenaltySpec::lambda)
      .def_readwrite("alpha", &PenaltySpec::alpha)
      .def_readwrite("penalty_factors", &PenaltySpec::penalty_factors)
      .def_readwrite("adaptive_weights", &PenaltySpec::adaptive_weights);

  py::class_<CvPoint>(m, "CvPoint")
      .def_readonly("delta", &CvPoint::delta)
      .def_readonly("lambda_", &CvPoint::lambda)
      .def_readonly("mean_deviance", &CvPoint::mean_deviance)
      .def_readonly("se_deviance", &CvPoint::se_deviance);

  py::class_<CvResult>(m, "CvResult")
      .def_readonly("grid", &CvResult::grid)
      .def_readonly("selected", &CvResult::selected)
      .def_property_readonly("selected_point", &CvResult::selected_point);

  py::class_<DomainKnowledge>(m, "DomainKnowledge")
      .def(py::init<>())
      .def_readwrite("retained_u_indices", &DomainKnowledge::retained_u_indices)
      .def_readwrite("force_v", &DomainKnowledge::force_v)
      .def_readwrite("v_included", &DomainKnowledge::v_included)
      .def_readwrite("pi_only", &DomainKnowledge::pi_only)
      .def_readwrite("apply_to_comparison_methods",
                     &DomainKnowledge::apply_to_comparison_methods);

  py::class_<MethodConfig>(m, "MethodConfig")
      .def(py::init<>())
      .def_readwrite("fit", &MethodConfig::fit)
      .def_readwrite("delta_grid", &MethodConfig::delta_grid)
      .def_readwrite("lambda_grid_size", &MethodConfig::lambda_grid_size)
      .def_readwrite("cv_folds", &MethodConfig::cv_folds)
      .def_readwrite("mi_imputations", &MethodConfig::mi_imputations)
      .def_readwrite("bartlett_sweeps", &MethodConfig::bartlett_sweeps);

  py::class_<FittedMethod>(m, "FittedMethod")
      .def_property_readonly("method",
                             [](const FittedMethod& f) { return method_name(f.method); })
      .def_readonly("beta_u", &FittedMethod::beta_u)
      .def_readonly("beta_v", &FittedMethod::beta_v)
      .def_readonly("theta0", &FittedMethod::theta0)
      .def_readonly("theta1", &FittedMethod::theta1)
      .def_readonly("lp_offset", &FittedMethod::lp_offset)
      .def_readonly("baseline", &FittedMethod::baseline)
      .def_readonly("selected_mask", &FittedMethod::selected_mask)
      .def("linear_predictors", &FittedMethod::linear_predictors)
      .def("survival", &FittedMethod::survival);

  // survival-core operations
  m.def("kaplan_meier", &kaplan_meier);
  m.def("censoring_km", &censoring_km);
  m.def("breslow_baseline", &breslow_baseline);
  m.def("log_rank_test", [](const std::vector<Dataset>& groups) {
    const auto r = log_rank_test(groups);
    return py::make_tuple(r.chi_square, r.p_value, r.df);
  });

  // cox-engine operations
  m.def("partial_loglik", &partial_loglik);
  m.def("partial_loglik_gradient", &partial_loglik_gradient);
  m.def("partial_loglik_hessian", &partial_loglik_hessian);
  m.def("fit_cox", &fit_cox, py::arg("data"), py::arg("config") = FitConfig{});
  m.def("fit_penalized_cox", &fit_penalized_cox, py::arg("data"), py::arg("penalty"),
        py::arg("config") = FitConfig{});
  m.def("adaptive_weights", &adaptive_weights, py::arg("data"),
        py::arg("penalized_indices"), py::arg("delta"), py::arg("config") = FitConfig{},
        py::arg("seed") = 1);
  m.def("cross_validate", &cross_validate, py::arg("data"), py::arg("delta_grid"),
        py::arg("lambda_grid_size"), py::arg("folds"), py::arg("penalty_factors"),
        py::arg("seed"), py::arg("config") = FitConfig{});

  // methods
  m.def("prognostic_index", &prognostic_index);
  m.def("fit_expert_guided", &fit_expert_guided, py::arg("data"), py::arg("dk"),
        py::arg("config") = MethodConfig{}, py::arg("seed") = 1);
  m.def("fit_cca", &fit_cca, py::arg("data"), py::arg("dk") = DomainKnowledge{},
        py::arg("config") = MethodConfig{}, py::arg("seed") = 1);
  m.def("fit_naive_imputation", &fit_naive_imputation, py::arg("data"),
        py::arg("dk") = DomainKnowledge{}, py::arg("config") = MethodConfig{},
        py::arg("seed") = 1);
  m.def("fit_mi_wood", &fit_mi_wood, py::arg("data"), py::arg("k_imputations") = 5,
        py::arg("dk") = DomainKnowledge{}, py::arg("config") = MethodConfig{},
        py::arg("seed") = 1);
  m.def("fit_mi_bartlett", &fit_mi_bartlett, py::arg("data"),
        py::arg("k_imputations") = 5, py::arg("dk") = DomainKnowledge{},
        py::arg("config") = MethodConfig{}, py::arg("seed") = 1);
  m.def("select_variables", &select_variables);

  // metrics
  m.def("c_index", &c_index);
  m.def("calibration_slope", &calibration_slope);
  m.def("brier_score", &brier_score);
  m.def("integrated_brier_score", &integrated_brier_score, py::arg("test"),
        py::arg("survival"), py::arg("tau") = std::nullopt);
  m.def("mcc", &mcc);
  m.def("risk_stratify", &risk_stratify);

  // simulation
  py::class_<ScenarioSpec>(m, "ScenarioSpec")
      .def(py::init<>())
      .def_readwrite("name", &ScenarioSpec::name)
      .def_readwrite("n", &ScenarioSpec::n)
      .def_readwrite("p", &ScenarioSpec::p)
      .def_readwrite("r", &ScenarioSpec::r)
      .def_property(
          "scenario",
          [](const ScenarioSpec& s) { return coef_scenario_name(s.coefficient_scenario); },
          [](ScenarioSpec& s, const std::string& name) {
            const auto v = coef_scenario_from_name(name);
            if (!v) throw std::invalid_argument("unknown scenario: " + name);
            s.coefficient_scenario = *v;
          })
      .def_property(
          "mechanism",
          [](const ScenarioSpec& s) { return mechanism_name(s.mechanism); },
          [](ScenarioSpec& s, const std::string& name) {
            const auto v = mechanism_from_name(name);
            if (!v) throw std::invalid_argument("unknown mechanism: " + name);
            s.mechanism = *v;
          })
      .def_property(
          "v_kind", [](const ScenarioSpec& s) { return v_mode_name(s.v_kind); },
          [](ScenarioSpec& s, const std::string& name) {
            const auto v = v_mode_from_name(name);
            if (!v) throw std::invalid_argument("unknown v kind: " + name);
            s.v_kind = *v;
          })
      .def_property(
          "methods",
          [](const ScenarioSpec& s) {
            std::vector<std::string> names;
            for (Method mth : s.method_set) names.push_back(method_name(mth));
            return names;
          },
          [](ScenarioSpec& s, const std::vector<std::string>& names) {
            s.method_set.clear();
            for (const auto& name : names) {
              const auto mth = method_from_name(name);
              if (!mth) throw std::invalid_argument("unknown method: " + name);
              s.method_set.push_back(*mth);
            }
          })
      .def_readwrite("censor_rate", &ScenarioSpec::censor_rate)
      .def_readwrite("ph_violation", &ScenarioSpec::ph_violation)
      .def_readwrite("replications", &ScenarioSpec::replications)
      .def_readwrite("seed", &ScenarioSpec::seed)
      .def_readwrite("domain_knowledge", &ScenarioSpec::domain_knowledge)
      .def_readwrite("method_config", &ScenarioSpec::method_config)
      .def_readwrite("beta_v", &ScenarioSpec::beta_v)
      .def_readwrite("v_independent", &ScenarioSpec::v_independent)
      .def_property_readonly("beta_u", &ScenarioSpec::beta_u);

  py::class_<GeneratedData>(m, "GeneratedData")
      .def_readonly("train", &GeneratedData::train)
      .def_readonly("test", &GeneratedData::test)
      .def_readonly("v_true", &GeneratedData::v_true)
      .def_readonly("true_beta_u", &GeneratedData::true_beta_u)
      .def_readonly("true_beta_v", &GeneratedData::true_beta_v)
      .def_readonly("truth_mask", &GeneratedData::truth_mask)
      .def_readonly("realized_missing_rate", &GeneratedData::realized_missing_rate);

  py::class_<MetricReport>(m, "MetricReport")
      .def_readonly("c_index", &MetricReport::c_index)
      .def_readonly("calibration_slope", &MetricReport::calibration_slope)
      .def_readonly("ibs", &MetricReport::ibs)
      .def_readonly("mcc", &MetricReport::mcc);

  py::class_<MethodOutcome>(m, "MethodOutcome")
      .def_property_readonly("method",
                             [](const MethodOutcome& o) { return method_name(o.method); })
      .def_readonly("failed", &MethodOutcome::failed)
      .def_readonly("failure", &MethodOutcome::failure)
      .def_property_readonly("report", &replication_report);

  py::class_<ReplicationResult>(m, "ReplicationResult")
      .def_readonly("rep_index", &ReplicationResult::rep_index)
      .def_readonly("outcomes", &ReplicationResult::outcomes);

  py::class_<MetricSummary>(m, "MetricSummary")
      .def_readonly("mean", &MetricSummary::mean)
      .def_readonly("sd", &MetricSummary::sd)
      .def_readonly("count", &MetricSummary::count);

  py::class_<MethodSummary>(m, "MethodSummary")
      .def_property_readonly("method",
                             [](const MethodSummary& s) { return method_name(s.method); })
      .def_readonly("c_index", &MethodSummary::c_index)
      .def_readonly("calibration_slope", &MethodSummary::calibration_slope)
      .def_readonly("ibs", &MethodSummary::ibs)
      .def_readonly("mcc", &MethodSummary::mcc)
      .def_readonly("failures", &MethodSummary::failures);

  py::class_<ScenarioResult>(m, "ScenarioResult")
      .def_readonly("summaries", &ScenarioResult::summaries)
      .def_readonly("replications", &ScenarioResult::replications);

  m.def("generate", &generate);
  m.def("run_replication", &run_replication);
  m.def("run_scenario", &run_scenario, py::arg("spec"), py::arg("jobs") = 0,
        py::call_guard<py::gil_scoped_release>());

  // csv / config plumbing
  m.def("read_dataset_csv", &read_dataset_csv);
  m.def("read_two_phase_csv", &read_two_phase_csv);
  m.def("write_two_phase_csv", &write_two_phase_csv);
  m.def("parse_scenario_config", &parse_scenario_config);
}
