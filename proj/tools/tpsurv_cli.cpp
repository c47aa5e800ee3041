// tpsurv command-line front end: simulation harness, external-CSV fitting,
// and plot-data export. Exit codes: 0 success, 1 numerical/degenerate fit,
// 2 usage or validation error.

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tpsurv/config.hpp"
#include "tpsurv/csv.hpp"
#include "tpsurv/km.hpp"
#include "tpsurv/metrics.hpp"
#include "tpsurv/methods.hpp"
#include "tpsurv/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tpsurv;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_manifest(const fs::path& dir, const json& extra) {
  json manifest = extra;
  manifest["version"] = TPSURV_VERSION;
  manifest["timestamp"] = timestamp_now();
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    while (!item.empty() && item.back() == ' ') item.pop_back();
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Vec elems(const Vec& v, const std::vector<int>& idx) {
  Vec out(static_cast<Eigen::Index>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) out[k] = v[idx[k]];
  return out;
}

std::vector<int> events(const TwoPhaseDataset& d, const std::vector<int>& idx) {
  std::vector<int> out(idx.size());
  for (size_t k = 0; k < idx.size(); ++k) out[k] = d.event[idx[k]];
  return out;
}

json spec_to_json(const ScenarioSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["n"] = spec.n;
  j["p"] = spec.p;
  j["r"] = spec.r;
  j["scenario"] = coef_scenario_name(spec.coefficient_scenario);
  j["v_kind"] = v_mode_name(spec.v_kind);
  j["mechanism"] = mechanism_name(spec.mechanism);
  j["censor_rate"] = spec.censor_rate;
  j["ph_violation"] = spec.ph_violation;
  j["replications"] = spec.replications;
  j["seed"] = spec.seed;
  j["beta_v"] = spec.beta_v;
  j["v_independent"] = spec.v_independent;
  std::vector<std::string> methods;
  for (Method m : spec.method_set) methods.push_back(method_name(m));
  j["methods"] = methods;
  std::vector<int> retain;
  for (int idx : spec.domain_knowledge.retained_u_indices) retain.push_back(idx + 1);
  j["retain"] = retain;
  return j;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const std::string& config_path, std::optional<long long> seed,
                 std::optional<int> replications, int jobs, const std::string& out_dir) {
  std::vector<ScenarioSpec> cells;
  try {
    cells = parse_scenario_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << " (key: " << e.key << ")\n";
    return kExitUsage;
  }
  for (auto& spec : cells) {
    if (seed) spec.seed = static_cast<std::uint64_t>(*seed);
    if (replications) spec.replications = *replications;
    try {
      spec.validate();
    } catch (const std::exception& e) {
      std::cerr << "config error: cell `" << spec.name << "`: " << e.what() << '\n';
      return kExitUsage;
    }
  }

  fs::create_directories(out_dir);
  std::vector<ScenarioResult> results;
  int total_failures = 0;
  for (const auto& spec : cells) {
    std::cout << "running cell `" << spec.name << "` (" << spec.replications
              << " replications, " << spec.method_set.size() << " methods)\n";
    results.push_back(run_scenario(spec, jobs));
    for (const auto& s : results.back().summaries) total_failures += s.failures;
  }

  const fs::path dir(out_dir);
  write_results_csv((dir / "results.csv").string(), results);
  write_raw_csv((dir / "raw.csv").string(), results);

  json manifest;
  manifest["command"] = "simulate";
  manifest["config"] = config_path;
  manifest["jobs"] = jobs;
  manifest["output"] = {"results.csv", "raw.csv"};
  for (const auto& spec : cells) manifest["cells"].push_back(spec_to_json(spec));
  write_manifest(dir, manifest);

  if (total_failures > 0)
    std::cout << "warning: " << total_failures
              << " method-replication failures were excluded from the summaries "
                 "(see raw.csv)\n";
  std::cout << "wrote " << (dir / "results.csv").string() << '\n';
  return kExitSuccess;
}

// ---------------------------------------------------------------------------
// fit

struct FitOutputs {
  FittedMethod fit;
  Vec lp_complete;          // full linear predictor on the complete rows
  Vec pi_complete;          // stage-I index for EG, lp otherwise
  std::vector<int> complete_rows;
};

FitOutputs run_fit(const TwoPhaseDataset& data, Method method, const DomainKnowledge& dk,
                   const MethodConfig& config, std::uint64_t seed) {
  FitOutputs out;
  out.fit = fit_method(method, data, dk, config, seed);
  out.complete_rows = data.complete_rows();
  const int m = static_cast<int>(out.complete_rows.size());
  out.lp_complete.resize(m);
  out.pi_complete.resize(m);
  for (int k = 0; k < m; ++k) {
    const int i = out.complete_rows[k];
    out.lp_complete[k] = out.fit.linear_predictor(data.u.row(i).transpose(),
                                                  data.v.row(i).transpose());
    out.pi_complete[k] =
        out.fit.method == Method::ExpertGuided
            ? prognostic_index(*out.fit.stage1, data.u.row(i))[0]
            : out.lp_complete[k];
  }
  return out;
}

void write_coefficients(const fs::path& dir, const TwoPhaseDataset& data,
                        const FittedMethod& fit) {
  std::ofstream out(dir / "coefficients.csv");
  out << "term,estimate,selected\n";
  for (int j = 0; j < data.p(); ++j)
    out << data.u_names[j] << ',' << format_double(fit.beta_u[j]) << ','
        << (fit.selected_mask[j] ? 1 : 0) << '\n';
  for (int c = 0; c < data.d(); ++c)
    out << data.v_names[c] << ',' << format_double(fit.beta_v[c]) << ','
        << (fit.selected_mask[data.p() + c] ? 1 : 0) << '\n';
  if (fit.method == Method::ExpertGuided) {
    std::ofstream rec(dir / "recalibration.csv");
    rec << "term,estimate\n";
    rec << "theta0," << format_double(fit.theta0) << '\n';
    for (int c = 0; c < data.d(); ++c)
      rec << "theta1_" << data.v_names[c] << ',' << format_double(fit.theta1[c]) << '\n';
    rec << "lp_offset," << format_double(fit.lp_offset) << '\n';
  }
}

void write_pi(const fs::path& dir, const FitOutputs& outputs) {
  std::ofstream out(dir / "pi.csv");
  out << "row,prognostic_index,linear_predictor\n";
  for (size_t k = 0; k < outputs.complete_rows.size(); ++k)
    out << outputs.complete_rows[k] + 1 << ',' << format_double(outputs.pi_complete[k])
        << ',' << format_double(outputs.lp_complete[k]) << '\n';
}

// K-fold evaluation on the complete rows: each fold is a fully observed test
// set; the rest of the complete rows plus every incomplete row train.
int run_cv_eval(const fs::path& dir, const TwoPhaseDataset& data, Method method,
                const DomainKnowledge& dk, const MethodConfig& config,
                std::uint64_t seed, int folds) {
  const auto complete = data.complete_rows();
  const int m = static_cast<int>(complete.size());
  if (m < folds) {
    std::cerr << "cv-eval: fewer complete rows than folds\n";
    return kExitUsage;
  }
  Dataset complete_outcomes(elems(data.time, complete), events(data, complete),
                            Mat::Zero(m, 0));
  const auto labels = make_folds(complete_outcomes, folds,
                                 Rng(seed).fork("cv-eval").next_u64());

  std::ofstream out(dir / "cv_metrics.csv");
  out << "fold,c_index,calibration_slope,ibs\n";
  double sum_c = 0, sum_s = 0, sum_i = 0;
  int n_c = 0, n_s = 0, n_i = 0;
  for (int k = 0; k < folds; ++k) {
    TwoPhaseDataset train = data;
    std::vector<int> test_rows;
    for (int kk = 0; kk < m; ++kk)
      if (labels[kk] == k) {
        train.v_observed[complete[kk]] = 0;  // hold out of phase two
        test_rows.push_back(complete[kk]);
      }
    // Hold-out rows leave training entirely (their outcomes would leak).
    std::vector<int> keep;
    for (int i = 0; i < data.n(); ++i)
      if (std::find(test_rows.begin(), test_rows.end(), i) == test_rows.end())
        keep.push_back(i);
    TwoPhaseDataset fold_train;
    fold_train.u = Mat(static_cast<Eigen::Index>(keep.size()), data.p());
    fold_train.v = Mat(static_cast<Eigen::Index>(keep.size()), data.d());
    fold_train.time.resize(static_cast<Eigen::Index>(keep.size()));
    fold_train.v_kinds = data.v_kinds;
    fold_train.u_names = data.u_names;
    fold_train.v_names = data.v_names;
    for (size_t z = 0; z < keep.size(); ++z) {
      fold_train.u.row(z) = data.u.row(keep[z]);
      fold_train.v.row(z) = data.v.row(keep[z]);
      fold_train.time[z] = data.time[keep[z]];
      fold_train.event.push_back(data.event[keep[z]]);
      fold_train.v_observed.push_back(data.v_observed[keep[z]]);
    }

    try {
      const FittedMethod fit = fit_method(method, fold_train, dk, config,
                                          Rng(seed).fork(k + 1).next_u64());
      const int mt = static_cast<int>(test_rows.size());
      Vec lp(mt), time(mt);
      std::vector<int> event(mt);
      for (int z = 0; z < mt; ++z) {
        const int i = test_rows[z];
        lp[z] = fit.linear_predictor(data.u.row(i).transpose(), data.v.row(i).transpose());
        time[z] = data.time[i];
        event[z] = data.event[i];
      }
      const Dataset test(time, event, Mat::Zero(mt, 0));
      out << k + 1;
      try {
        const double c = c_index(test, lp);
        out << ',' << format_double(c);
        sum_c += c;
        ++n_c;
      } catch (const std::exception&) {
        out << ",NA";
      }
      try {
        const double s = calibration_slope(test, lp);
        out << ',' << format_double(s);
        sum_s += s;
        ++n_s;
      } catch (const std::exception&) {
        out << ",NA";
      }
      try {
        const double ib = integrated_brier_score(
            test, [&](double t, int i) { return fit.baseline.survival(t, lp[i]); });
        out << ',' << format_double(ib);
        sum_i += ib;
        ++n_i;
      } catch (const std::exception&) {
        out << ",NA";
      }
      out << '\n';
    } catch (const std::exception& e) {
      out << k + 1 << ",NA,NA,NA\n";
      std::cerr << "cv-eval fold " << k + 1 << " failed: " << e.what() << '\n';
    }
  }
  out << "mean," << (n_c ? format_double(sum_c / n_c) : "NA") << ','
      << (n_s ? format_double(sum_s / n_s) : "NA") << ','
      << (n_i ? format_double(sum_i / n_i) : "NA") << '\n';
  std::cout << "cv-eval (" << folds << " folds): mean c-index "
            << (n_c ? format_double(sum_c / n_c) : "NA") << ", slope "
            << (n_s ? format_double(sum_s / n_s) : "NA") << ", ibs "
            << (n_i ? format_double(sum_i / n_i) : "NA") << '\n';
  return kExitSuccess;
}

int run_stratify(const fs::path& dir, const TwoPhaseDataset& data,
                 const FitOutputs& outputs, int n_groups) {
  const auto& rows = outputs.complete_rows;
  const int m = static_cast<int>(rows.size());
  const auto labels = risk_stratify(outputs.lp_complete, n_groups);

  // Reference time for calibration scatter: pooled median event time.
  std::vector<double> event_times;
  for (int i : rows)
    if (data.event[i]) event_times.push_back(data.time[i]);
  double t_ref = 0.0;
  if (!event_times.empty()) {
    std::sort(event_times.begin(), event_times.end());
    t_ref = event_times[event_times.size() / 2];
  }

  std::ofstream groups(dir / "groups.csv");
  groups << "row,time,event,linear_predictor,group,predicted_survival_tref\n";
  for (int k = 0; k < m; ++k) {
    const int i = rows[k];
    groups << i + 1 << ',' << format_double(data.time[i]) << ',' << data.event[i] << ','
           << format_double(outputs.lp_complete[k]) << ','
           << risk_group_name(labels[k], n_groups) << ','
           << format_double(outputs.fit.baseline.survival(t_ref, outputs.lp_complete[k]))
           << '\n';
  }

  // Per-group KM curves and the log-rank comparison.
  std::vector<Dataset> group_data;
  std::ofstream km_out(dir / "km_groups.csv");
  km_out << "group,time,survival,ci_low,ci_high,at_risk,events\n";
  for (int g = 0; g < n_groups; ++g) {
    std::vector<double> t;
    std::vector<int> e;
    for (int k = 0; k < m; ++k)
      if (labels[k] == g) {
        t.push_back(data.time[rows[k]]);
        e.push_back(data.event[rows[k]]);
      }
    if (t.empty()) {
      std::cerr << "stratify: empty risk group\n";
      return kExitNumerical;
    }
    Vec tv(static_cast<Eigen::Index>(t.size()));
    for (size_t z = 0; z < t.size(); ++z) tv[z] = t[z];
    group_data.emplace_back(tv, e, Mat::Zero(static_cast<Eigen::Index>(t.size()), 0));
    const auto km = kaplan_meier(group_data.back());
    for (size_t z = 0; z < km.times.size(); ++z) {
      const auto [lo, hi] = km.confidence_interval(static_cast<int>(z));
      km_out << risk_group_name(g, n_groups) << ',' << format_double(km.times[z]) << ','
             << format_double(km.survival[z]) << ',' << format_double(lo) << ','
             << format_double(hi) << ',' << km.at_risk[z] << ',' << km.n_events[z]
             << '\n';
    }
  }

  const auto lr = log_rank_test(group_data);
  std::ofstream lr_out(dir / "logrank.csv");
  lr_out << "comparison,chi_square,df,p_value,p_adjusted\n";
  lr_out << "overall," << format_double(lr.chi_square) << ',' << lr.df << ','
         << format_double(lr.p_value) << ",NA\n";
  for (const auto& pair : pairwise_log_rank(group_data))
    lr_out << risk_group_name(pair.i, n_groups) << "-vs-"
           << risk_group_name(pair.j, n_groups) << ",NA,1,"
           << format_double(pair.p_raw) << ',' << format_double(pair.p_adjusted) << '\n';

  std::cout << "stratified " << m << " target rows into " << n_groups
            << " groups; log-rank p = " << format_double(lr.p_value) << '\n';
  return kExitSuccess;
}

int cmd_fit(const std::string& data_path, const std::string& method_name_arg,
            const std::string& v_cols, const std::string& retain_cols,
            bool no_force_v, bool pi_only, int cv_eval, int stratify,
            long long seed, const std::string& out_dir) {
  const auto method = method_from_name(method_name_arg);
  if (!method || *method == Method::Oracle) {
    std::cerr << "unknown method: " << method_name_arg << '\n';
    return kExitUsage;
  }

  TwoPhaseDataset data;
  try {
    data = read_two_phase_csv(data_path, split_names(v_cols));
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitUsage;
  }

  DomainKnowledge dk;
  dk.force_v = !no_force_v;
  dk.pi_only = pi_only;
  for (const auto& name : split_names(retain_cols)) {
    int idx = -1;
    for (int j = 0; j < data.p(); ++j)
      if (data.u_names[j] == name) idx = j;
    if (idx < 0) {
      std::cerr << "retain column not found (or is a V column): " << name << '\n';
      return kExitUsage;
    }
    dk.retained_u_indices.push_back(idx);
  }

  MethodConfig config;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  try {
    const FitOutputs outputs =
        run_fit(data, *method, dk, config, static_cast<std::uint64_t>(seed));
    write_coefficients(dir, data, outputs.fit);
    write_pi(dir, outputs);

    json manifest;
    manifest["command"] = "fit";
    manifest["data"] = data_path;
    manifest["method"] = method_name_arg;
    manifest["v_cols"] = split_names(v_cols);
    manifest["retain_cols"] = split_names(retain_cols);
    manifest["seed"] = seed;
    manifest["n"] = data.n();
    manifest["n_complete"] = data.n_complete();
    write_manifest(dir, manifest);

    if (cv_eval > 0) {
      const int rc = run_cv_eval(dir, data, *method, dk, config,
                                 static_cast<std::uint64_t>(seed), cv_eval);
      if (rc != kExitSuccess) return rc;
    }
    if (stratify > 0) {
      const int rc = run_stratify(dir, data, outputs, stratify);
      if (rc != kExitSuccess) return rc;
    }
    std::cout << "wrote " << (dir / "coefficients.csv").string() << '\n';
    return kExitSuccess;
  } catch (const std::invalid_argument& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "fit failed: " << e.what() << '\n';
    return kExitNumerical;
  }
}

// ---------------------------------------------------------------------------
// plotdata

int cmd_plotdata(const std::string& in_dir, const std::string& out_dir) {
  const fs::path in(in_dir);
  const fs::path out_path(out_dir.empty() ? in_dir : out_dir);
  if (!fs::exists(in)) {
    std::cerr << "plotdata: input directory does not exist: " << in_dir << '\n';
    return kExitUsage;
  }
  fs::create_directories(out_path);
  bool produced = false;

  if (fs::exists(in / "groups.csv")) {
    const CsvTable table = read_csv_table((in / "groups.csv").string());
    const int c_time = table.column_index("time");
    const int c_event = table.column_index("event");
    const int c_group = table.column_index("group");
    const int c_lp = table.column_index("linear_predictor");
    const int c_pred = table.column_index("predicted_survival_tref");
    if (c_time < 0 || c_event < 0 || c_group < 0) {
      std::cerr << "plotdata: groups.csv is missing required columns\n";
      return kExitUsage;
    }
    // One KM trace per group, long format.
    std::map<std::string, std::vector<std::pair<double, int>>> by_group;
    std::ifstream raw((in / "groups.csv").string());
    std::string line;
    std::getline(raw, line);
    std::vector<std::string> group_of_row;
    while (std::getline(raw, line)) {
      std::stringstream ss(line);
      std::vector<std::string> cells;
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      group_of_row.push_back(cells[c_group]);
    }
    for (size_t i = 0; i < table.rows.size(); ++i)
      by_group[group_of_row[i]].push_back(
          {*table.rows[i][c_time], static_cast<int>(*table.rows[i][c_event])});

    std::ofstream km_plot(out_path / "km_plot.csv");
    km_plot << "group,time,survival,ci_low,ci_high\n";
    for (const auto& [group, rows] : by_group) {
      Vec t(static_cast<Eigen::Index>(rows.size()));
      std::vector<int> e;
      for (size_t i = 0; i < rows.size(); ++i) {
        t[i] = rows[i].first;
        e.push_back(rows[i].second);
      }
      const auto km =
          kaplan_meier(Dataset(t, e, Mat::Zero(static_cast<Eigen::Index>(rows.size()), 0)));
      km_plot << group << ",0,1,1,1\n";
      for (size_t z = 0; z < km.times.size(); ++z) {
        const auto [lo, hi] = km.confidence_interval(static_cast<int>(z));
        km_plot << group << ',' << format_double(km.times[z]) << ','
                << format_double(km.survival[z]) << ',' << format_double(lo) << ','
                << format_double(hi) << '\n';
      }
    }
    produced = true;

    // Calibration scatter per risk decile when predictions are available.
    if (c_lp >= 0 && c_pred >= 0 && table.rows.size() >= 20) {
      const int n = static_cast<int>(table.rows.size());
      Vec lp(n);
      for (int i = 0; i < n; ++i) lp[i] = *table.rows[i][c_lp];
      const int deciles = std::min(10, n / 5);
      const auto bins = risk_stratify(lp, deciles);
      std::ofstream calib(out_path / "calibration_plot.csv");
      calib << "bin,mean_linear_predictor,mean_predicted_survival,km_observed_survival\n";
      for (int b = 0; b < deciles; ++b) {
        std::vector<double> t;
        std::vector<int> e;
        double sum_lp = 0, sum_pred = 0;
        for (int i = 0; i < n; ++i)
          if (bins[i] == b) {
            t.push_back(*table.rows[i][c_time]);
            e.push_back(static_cast<int>(*table.rows[i][c_event]));
            sum_lp += *table.rows[i][c_lp];
            sum_pred += *table.rows[i][c_pred];
          }
        if (t.empty()) continue;
        Vec tv(static_cast<Eigen::Index>(t.size()));
        for (size_t z = 0; z < t.size(); ++z) tv[z] = t[z];
        // observed survival at the last event time within the bin horizon
        const auto km = kaplan_meier(
            Dataset(tv, e, Mat::Zero(static_cast<Eigen::Index>(t.size()), 0)));
        const double observed = km.times.empty() ? 1.0 : km.survival.back();
        calib << b + 1 << ',' << format_double(sum_lp / t.size()) << ','
              << format_double(sum_pred / t.size()) << ',' << format_double(observed)
              << '\n';
      }
    }
  }

  if (fs::exists(in / "results.csv")) {
    const CsvTable table = read_csv_table((in / "results.csv").string());
    std::ifstream raw((in / "results.csv").string());
    std::string line;
    std::getline(raw, line);
    std::vector<std::vector<std::string>> rows;
    while (std::getline(raw, line)) {
      std::stringstream ss(line);
      std::vector<std::string> cells;
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      rows.push_back(cells);
    }
    std::ofstream long_out(out_path / "results_long.csv");
    long_out << "cell,method,metric,mean,sd\n";
    const std::vector<std::pair<std::string, int>> metrics = {
        {"c_index", 7}, {"calibration_slope", 10}, {"ibs", 13}, {"mcc", 16}};
    for (const auto& cells : rows)
      for (const auto& [name, col] : metrics)
        long_out << cells[0] << ',' << cells[6] << ',' << name << ',' << cells[col]
                 << ',' << cells[col + 1] << '\n';
    produced = true;
  }

  if (!produced) {
    std::cerr << "plotdata: nothing to export in " << in_dir
              << " (expected groups.csv or results.csv)\n";
    return kExitUsage;
  }
  return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-phase survival modeling toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "run simulation scenarios from a config file");
  std::string config_path, sim_out = "tpsurv_results";
  long long sim_seed = -1;
  int sim_reps = -1, jobs = 0;
  sim->add_option("--config", config_path, "scenario config file")->required();
  sim->add_option("--seed", sim_seed, "override every cell's seed");
  sim->add_option("--replications", sim_reps, "override every cell's replication count");
  sim->add_option("--jobs", jobs, "parallel replications (0 = all cores)");
  sim->add_option("--out", sim_out, "output directory");

  // fit
  auto* fit = app.add_subcommand("fit", "fit a method to an external survival CSV");
  std::string data_path, method_arg, v_cols, retain_cols, fit_out = "tpsurv_fit";
  bool no_force_v = false, pi_only = false;
  int cv_eval = 0, stratify = 0;
  long long fit_seed = 1;
  fit->add_option("--data", data_path, "survival CSV (time,event,covariates)")->required();
  fit->add_option("--method", method_arg, "eg|cca|ni|mi-wood|mi-bartlett")->required();
  fit->add_option("--v-cols", v_cols, "comma-separated expensive-covariate columns")
      ->required();
  fit->add_option("--retain-cols", retain_cols,
                  "comma-separated U columns kept unpenalized in stage I");
  fit->add_flag("--no-force-v", no_force_v, "do not force V into stage II");
  fit->add_flag("--pi-only", pi_only, "stage II on the prognostic index alone");
  fit->add_option("--cv-eval", cv_eval, "k-fold evaluation on the complete rows");
  fit->add_option("--stratify", stratify, "risk groups to cut (e.g. 3 for tertiles)");
  fit->add_option("--seed", fit_seed, "random seed");
  fit->add_option("--out", fit_out, "output directory");

  // plotdata
  auto* plot = app.add_subcommand("plotdata", "export plot-ready CSVs from a results dir");
  std::string plot_in, plot_out;
  plot->add_option("--in", plot_in, "results directory (simulate or fit output)")
      ->required();
  plot->add_option("--out", plot_out, "output directory (default: same as --in)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (sim->parsed())
    return cmd_simulate(config_path,
                        sim_seed >= 0 ? std::optional<long long>(sim_seed) : std::nullopt,
                        sim_reps > 0 ? std::optional<int>(sim_reps) : std::nullopt, jobs,
                        sim_out);
  if (fit->parsed())
    return cmd_fit(data_path, method_arg, v_cols, retain_cols, no_force_v, pi_only,
                   cv_eval, stratify, fit_seed, fit_out);
  if (plot->parsed()) return cmd_plotdata(plot_in, plot_out);
  return kExitUsage;
}
