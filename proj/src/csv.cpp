#include "tpsurv/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tpsurv {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

int CsvTable::column_index(const std::string& name) const {
  for (size_t j = 0; j < columns.size(); ++j)
    if (columns[j] == name) return static_cast<int>(j);
  return -1;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim whitespace and a trailing CR
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    size_t start = 0;
    while (start < cell.size() && cell[start] == ' ') ++start;
    cells.push_back(cell.substr(start));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool is_missing_cell(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan";
}

}  // namespace

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open CSV file: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("empty CSV file: " + path);
  table.columns = split_line(line);
  if (table.columns.empty())
    throw std::invalid_argument("CSV header row is empty: " + path);

  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != table.columns.size())
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": wrong number of cells");
    std::vector<std::optional<double>> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      if (is_missing_cell(c)) {
        row.push_back(std::nullopt);
        continue;
      }
      try {
        size_t used = 0;
        const double value = std::stod(c, &used);
        if (used != c.size()) throw std::invalid_argument(c);
        row.push_back(value);
      } catch (const std::exception&) {
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": cannot parse cell '" + c + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

struct OutcomeColumns {
  int time;
  int event;
};

OutcomeColumns outcome_columns(const CsvTable& table, const std::string& path) {
  OutcomeColumns out{table.column_index("time"), table.column_index("event")};
  if (out.time < 0 || out.event < 0)
    throw std::invalid_argument(path + ": need `time` and `event` columns");
  return out;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path) {
  const CsvTable table = read_csv_table(path);
  const auto oc = outcome_columns(table, path);
  const int n = static_cast<int>(table.rows.size());
  const int J = static_cast<int>(table.columns.size()) - 2;
  Vec time(n);
  std::vector<int> event(n);
  Mat x(n, J);
  std::vector<std::string> names;
  for (size_t j = 0; j < table.columns.size(); ++j)
    if (static_cast<int>(j) != oc.time && static_cast<int>(j) != oc.event)
      names.push_back(table.columns[j]);
  for (int i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    if (!row[oc.time] || !row[oc.event])
      throw std::invalid_argument(path + ": missing time/event value");
    time[i] = *row[oc.time];
    event[i] = *row[oc.event] != 0.0 ? 1 : 0;
    int k = 0;
    for (size_t j = 0; j < row.size(); ++j) {
      if (static_cast<int>(j) == oc.time || static_cast<int>(j) == oc.event) continue;
      if (!row[j])
        throw std::invalid_argument(path + ": missing covariate value in column " +
                                    table.columns[j]);
      x(i, k++) = *row[j];
    }
  }
  return Dataset(std::move(time), std::move(event), std::move(x), std::move(names));
}

TwoPhaseDataset read_two_phase_csv(const std::string& path,
                                   const std::vector<std::string>& v_columns) {
  const CsvTable table = read_csv_table(path);
  const auto oc = outcome_columns(table, path);

  std::vector<int> v_idx;
  for (const auto& name : v_columns) {
    const int j = table.column_index(name);
    if (j < 0)
      throw std::invalid_argument(path + ": V column not in header: " + name);
    if (j == oc.time || j == oc.event)
      throw std::invalid_argument(path + ": V column cannot be time/event");
    v_idx.push_back(j);
  }
  if (v_idx.empty()) throw std::invalid_argument(path + ": no V columns declared");

  std::vector<int> u_idx;
  for (size_t j = 0; j < table.columns.size(); ++j) {
    const int jj = static_cast<int>(j);
    if (jj == oc.time || jj == oc.event) continue;
    if (std::find(v_idx.begin(), v_idx.end(), jj) == v_idx.end()) u_idx.push_back(jj);
  }

  const int n = static_cast<int>(table.rows.size());
  TwoPhaseDataset data;
  data.u.resize(n, static_cast<Eigen::Index>(u_idx.size()));
  data.v.resize(n, static_cast<Eigen::Index>(v_idx.size()));
  data.v_observed.resize(n);
  data.time.resize(n);
  data.event.resize(n);
  for (int j : u_idx) data.u_names.push_back(table.columns[j]);
  for (int j : v_idx) data.v_names.push_back(table.columns[j]);

  for (int i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    if (!row[oc.time] || !row[oc.event])
      throw std::invalid_argument(path + ": missing time/event value");
    data.time[i] = *row[oc.time];
    data.event[i] = *row[oc.event] != 0.0 ? 1 : 0;
    for (size_t k = 0; k < u_idx.size(); ++k) {
      if (!row[u_idx[k]])
        throw std::invalid_argument(path + ": missing value in non-V column " +
                                    table.columns[u_idx[k]]);
      data.u(i, static_cast<Eigen::Index>(k)) = *row[u_idx[k]];
    }
    int observed = 0, missing = 0;
    for (size_t k = 0; k < v_idx.size(); ++k) {
      if (row[v_idx[k]]) {
        data.v(i, static_cast<Eigen::Index>(k)) = *row[v_idx[k]];
        ++observed;
      } else {
        data.v(i, static_cast<Eigen::Index>(k)) = 0.0;
        ++missing;
      }
    }
    if (observed > 0 && missing > 0)
      throw std::invalid_argument(path + ": row " + std::to_string(i + 1) +
                                  " has partially observed V (must be all or none)");
    data.v_observed[i] = observed > 0 ? 1 : 0;
  }

  // Kind inference: binary iff every observed value is 0 or 1.
  for (Eigen::Index c = 0; c < data.v.cols(); ++c) {
    bool binary = true;
    for (int i = 0; i < n; ++i)
      if (data.v_observed[i] && data.v(i, c) != 0.0 && data.v(i, c) != 1.0)
        binary = false;
    data.v_kinds.push_back(binary ? VKind::Binary : VKind::Continuous);
  }
  data.validate();
  return data;
}

void write_two_phase_csv(const std::string& path, const TwoPhaseDataset& data) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write CSV file: " + path);
  out << "time,event";
  for (int j = 0; j < data.p(); ++j)
    out << ',' << (data.u_names.empty() ? "u" + std::to_string(j + 1) : data.u_names[j]);
  for (int c = 0; c < data.d(); ++c)
    out << ',' << (data.v_names.empty() ? "v" + std::to_string(c + 1) : data.v_names[c]);
  out << '\n';
  for (int i = 0; i < data.n(); ++i) {
    out << format_double(data.time[i]) << ',' << data.event[i];
    for (int j = 0; j < data.p(); ++j) out << ',' << format_double(data.u(i, j));
    for (int c = 0; c < data.d(); ++c) {
      out << ',';
      if (data.v_observed[i]) out << format_double(data.v(i, c));
      else out << "NA";
    }
    out << '\n';
  }
}

namespace {

void write_metric(std::ostream& out, const MetricSummary& m) {
  if (m.count > 0)
    out << ',' << format_double(m.mean) << ',' << format_double(m.sd) << ',' << m.count;
  else
    out << ",NA,NA,0";
}

}  // namespace

void write_results_csv(const std::string& path,
                       const std::vector<ScenarioResult>& results) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write results file: " + path);
  out << "cell,scenario,mechanism,n,p,r,method"
      << ",c_index_mean,c_index_sd,c_index_n"
      << ",calibration_slope_mean,calibration_slope_sd,calibration_slope_n"
      << ",ibs_mean,ibs_sd,ibs_n"
      << ",mcc_mean,mcc_sd,mcc_n,failures\n";
  for (const auto& res : results) {
    for (const auto& s : res.summaries) {
      out << res.spec.name << ',' << coef_scenario_name(res.spec.coefficient_scenario)
          << ',' << mechanism_name(res.spec.mechanism) << ',' << res.spec.n << ','
          << res.spec.p << ',' << format_double(res.spec.r) << ','
          << method_name(s.method);
      write_metric(out, s.c_index);
      write_metric(out, s.calibration_slope);
      write_metric(out, s.ibs);
      write_metric(out, s.mcc);
      out << ',' << s.failures << '\n';
    }
  }
}

void write_raw_csv(const std::string& path,
                   const std::vector<ScenarioResult>& results) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write raw file: " + path);
  out << "cell,replication,method,c_index,calibration_slope,ibs,mcc,failed\n";
  auto cell = [&](const std::optional<double>& v) -> std::string {
    return v && std::isfinite(*v) ? format_double(*v) : "NA";
  };
  for (const auto& res : results)
    for (const auto& rep : res.replications)
      for (const auto& o : rep.outcomes) {
        out << res.spec.name << ',' << rep.rep_index << ',' << method_name(o.method)
            << ',' << cell(o.report.c_index) << ',' << cell(o.report.calibration_slope)
            << ',' << cell(o.report.ibs) << ',' << cell(o.report.mcc) << ','
            << (o.failed ? 1 : 0) << '\n';
      }
}

}  // namespace tpsurv
