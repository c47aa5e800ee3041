#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tpsurv/dataset.hpp"
#include "tpsurv/simulation.hpp"

namespace tpsurv {

/// Exact round-trip formatting used for every numeric CSV cell.
std::string format_double(double x);

/// Survival CSV: header row with `time` and `event` (0/1) columns; all other
/// columns are covariates; empty cells or NA mean missing.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> rows;

  int column_index(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv_table(const std::string& path);

/// Fully observed dataset; any missing cell is an error.
Dataset read_dataset_csv(const std::string& path);

/// Two-phase dataset: the named V columns may be missing (all-or-none per
/// row); every other covariate must be complete. Binary/continuous kind is
/// inferred from the observed values.
TwoPhaseDataset read_two_phase_csv(const std::string& path,
                                   const std::vector<std::string>& v_columns);

void write_two_phase_csv(const std::string& path, const TwoPhaseDataset& data);

void write_results_csv(const std::string& path,
                       const std::vector<ScenarioResult>& results);
void write_raw_csv(const std::string& path,
                   const std::vector<ScenarioResult>& results);

}  // namespace tpsurv
