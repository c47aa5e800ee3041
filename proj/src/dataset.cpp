#include "tpsurv/dataset.hpp"

#include <algorithm>
#include <stdexcept>

namespace tpsurv {

Dataset::Dataset(Vec time, std::vector<int> event, Mat covariates,
                 std::vector<std::string> column_names)
    : time_(std::move(time)),
      event_(std::move(event)),
      x_(std::move(covariates)),
      names_(std::move(column_names)) {
  const auto n = time_.size();
  if (static_cast<Eigen::Index>(event_.size()) != n)
    throw std::invalid_argument("dataset: time/event length mismatch");
  if (x_.rows() != n)
    throw std::invalid_argument("dataset: covariate row count mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(time_[i] > 0.0))
      throw std::invalid_argument("dataset: times must be positive");
  if (!names_.empty() && static_cast<Eigen::Index>(names_.size()) != x_.cols())
    throw std::invalid_argument("dataset: column name count mismatch");
  if (names_.empty())
    for (Eigen::Index j = 0; j < x_.cols(); ++j)
      names_.push_back("x" + std::to_string(j + 1));
}

int Dataset::n_events() const {
  int k = 0;
  for (int e : event_) k += (e != 0);
  return k;
}

Dataset Dataset::subset(const std::vector<int>& idx) const {
  const int m = static_cast<int>(idx.size());
  Vec t(m);
  std::vector<int> e(m);
  Mat x(m, x_.cols());
  for (int k = 0; k < m; ++k) {
    t[k] = time_[idx[k]];
    e[k] = event_[idx[k]];
    x.row(k) = x_.row(idx[k]);
  }
  return Dataset(std::move(t), std::move(e), std::move(x), names_);
}

Dataset Dataset::with_covariates(Mat x, std::vector<std::string> names) const {
  if (x.rows() != time_.size())
    throw std::invalid_argument("with_covariates: row count mismatch");
  return Dataset(time_, event_, std::move(x), std::move(names));
}

Dataset Dataset::flipped_events() const {
  std::vector<int> e(event_.size());
  for (size_t i = 0; i < event_.size(); ++i) e[i] = event_[i] ? 0 : 1;
  return Dataset(time_, std::move(e), x_, names_);
}

int TwoPhaseDataset::n_complete() const {
  int k = 0;
  for (int o : v_observed) k += (o != 0);
  return k;
}

std::vector<int> TwoPhaseDataset::complete_rows() const {
  std::vector<int> idx;
  for (int i = 0; i < n(); ++i)
    if (v_observed[i]) idx.push_back(i);
  return idx;
}

void TwoPhaseDataset::validate() const {
  const int nn = n();
  if (u.rows() != nn || v.rows() != nn ||
      static_cast<int>(v_observed.size()) != nn ||
      static_cast<int>(event.size()) != nn)
    throw std::invalid_argument("two-phase dataset: inconsistent row counts");
  if (static_cast<int>(v_kinds.size()) != d())
    throw std::invalid_argument("two-phase dataset: v_kinds length != d");
  const int nc = n_complete();
  if (nc < 1 || nc > nn)
    throw std::invalid_argument("two-phase dataset: need 1 <= n' <= n");
  for (int i = 0; i < nn; ++i)
    if (!(time[i] > 0.0))
      throw std::invalid_argument("two-phase dataset: times must be positive");
}

static std::vector<std::string> joint_names(const TwoPhaseDataset& data) {
  std::vector<std::string> names = data.u_names;
  if (names.empty())
    for (int j = 0; j < data.p(); ++j) names.push_back("u" + std::to_string(j + 1));
  if (data.v_names.empty())
    for (int j = 0; j < data.d(); ++j) names.push_back("v" + std::to_string(j + 1));
  else
    names.insert(names.end(), data.v_names.begin(), data.v_names.end());
  return names;
}

Dataset TwoPhaseDataset::complete_joint() const {
  const auto idx = complete_rows();
  const int m = static_cast<int>(idx.size());
  Vec t(m);
  std::vector<int> e(m);
  Mat x(m, p() + d());
  for (int k = 0; k < m; ++k) {
    t[k] = time[idx[k]];
    e[k] = event[idx[k]];
    x.row(k).head(p()) = u.row(idx[k]);
    x.row(k).tail(d()) = v.row(idx[k]);
  }
  return Dataset(std::move(t), std::move(e), std::move(x), joint_names(*this));
}

Dataset TwoPhaseDataset::full_u() const {
  auto names = u_names;
  if (names.empty())
    for (int j = 0; j < p(); ++j) names.push_back("u" + std::to_string(j + 1));
  return Dataset(time, event, u, std::move(names));
}

Dataset TwoPhaseDataset::joint_with_v(const Mat& fill) const {
  if (fill.rows() != n() || fill.cols() != d())
    throw std::invalid_argument("joint_with_v: fill shape mismatch");
  Mat x(n(), p() + d());
  x.leftCols(p()) = u;
  x.rightCols(d()) = fill;
  return Dataset(time, event, std::move(x), joint_names(*this));
}

}  // namespace tpsurv
