#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace tpsurv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using BoolVec = std::vector<bool>;

/// One subject: follow-up time, event indicator, covariate row.
struct SurvivalRecord {
  double time = 0.0;
  bool event = false;
  Vec covariates;
};

/// Right-censored survival data with a shared covariate dimension.
/// Immutable by convention after construction; all operations are pure.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Vec time, std::vector<int> event, Mat covariates,
          std::vector<std::string> column_names = {});

  int n() const { return static_cast<int>(time_.size()); }
  int n_covariates() const { return static_cast<int>(x_.cols()); }
  int n_events() const;

  const Vec& time() const { return time_; }
  const std::vector<int>& event() const { return event_; }
  const Mat& covariates() const { return x_; }
  const std::vector<std::string>& column_names() const { return names_; }

  SurvivalRecord record(int i) const {
    return SurvivalRecord{time_[i], event_[i] != 0, x_.row(i).transpose()};
  }

  /// Copy of the rows in `idx`, preserving order.
  Dataset subset(const std::vector<int>& idx) const;

  /// Same outcomes, different covariate matrix.
  Dataset with_covariates(Mat x, std::vector<std::string> names = {}) const;

  /// Event flags inverted (censorings become the events); used for the
  /// censoring-distribution Kaplan-Meier.
  Dataset flipped_events() const;

 private:
  Vec time_;
  std::vector<int> event_;
  Mat x_;
  std::vector<std::string> names_;
};

enum class VKind { Binary, Continuous };

/// Two-phase data: U observed for everyone, V observed only on the
/// phase-two subsample. V observation status is per subject, never per cell.
struct TwoPhaseDataset {
  Mat u;                      // n x p, fully observed
  Mat v;                      // n x d, rows meaningful only where v_observed
  std::vector<int> v_observed;  // per-row 0/1
  std::vector<VKind> v_kinds;   // per V column
  Vec time;
  std::vector<int> event;
  std::vector<std::string> u_names;
  std::vector<std::string> v_names;

  int n() const { return static_cast<int>(time.size()); }
  int p() const { return static_cast<int>(u.cols()); }
  int d() const { return static_cast<int>(v.cols()); }
  int n_complete() const;
  std::vector<int> complete_rows() const;

  void validate() const;

  /// (U|V) dataset over the complete rows.
  Dataset complete_joint() const;
  /// U-only dataset over all rows.
  Dataset full_u() const;
  /// (U|V) over all rows with `fill` as the V matrix (imputed or true values).
  Dataset joint_with_v(const Mat& fill) const;
};

}  // namespace tpsurv
