#pragma once

#include <cstdint>
#include <vector>

#include "tpsurv/penalized.hpp"

namespace tpsurv {

/// Adaptive-lasso weights from a pilot estimate: (|g_j| + 1/n)^(-delta).
/// The 1/n perturbation keeps weights finite at zero pilot coefficients.
Vec weights_from_pilot(const Vec& pilot, int n, double delta);

/// Pilot elastic-net estimate (alpha = 0.5, lambda by internal 5-fold CV)
/// used to build adaptive weights. Coordinates not in `penalized_indices`
/// are left unpenalized.
Vec pilot_elastic_net(const Dataset& data, const std::vector<int>& penalized_indices,
                      const FitConfig& config, std::uint64_t seed);

/// weights_from_pilot over the pilot fit; 1.0 at unpenalized coordinates.
Vec adaptive_weights(const Dataset& data, const std::vector<int>& penalized_indices,
                     double delta, const FitConfig& config, std::uint64_t seed);

struct CvPoint {
  double delta = 0.0;
  double lambda = 0.0;
  double mean_deviance = 0.0;  // mean over folds of the CVPL contribution
  double se_deviance = 0.0;
};

struct CvResult {
  std::vector<CvPoint> grid;
  int selected = -1;

  const CvPoint& selected_point() const { return grid.at(selected); }
};

/// (delta, lambda) selection by cross-validated partial-likelihood deviance
/// (Verweij-van Houwelingen). Ties break to the smallest lambda, then the
/// smallest delta.
CvResult cross_validate(const Dataset& data, const std::vector<double>& delta_grid,
                        int lambda_grid_size, int folds, const Vec& penalty_factors,
                        std::uint64_t seed, const FitConfig& config = {});

/// Full tuned pipeline: pilot -> weights -> (delta, lambda) CV -> final fit.
/// This is the penalized-fit entry point every estimation method uses.
struct TunedFit {
  CoxFit fit;
  CvResult cv;
  Vec weights;  // adaptive weights at the selected delta
};
TunedFit fit_adaptive_lasso_cv(const Dataset& data, const Vec& penalty_factors,
                               const FitConfig& config, std::uint64_t seed,
                               const std::vector<double>& delta_grid = {0.5, 1.0, 2.0},
                               int lambda_grid_size = 50, int folds = 5);

/// Fold labels in [0, folds); plain random blocks, re-stratified by event
/// status once if a training part would lose all events.
std::vector<int> make_folds(const Dataset& data, int folds, std::uint64_t seed);

}  // namespace tpsurv
