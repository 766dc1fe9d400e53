#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tsipa/pseudorange.hpp"
#include "tsipa/scene.hpp"

namespace tsipa {

/// Iterate of the stage-1 unknowns: TIS position plus the combined range
/// bias e = d_ru + c dt_u, in meters.
struct LinearizationPoint {
  Position3 position = Position3::Zero();
  double bias_m = 0.0;
};

/// b = A x + n for one TIS. Row i of `design` is the unit direction from the
/// linearization point toward satellite i followed by the constant 1.
struct LinearizedSystem {
  Eigen::MatrixXd design;    ///< I x 4
  Eigen::VectorXd residual;  ///< measured - predicted, length I
  Eigen::MatrixXd weights;   ///< I x I, positive definite
};

struct TisFix {
  int tis_id = 0;
  Position3 position_est = Position3::Zero();
  double range_bias_m = 0.0;
  int iterations_used = 0;
  bool converged = false;
  double final_update_norm_m = 0.0;
  std::optional<double> error_vs_truth_m;
};

struct TisLocatorOptions {
  double tolerance_m = 1e-4;
  int k_max = 50;
  double max_condition = 1e12;
  LinearizationPoint initial_guess{};
  /// Per-satellite sigma for W_e = diag(1 / sigma_i^2); empty means identity.
  std::vector<double> satellite_sigmas_m;
};

/// Throws kUnderdetermined below 4 observations and kSingularGeometry when
/// the point coincides with a satellite. `sigmas` as in TisLocatorOptions.
LinearizedSystem linearize(std::span<const PseudorangeObservation> observations,
                           const LinearizationPoint& point,
                           std::span<const SatelliteEphemeris> satellites,
                           std::span<const double> sigmas = {});

/// (A^T W A)^-1 A^T W b. Throws kSingularGeometry (value = condition number)
/// when the normal matrix condition exceeds `max_condition`.
Eigen::Vector4d solve_wls(const LinearizedSystem& system, double max_condition = 1e12);

/// P(x) = (A x - b)^T W (A x - b).
double wls_cost(const LinearizedSystem& system, const Eigen::Vector4d& x);

/// Gauss-Newton on one TIS group. Throws kDivergence when the position
/// update grows three iterations in a row.
TisFix locate_tis(std::span<const PseudorangeObservation> observations,
                  std::span<const SatelliteEphemeris> satellites,
                  const TisLocatorOptions& options = {});

struct TisSolveOutcome {
  int tis_id = 0;
  std::optional<TisFix> fix;
  std::string error;  ///< set when fix is empty
};

/// One independent solve per TIS id present in the set (ascending id).
/// Failures are collected, not thrown.
std::vector<TisSolveOutcome> locate_all_tis(const PseudorangeSet& set, RangeMethod method,
                                            std::span<const SatelliteEphemeris> satellites,
                                            const TisLocatorOptions& options = {});

/// CSV: tis,x_est,y_est,z_est,bias_m,iters,converged,err_m
void write_tis_fix_csv(std::span<const TisFix> fixes, std::ostream& out);

}  // namespace tsipa
