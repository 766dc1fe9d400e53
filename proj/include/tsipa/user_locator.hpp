#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>

#include "tsipa/aoa_estimator.hpp"
#include "tsipa/geometry.hpp"

namespace tsipa {

enum class Optimizer { kMvm, kNuom, kLsm, kGdm };

const char* to_string(Optimizer o);
/// Accepts "mvm", "nuom", "lsm", "gdm" in any case.
Optimizer optimizer_from(const std::string& s);

struct UserFix {
  Position3 position_est = Position3::Zero();
  Optimizer optimizer = Optimizer::kLsm;
  double objective_value_m = 0.0;   ///< sum of point-to-ray distances
  double squared_objective_m2 = 0.0;  ///< sum of squared distances
  int iterations = 0;               ///< 0 for closed forms
  bool converged = true;
  std::optional<double> error_vs_truth_m;
};

struct UserLocatorOptions {
  double gdm_step_m = 0.1;
  double gdm_tol_m = 1e-4;
  int gdm_max_iters = 1000;
  double nuom_edge_m = 0.5;
  double nuom_tol_m = 1e-5;
  int nuom_max_evals = 2000;
  double parallel_sin_threshold = 1e-6;
};

/// Distance from p to the forward ray origin + t direction, t >= 0.
double point_to_ray_distance(const Position3& p, const Position3& origin, const Vec3& direction);

/// Sum of point_to_ray_distance. Throws kUnderdetermined below 2 rays.
double objective(const Position3& p, std::span<const RayEstimate> rays);
double squared_objective(const Position3& p, std::span<const RayEstimate> rays);

/// Mean of the pairwise x-y line intersections; z from the ray points
/// nearest the 2-D solution. Near-parallel pairs are skipped; all skipped
/// gives kSingularGeometry.
UserFix solve_mvm(std::span<const RayEstimate> rays, const UserLocatorOptions& options = {});

/// Closed-form nearest point to the lines: sum (I - u u^T) p = sum (I - u u^T) o.
/// Rank-deficient systems give kSingularGeometry.
UserFix solve_lsm(std::span<const RayEstimate> rays);

/// Normalized gradient steps on the summed distance from the MVM estimate,
/// halving on non-decrease.
UserFix solve_gdm(std::span<const RayEstimate> rays, const UserLocatorOptions& options = {});

/// Nelder-Mead on the summed distance from the MVM estimate.
UserFix solve_nuom(std::span<const RayEstimate> rays, const UserLocatorOptions& options = {});

UserFix locate_user(std::span<const RayEstimate> rays, Optimizer optimizer,
                    const UserLocatorOptions& options = {});

/// CSV: optimizer,x,y,z,objective_m,iters,err_m
void write_user_fix_csv(std::span<const UserFix> fixes, std::ostream& out);

}  // namespace tsipa
