#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tsipa/channel.hpp"
#include "tsipa/geometry.hpp"
#include "tsipa/scene.hpp"

namespace tsipa {

/// Candidate angles in [0, pi/2], strictly increasing.
struct AngleGrid {
  std::vector<double> values_rad;
  double resolution_rad = 0.0;

  /// lo, lo + step, ... up to hi (inclusive within half a step). Throws
  /// kDomain when the bounds leave [0, pi/2] or step <= 0.
  static AngleGrid uniform(double lo_rad, double hi_rad, double step_rad);
  /// 0..90 degrees at `step_deg`.
  static AngleGrid degrees(double step_deg);
};

/// Everything the dictionary needs about one TIS link besides the two
/// candidate angles. Built from the same SignalInputs as the forward model.
struct DictionaryModel {
  Eigen::MatrixXcd codebook;                  ///< W x D
  std::vector<Eigen::VectorXcd> pilot_psi;    ///< T diagonals of length K
  ArraySide tis_side{0, 0.0};
  ArraySide user_side{0, 0.0};
  double wavelength_m = 0.0;
  struct Source {
    ArraySide side{0, 0.0};
    Eigen::VectorXcd precoder;
    cdouble weight;                  ///< sqrt(L_ir L_ru P_T) s_ir
    Eigen::MatrixXcd constants;      ///< C_ir, K x M
  };
  std::vector<Source> sources;
  Eigen::MatrixXcd user_constants;   ///< C_ru, W x K
};

/// Large-scale gains use the scene's TIS and user positions; they only scale
/// columns, so the argmin does not depend on them.
DictionaryModel make_dictionary_model(const Scene& scene, int tis_id, const SignalInputs& in);

/// Noise-free response for satellite-side angle a and user-side angle b,
/// stacked like received_signal. Throws kDomain outside [0, pi/2].
Eigen::VectorXcd dictionary_column(const DictionaryModel& model, double a_rad, double b_rad);

/// ||y - d (d^H y) / ||d||^2||^2; ||y||^2 when d = 0.
double projection_residual(const Eigen::VectorXcd& y, const Eigen::VectorXcd& d);

struct AoaEstimate {
  double user_angle_rad = 0.0;  ///< gamma_ru
  double sat_angle_rad = 0.0;   ///< gamma_sr
  double residual = 0.0;
};

/// Exhaustive ML search over sat_grid x user_grid; ties go to the lowest
/// (sat index, user index). Throws kDegenerateInput for all-zero y and
/// kDomain for empty grids.
AoaEstimate estimate_aoa(const Eigen::VectorXcd& y, const AngleGrid& sat_grid,
                         const AngleGrid& user_grid, const DictionaryModel& model);

/// 102 / (sqrt(K) (zeta/lambda) cos theta0) in degrees. Throws kDomain at or
/// beyond broadside (theta0 >= pi/2) and for invalid K or spacing.
double hpbw_upa(int elements, double spacing_over_lambda, double theta0_rad);

/// 1 / (cos theta0 sqrt(dx^-2 cos^2 phi0 + dy^-2 sin^2 phi0)); widths in degrees.
double hpbw_planar(double theta0_rad, double phi0_rad, double dtheta_x_deg, double dtheta_y_deg);

/// Independent uniform perturbations in [-halfwidth, halfwidth] on elevation
/// and azimuth, renormalized. kNone returns the input.
Vec3 apply_ambiguity(const Vec3& direction, double halfwidth_rad, AmbiguityMode mode,
                     std::uint64_t seed);

struct RayEstimate {
  int tis_id = 0;
  Position3 origin = Position3::Zero();
  Vec3 direction = Vec3::UnitX();
  double elevation_rad = 0.0;
  double azimuth_rad = 0.0;
  double ambiguity_halfwidth_rad = 0.0;
};

/// theta_h / 2 for the scene's noise model along `direction` from `tis`.
double ambiguity_halfwidth_rad(const Scene& scene, const TisArray& tis, const Vec3& direction);

/// Fast path: true TIS->user direction perturbed by the scene's ambiguity
/// model, anchored at `origin` (the stage-1 estimate).
RayEstimate ray_from_ambiguity(const Scene& scene, int tis_id, const Position3& origin,
                               std::uint64_t seed);

/// Full path: two dictionary searches on synthesized observations,
/// one for the azimuth offset from the mount's facing direction and one for
/// the depression angle below the horizontal. Both must lie in [0, pi/2].
RayEstimate ray_from_dictionary(const Scene& scene, int tis_id, const Position3& origin,
                                const AngleGrid& grid, std::uint64_t seed);

/// CSV: tis,ox,oy,oz,dx,dy,dz,elev_deg,azim_deg,halfwidth_deg
void write_rays_csv(std::span<const RayEstimate> rays, std::ostream& out);

}  // namespace tsipa
