#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tsipa/geometry.hpp"

namespace tsipa {

struct SatelliteEphemeris {
  int id = 0;
  Position3 position = Position3::Zero();
  double clock_offset_s = 0.0;  ///< offset from standard time, any sign
  double emit_time_s = 0.0;     ///< nominal emission epoch
  double wavelength_m = 0.0;
  int tx_antennas = 1;
  double antenna_spacing_m = 0.0;
};

/// One TIS element's transmission coefficient beta * exp(j theta).
struct TransmissionCoeff {
  double amplitude = 1.0;  ///< [0, 1]
  double phase_rad = 0.0;  ///< [0, 2 pi)
};

struct TisArray {
  int id = 0;
  Position3 position = Position3::Zero();
  int elements = 0;  ///< K, a perfect square
  double element_spacing_m = 0.0;
  std::vector<TransmissionCoeff> transmission;  ///< K entries
  int time_slot = 0;
  /// Azimuth of the array's horizontal reference axis (mount orientation).
  double facing_azimuth_deg = 0.0;
  /// Common satellite-side offset angle of the incident signals.
  double incidence_deg = 45.0;
};

struct UserConfig {
  Position3 position = Position3::Zero();  ///< ground truth
  double clock_offset_s = 0.0;             ///< unknown to the solvers
  int rx_antennas = 1;
  double antenna_spacing_m = 0.0;
};

enum class AmbiguityMode { kNone, kHpbwUniform, kFixedDeg };

struct NoiseModel {
  double code_sigma_m = 0.0;     ///< CEM pseudo-range noise std
  double carrier_sigma_m = 0.0;  ///< CPM pseudo-range noise std
  AmbiguityMode aoa_ambiguity_mode = AmbiguityMode::kNone;
  double aoa_ambiguity_deg = 0.0;  ///< ambiguity level for kFixedDeg
};

/// Shadowed-Rician small-scale fading parameters.
struct ShadowedRicianParams {
  double b = 0.126;      ///< half-power of the scatter component
  double m = 10.1;       ///< Nakagami shadowing severity
  double omega = 0.835;  ///< average LoS power
};

enum class ConstantModel { kAllOnes, kShadowedRician };

struct ChannelConfig {
  double carrier_wavelength_m = 0.19029367279836487;  // GPS L1
  double tx_power_w = 1.0;
  double tx_gain_db = 0.0;
  double rx_gain_db = 0.0;
  /// Receive SNR at the user; nullopt means noise-free synthesis.
  std::optional<double> snr_db;
  /// Number of TIS phase configurations cycled per time slot.
  int pilot_configs = 4;
  ConstantModel constants = ConstantModel::kAllOnes;
  ShadowedRicianParams sat_to_tis;
  ShadowedRicianParams tis_to_user;
};

struct Scene {
  std::vector<SatelliteEphemeris> satellites;
  std::vector<TisArray> tis_arrays;
  UserConfig user;
  NoiseModel noise;
  ChannelConfig channel;
  std::uint64_t rng_seed = 0;

  const TisArray& tis(int id) const;
  const SatelliteEphemeris& satellite(int id) const;
};

/// Scene-wide RNG stream used for scene-build draws (clock offsets, ...).
enum class SceneStream : std::uint64_t {
  kBuild = 1,
  kPilotPhases = 2,
};

/// Result of validate_scene: the scene itself, or every violated invariant.
using SceneValidation = std::variant<Scene, std::vector<std::string>>;

SceneValidation validate_scene(const Scene& scene);

/// Throws Error(kDomain) listing all diagnostics when the scene is invalid.
const Scene& require_valid(const Scene& scene);

bool is_perfect_square(int k);

/// K identity coefficients (amplitude 1, phase 0).
std::vector<TransmissionCoeff> identity_transmission(int elements);

struct RotationParams {
  /// Per-turn clockwise step of arrays 2..R (array 1 does not rotate).
  std::vector<double> step_deg_per_tis;
  int turns = 0;
  /// Final distance of arrays 1..R-1 from the user after `turns` turns.
  double radius_m = 0.0;
  /// Constant distance of the last array, and the common start distance.
  double fixed_distance_m = 0.0;
  double start_azimuth_deg = 90.0;
};

/// One scene per turn 0..turns. The base scene supplies satellites, the
/// user, noise and channel settings plus the template TIS array (element
/// count, spacing, coefficients). All arrays start co-located at
/// `fixed_distance_m` on `start_azimuth_deg`, at the user's height. Per turn
/// array j>1 rotates clockwise by its step; arrays 1..R-1 approach the user
/// linearly to `radius_m`; the last array keeps `fixed_distance_m`.
std::vector<Scene> rotation_scenario(const Scene& base,
                                     const RotationParams& params);

/// Places `azimuths_deg.size()` arrays around the user at planar distance
/// `distance_m`, at the user's height, using `base.tis_arrays.front()` as
/// the template. Facing azimuths are set so the user lies 45 degrees off the
/// array reference axis.
Scene with_planar_layout(const Scene& base, double distance_m,
                         const std::vector<double>& azimuths_deg);

/// Mount orientation that puts the user 45 degrees off the array axis.
double default_facing_azimuth_deg(const Position3& tis, const Position3& user);

}  // namespace tsipa
