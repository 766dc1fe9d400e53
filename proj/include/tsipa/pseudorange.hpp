#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tsipa/random.hpp"
#include "tsipa/scene.hpp"

namespace tsipa {

enum class RangeMethod { kCem, kCpm };

const char* to_string(RangeMethod m);
RangeMethod range_method_from(const std::string& s);

struct PseudorangeObservation {
  int satellite_id = 0;
  int tis_id = 0;
  RangeMethod method = RangeMethod::kCem;
  double corrected_range_m = 0.0;  ///< rho_c (CEM) or lambda (dphi + N) (CPM)
  double wavelength_m = 0.0;
  std::int64_t integer_ambiguity = 0;  ///< CPM only
  double carrier_phase_cycles = 0.0;   ///< CPM only, in [0, 1)
};

struct PseudorangeSet {
  std::vector<PseudorangeObservation> observations;  ///< grouped by tis_id
  double truth_user_clock_s = 0.0;                   ///< oracle checks only

  /// Observations for one (tis, method) group, in satellite order.
  std::vector<PseudorangeObservation> group(int tis_id, RangeMethod method) const;
};

/// Number of calls into the observation-synthesis entry points since
/// process start. Used to verify that repeat fixes never touch satellite data.
std::uint64_t pseudorange_call_count();

/// c (t_receive - t_emit). Throws kDomain for non-positive flight time.
double raw_cem(double t_receive_s, double t_emit_s);

/// raw + c * dt_s: removes the satellite clock offset.
double correct_cem(double raw_m, double sat_clock_offset_s);

struct CarrierPhase {
  double carrier_phase_cycles;  ///< fractional part, [0, 1)
  std::int64_t integer_ambiguity;
  double range_m;  ///< the synthesized total range rho
};

/// rho = geometry + c dt_u + noise, N = floor(rho / lambda), dphi = rho/lambda - N.
CarrierPhase synthesize_cpm(double geometry_range_m, double user_clock_s, double wavelength_m,
                            Rng& rng, double carrier_sigma_m);

/// lambda (dphi + N), evaluated so that it reproduces the synthesized range.
double cpm_range(double wavelength_m, double carrier_phase_cycles, std::int64_t ambiguity);

/// round(coarse / lambda - dphi); exact whenever |coarse error| < lambda / 2.
std::int64_t resolve_ambiguity(double carrier_phase_cycles, double wavelength_m,
                               double coarse_range_m);

/// Observations for every (satellite, TIS) pair of a validated scene.
/// Noise draws are taken in (tis, satellite) order from one stream, so CEM
/// and CPM sets from the same seed share their normalized noise.
PseudorangeSet build_observation_set(const Scene& scene, RangeMethod method, std::uint64_t seed);

/// Flat CSV: sat,tis,method,rho_c_m,lambda_m,dphi_cycles,N
void write_pseudorange_csv(const PseudorangeSet& set, std::ostream& out);

}  // namespace tsipa
