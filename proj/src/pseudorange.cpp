#include "tsipa/pseudorange.hpp"

#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "tsipa/errors.hpp"

namespace tsipa {

namespace {
std::atomic<std::uint64_t> g_calls{0};
}

std::uint64_t pseudorange_call_count() { return g_calls.load(); }

const char* to_string(RangeMethod m) { return m == RangeMethod::kCem ? "cem" : "cpm"; }

RangeMethod range_method_from(const std::string& s) {
  if (s == "cem" || s == "CEM") return RangeMethod::kCem;
  if (s == "cpm" || s == "CPM") return RangeMethod::kCpm;
  throw Error(ErrorCode::kDomain, "unknown range method '" + s + "'");
}

std::vector<PseudorangeObservation> PseudorangeSet::group(int tis_id, RangeMethod method) const {
  std::vector<PseudorangeObservation> out;
  for (const auto& o : observations) {
    if (o.tis_id == tis_id && o.method == method) out.push_back(o);
  }
  return out;
}

double raw_cem(double t_receive_s, double t_emit_s) {
  ++g_calls;
  const double flight = t_receive_s - t_emit_s;
  if (!(flight > 0.0)) {
    throw Error(ErrorCode::kDomain, "raw_cem: non-positive flight time");
  }
  return kSpeedOfLight * flight;
}

double correct_cem(double raw_m, double sat_clock_offset_s) {
  return raw_m + kSpeedOfLight * sat_clock_offset_s;
}

double cpm_range(double wavelength_m, double carrier_phase_cycles, std::int64_t ambiguity) {
  return std::fma(wavelength_m, static_cast<double>(ambiguity), wavelength_m * carrier_phase_cycles);
}

CarrierPhase synthesize_cpm(double geometry_range_m, double user_clock_s, double wavelength_m,
                            Rng& rng, double carrier_sigma_m) {
  ++g_calls;
  if (!(wavelength_m > 0.0)) {
    throw Error(ErrorCode::kDomain, "synthesize_cpm: wavelength must be > 0");
  }
  double rho = geometry_range_m + kSpeedOfLight * user_clock_s;
  if (carrier_sigma_m > 0.0) {
    rho += std::normal_distribution<double>(0.0, carrier_sigma_m)(rng);
  }
  auto n = static_cast<std::int64_t>(std::floor(rho / wavelength_m));
  // Remainder in meters with a single rounding; keeps dphi consistent with N
  // even when rho / lambda rounds across an integer.
  double rem = std::fma(-wavelength_m, static_cast<double>(n), rho);
  if (rem < 0.0) {
    --n;
    rem = std::fma(-wavelength_m, static_cast<double>(n), rho);
  } else if (rem >= wavelength_m) {
    ++n;
    rem = std::fma(-wavelength_m, static_cast<double>(n), rho);
  }
  double dphi = rem / wavelength_m;
  if (dphi >= 1.0) dphi = std::nextafter(1.0, 0.0);
  return {dphi, n, rho};
}

std::int64_t resolve_ambiguity(double carrier_phase_cycles, double wavelength_m,
                               double coarse_range_m) {
  return static_cast<std::int64_t>(std::llround(coarse_range_m / wavelength_m - carrier_phase_cycles));
}

PseudorangeSet build_observation_set(const Scene& scene, RangeMethod method, std::uint64_t seed) {
  ++g_calls;
  require_valid(scene);
  Rng rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double sigma =
      method == RangeMethod::kCem ? scene.noise.code_sigma_m : scene.noise.carrier_sigma_m;
  const auto& user = scene.user;

  PseudorangeSet set;
  set.truth_user_clock_s = user.clock_offset_s;
  for (const auto& tis : scene.tis_arrays) {
    const double d_ru = euclidean_distance(tis.position, user.position);
    for (const auto& sat : scene.satellites) {
      const double geometry = euclidean_distance(sat.position, tis.position) + d_ru;
      const double noise = sigma * unit(rng);

      PseudorangeObservation obs;
      obs.satellite_id = sat.id;
      obs.tis_id = tis.id;
      obs.method = method;
      obs.wavelength_m = sat.wavelength_m;
      if (method == RangeMethod::kCem) {
        // Clock readings relative to the true emission epoch: the satellite
        // stamps dt_s, the user reads flight time + dt_u.
        const double t_emit = sat.clock_offset_s;
        const double t_receive = (geometry + noise) / kSpeedOfLight + user.clock_offset_s;
        obs.corrected_range_m = correct_cem(raw_cem(t_receive, t_emit), sat.clock_offset_s);
      } else {
        // Noise is drawn above so CEM and CPM share the normalized stream.
        Rng unused(0);
        const CarrierPhase cp =
            synthesize_cpm(geometry + noise, user.clock_offset_s, sat.wavelength_m, unused, 0.0);
        obs.carrier_phase_cycles = cp.carrier_phase_cycles;
        obs.integer_ambiguity = cp.integer_ambiguity;
        obs.corrected_range_m =
            cpm_range(sat.wavelength_m, cp.carrier_phase_cycles, cp.integer_ambiguity);
      }
      set.observations.push_back(obs);
    }
  }
  return set;
}

void write_pseudorange_csv(const PseudorangeSet& set, std::ostream& out) {
  out << "sat,tis,method,rho_c_m,lambda_m,dphi_cycles,N\n";
  out << std::setprecision(17);
  for (const auto& o : set.observations) {
    out << o.satellite_id << ',' << o.tis_id << ',' << to_string(o.method) << ','
        << o.corrected_range_m << ',' << o.wavelength_m << ',';
    if (o.method == RangeMethod::kCpm) {
      out << o.carrier_phase_cycles << ',' << o.integer_ambiguity;
    } else {
      out << ',';
    }
    out << '\n';
  }
}

}  // namespace tsipa
