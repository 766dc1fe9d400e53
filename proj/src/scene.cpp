#include "tsipa/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "tsipa/errors.hpp"

namespace tsipa {

const TisArray& Scene::tis(int id) const {
  for (const auto& t : tis_arrays) {
    if (t.id == id) return t;
  }
  throw Error(ErrorCode::kDomain, "unknown TIS id " + std::to_string(id));
}

const SatelliteEphemeris& Scene::satellite(int id) const {
  for (const auto& s : satellites) {
    if (s.id == id) return s;
  }
  throw Error(ErrorCode::kDomain, "unknown satellite id " + std::to_string(id));
}

bool is_perfect_square(int k) {
  if (k < 1) return false;
  const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(k))));
  return root * root == k;
}

std::vector<TransmissionCoeff> identity_transmission(int elements) {
  return std::vector<TransmissionCoeff>(static_cast<std::size_t>(std::max(elements, 0)));
}

namespace {

bool is_permutation_of_1_to_n(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != static_cast<int>(i) + 1) return false;
  }
  return true;
}

std::vector<std::string> diagnose(const Scene& scene) {
  std::vector<std::string> out;
  auto add = [&out](const std::string& s) { out.push_back(s); };

  if (scene.satellites.size() < 4) add("fewer than 4 satellites");
  if (scene.tis_arrays.size() < 2) add("fewer than 2 TIS arrays (R > 1 required)");

  std::vector<int> sat_ids;
  for (const auto& s : scene.satellites) {
    const std::string tag = "satellite " + std::to_string(s.id) + ": ";
    sat_ids.push_back(s.id);
    if (!is_finite(s.position)) add(tag + "position not finite");
    if (!(s.wavelength_m > 0.0)) add(tag + "wavelength_m must be > 0");
    if (s.tx_antennas < 1) add(tag + "tx_antennas must be >= 1");
    if (!std::isfinite(s.clock_offset_s)) add(tag + "clock_offset_s not finite");
    if (!(s.antenna_spacing_m > 0.0)) add(tag + "antenna_spacing_m must be > 0");
  }
  if (std::set<int>(sat_ids.begin(), sat_ids.end()).size() != sat_ids.size()) {
    add("duplicate satellite ids");
  }

  std::vector<int> tis_ids;
  std::vector<int> slots;
  for (const auto& t : scene.tis_arrays) {
    const std::string tag = "TIS " + std::to_string(t.id) + ": ";
    tis_ids.push_back(t.id);
    slots.push_back(t.time_slot);
    if (!is_finite(t.position)) add(tag + "position not finite");
    if (!is_perfect_square(t.elements)) add(tag + "K not a perfect square");
    if (!(t.element_spacing_m > 0.0)) add(tag + "element_spacing_m must be > 0");
    if (static_cast<int>(t.transmission.size()) != t.elements) {
      add(tag + "transmission coefficient count differs from K");
    }
    bool amp_ok = true;
    bool phase_ok = true;
    for (const auto& c : t.transmission) {
      amp_ok = amp_ok && c.amplitude >= 0.0 && c.amplitude <= 1.0;
      phase_ok = phase_ok && c.phase_rad >= 0.0 && c.phase_rad < 2.0 * kPi;
    }
    if (!amp_ok) add(tag + "transmission amplitude outside [0,1]");
    if (!phase_ok) add(tag + "transmission phase outside [0,2pi)");
  }
  if (!scene.tis_arrays.empty()) {
    if (!is_permutation_of_1_to_n(tis_ids)) add("TIS ids are not a permutation of 1..R");
    if (!is_permutation_of_1_to_n(slots)) {
      add("TIS time slots are not a permutation of 1..R (one active TIS per slot)");
    }
  }

  if (!is_finite(scene.user.position)) add("user position not finite");
  if (scene.user.rx_antennas < 1) add("rx_antennas must be >= 1");
  if (!(scene.user.antenna_spacing_m > 0.0)) add("user antenna_spacing_m must be > 0");

  const auto& n = scene.noise;
  if (!(n.code_sigma_m >= 0.0) || !(n.carrier_sigma_m >= 0.0)) add("noise sigmas must be >= 0");
  if (n.aoa_ambiguity_mode == AmbiguityMode::kFixedDeg && !(n.aoa_ambiguity_deg >= 0.0)) {
    add("fixed ambiguity must be >= 0 deg");
  }

  const auto& ch = scene.channel;
  if (!(ch.carrier_wavelength_m > 0.0)) add("carrier_wavelength_m must be > 0");
  if (!(ch.tx_power_w >= 0.0)) add("tx_power_w must be >= 0");
  if (ch.pilot_configs < 1) add("pilot_configs must be >= 1");
  for (const auto* p : {&ch.sat_to_tis, &ch.tis_to_user}) {
    if (!(p->b > 0.0) || !(p->m > 0.0) || !(p->omega >= 0.0)) {
      add("shadowed-Rician parameters need b > 0, m > 0, omega >= 0");
    }
  }
  return out;
}

}  // namespace

SceneValidation validate_scene(const Scene& scene) {
  auto diagnostics = diagnose(scene);
  if (diagnostics.empty()) return scene;
  return diagnostics;
}

const Scene& require_valid(const Scene& scene) {
  auto diagnostics = diagnose(scene);
  if (!diagnostics.empty()) {
    std::ostringstream msg;
    msg << "invalid scene:";
    for (const auto& d : diagnostics) msg << "\n  - " << d;
    throw Error(ErrorCode::kDomain, msg.str());
  }
  return scene;
}

double default_facing_azimuth_deg(const Position3& tis, const Position3& user) {
  const Vec3 d = user - tis;
  return rad2deg(std::atan2(d.y(), d.x())) - 45.0;
}

Scene with_planar_layout(const Scene& base, double distance_m,
                         const std::vector<double>& azimuths_deg) {
  if (base.tis_arrays.empty()) {
    throw Error(ErrorCode::kDomain, "base scene has no template TIS array");
  }
  const TisArray& tmpl = base.tis_arrays.front();
  Scene out = base;
  out.tis_arrays.clear();
  const Position3& u = base.user.position;
  for (std::size_t j = 0; j < azimuths_deg.size(); ++j) {
    TisArray t = tmpl;
    t.id = static_cast<int>(j) + 1;
    t.time_slot = t.id;
    const double az = deg2rad(azimuths_deg[j]);
    t.position = u + Vec3(distance_m * std::cos(az), distance_m * std::sin(az), 0.0);
    t.facing_azimuth_deg = default_facing_azimuth_deg(t.position, u);
    out.tis_arrays.push_back(t);
  }
  return out;
}

std::vector<Scene> rotation_scenario(const Scene& base, const RotationParams& params) {
  if (params.turns < 0) throw Error(ErrorCode::kDomain, "turns must be >= 0");
  if (params.step_deg_per_tis.empty()) {
    throw Error(ErrorCode::kDomain, "need at least one rotating TIS step");
  }
  if (!(params.fixed_distance_m > 0.0) || !(params.radius_m > 0.0)) {
    throw Error(ErrorCode::kDomain, "radius_m and fixed_distance_m must be > 0");
  }
  for (double step : params.step_deg_per_tis) {
    if (std::abs(step) * params.turns > 90.0 + 1e-9) {
      throw Error(ErrorCode::kDomain,
                  "step/turn combination exceeds 90 degrees of total rotation");
    }
  }
  if (base.tis_arrays.empty()) {
    throw Error(ErrorCode::kDomain, "base scene has no template TIS array");
  }

  const std::size_t count = params.step_deg_per_tis.size() + 1;
  const TisArray& tmpl = base.tis_arrays.front();
  const Position3& u = base.user.position;

  std::vector<Scene> scenes;
  scenes.reserve(static_cast<std::size_t>(params.turns) + 1);
  for (int turn = 0; turn <= params.turns; ++turn) {
    const double frac = params.turns == 0 ? 0.0 : static_cast<double>(turn) / params.turns;
    const double approach =
        params.fixed_distance_m + (params.radius_m - params.fixed_distance_m) * frac;
    Scene s = base;
    s.tis_arrays.clear();
    for (std::size_t j = 0; j < count; ++j) {
      TisArray t = tmpl;
      t.id = static_cast<int>(j) + 1;
      t.time_slot = t.id;
      const double step = j == 0 ? 0.0 : params.step_deg_per_tis[j - 1];
      const double az = deg2rad(params.start_azimuth_deg - step * turn);
      const double r = (j + 1 == count) ? params.fixed_distance_m : approach;
      t.position = u + Vec3(r * std::cos(az), r * std::sin(az), 0.0);
      t.facing_azimuth_deg = default_facing_azimuth_deg(t.position, u);
      s.tis_arrays.push_back(t);
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

}  // namespace tsipa
