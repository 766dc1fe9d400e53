#include "tsipa/scene_io.hpp"

#include <fstream>
#include <sstream>

#include "tsipa/errors.hpp"

namespace tsipa {

using nlohmann::json;

namespace {

json vec_json(const Position3& p) { return json::array({p.x(), p.y(), p.z()}); }

Position3 vec_from(const json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) {
    throw Error(ErrorCode::kIo, std::string("field '") + key + "' must be a 3-element array");
  }
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

const char* mode_name(AmbiguityMode m) {
  switch (m) {
    case AmbiguityMode::kNone: return "none";
    case AmbiguityMode::kHpbwUniform: return "hpbw_uniform";
    case AmbiguityMode::kFixedDeg: return "fixed_deg";
  }
  return "none";
}

AmbiguityMode mode_from(const std::string& s) {
  if (s == "none") return AmbiguityMode::kNone;
  if (s == "hpbw_uniform") return AmbiguityMode::kHpbwUniform;
  if (s == "fixed_deg") return AmbiguityMode::kFixedDeg;
  throw Error(ErrorCode::kIo, "unknown aoa ambiguity mode '" + s + "'");
}

json rician_json(const ShadowedRicianParams& p) {
  return {{"b", p.b}, {"m", p.m}, {"omega", p.omega}};
}

ShadowedRicianParams rician_from(const json& j) {
  ShadowedRicianParams p;
  p.b = value_or(j, "b", p.b);
  p.m = value_or(j, "m", p.m);
  p.omega = value_or(j, "omega", p.omega);
  return p;
}

}  // namespace

json scene_to_json(const Scene& scene) {
  json j;
  j["rng_seed"] = scene.rng_seed;

  const auto& u = scene.user;
  j["user"] = {{"position_m", vec_json(u.position)},
               {"clock_offset_s", u.clock_offset_s},
               {"rx_antennas", u.rx_antennas},
               {"antenna_spacing_m", u.antenna_spacing_m}};

  json sats = json::array();
  for (const auto& s : scene.satellites) {
    sats.push_back({{"id", s.id},
                    {"position_m", vec_json(s.position)},
                    {"clock_offset_s", s.clock_offset_s},
                    {"emit_time_s", s.emit_time_s},
                    {"wavelength_m", s.wavelength_m},
                    {"tx_antennas", s.tx_antennas},
                    {"antenna_spacing_m", s.antenna_spacing_m}});
  }
  j["satellites"] = std::move(sats);

  json arrays = json::array();
  for (const auto& t : scene.tis_arrays) {
    json amps = json::array();
    json phases = json::array();
    for (const auto& c : t.transmission) {
      amps.push_back(c.amplitude);
      phases.push_back(c.phase_rad);
    }
    arrays.push_back({{"id", t.id},
                      {"position_m", vec_json(t.position)},
                      {"elements", t.elements},
                      {"element_spacing_m", t.element_spacing_m},
                      {"time_slot", t.time_slot},
                      {"facing_azimuth_deg", t.facing_azimuth_deg},
                      {"incidence_deg", t.incidence_deg},
                      {"transmission_amplitudes", std::move(amps)},
                      {"transmission_phases_rad", std::move(phases)}});
  }
  j["tis_arrays"] = std::move(arrays);

  const auto& n = scene.noise;
  j["noise"] = {{"code_sigma_m", n.code_sigma_m},
                {"carrier_sigma_m", n.carrier_sigma_m},
                {"aoa_ambiguity_mode", mode_name(n.aoa_ambiguity_mode)},
                {"aoa_ambiguity_deg", n.aoa_ambiguity_deg}};

  const auto& c = scene.channel;
  j["channel"] = {{"carrier_wavelength_m", c.carrier_wavelength_m},
                  {"tx_power_w", c.tx_power_w},
                  {"tx_gain_db", c.tx_gain_db},
                  {"rx_gain_db", c.rx_gain_db},
                  {"snr_db", c.snr_db ? json(*c.snr_db) : json(nullptr)},
                  {"pilot_configs", c.pilot_configs},
                  {"constants", c.constants == ConstantModel::kAllOnes ? "all_ones"
                                                                       : "shadowed_rician"},
                  {"sat_to_tis", rician_json(c.sat_to_tis)},
                  {"tis_to_user", rician_json(c.tis_to_user)}};
  return j;
}

Scene scene_from_json(const json& j) {
  try {
    Scene scene;
    scene.rng_seed = value_or<std::uint64_t>(j, "rng_seed", 0);

    const auto& ju = j.at("user");
    scene.user.position = vec_from(ju, "position_m");
    scene.user.clock_offset_s = value_or(ju, "clock_offset_s", 0.0);
    scene.user.rx_antennas = value_or(ju, "rx_antennas", 1);
    scene.user.antenna_spacing_m = value_or(ju, "antenna_spacing_m", 0.0);

    for (const auto& js : j.at("satellites")) {
      SatelliteEphemeris s;
      s.id = js.at("id").get<int>();
      s.position = vec_from(js, "position_m");
      s.clock_offset_s = value_or(js, "clock_offset_s", 0.0);
      s.emit_time_s = value_or(js, "emit_time_s", 0.0);
      s.wavelength_m = js.at("wavelength_m").get<double>();
      s.tx_antennas = value_or(js, "tx_antennas", 1);
      s.antenna_spacing_m = value_or(js, "antenna_spacing_m", 0.0);
      scene.satellites.push_back(s);
    }

    for (const auto& jt : j.at("tis_arrays")) {
      TisArray t;
      t.id = jt.at("id").get<int>();
      t.position = vec_from(jt, "position_m");
      t.elements = jt.at("elements").get<int>();
      t.element_spacing_m = jt.at("element_spacing_m").get<double>();
      t.time_slot = value_or(jt, "time_slot", t.id);
      t.facing_azimuth_deg = value_or(jt, "facing_azimuth_deg", 0.0);
      t.incidence_deg = value_or(jt, "incidence_deg", 45.0);
      auto amps = jt.find("transmission_amplitudes");
      auto phases = jt.find("transmission_phases_rad");
      if (amps == jt.end() && phases == jt.end()) {
        t.transmission = identity_transmission(t.elements);
      } else {
        if (amps == jt.end() || phases == jt.end() || amps->size() != phases->size()) {
          throw Error(ErrorCode::kIo, "TIS " + std::to_string(t.id) +
                                          ": amplitude and phase lists must both be present "
                                          "with equal length");
        }
        for (std::size_t k = 0; k < amps->size(); ++k) {
          t.transmission.push_back({(*amps)[k].get<double>(), (*phases)[k].get<double>()});
        }
      }
      scene.tis_arrays.push_back(std::move(t));
    }

    if (auto it = j.find("noise"); it != j.end()) {
      const auto& jn = *it;
      scene.noise.code_sigma_m = value_or(jn, "code_sigma_m", 0.0);
      scene.noise.carrier_sigma_m = value_or(jn, "carrier_sigma_m", 0.0);
      scene.noise.aoa_ambiguity_mode =
          mode_from(value_or<std::string>(jn, "aoa_ambiguity_mode", "none"));
      scene.noise.aoa_ambiguity_deg = value_or(jn, "aoa_ambiguity_deg", 0.0);
    }

    if (auto it = j.find("channel"); it != j.end()) {
      const auto& jc = *it;
      auto& c = scene.channel;
      c.carrier_wavelength_m = value_or(jc, "carrier_wavelength_m", c.carrier_wavelength_m);
      c.tx_power_w = value_or(jc, "tx_power_w", c.tx_power_w);
      c.tx_gain_db = value_or(jc, "tx_gain_db", c.tx_gain_db);
      c.rx_gain_db = value_or(jc, "rx_gain_db", c.rx_gain_db);
      if (auto s = jc.find("snr_db"); s != jc.end() && !s->is_null()) {
        c.snr_db = s->get<double>();
      }
      c.pilot_configs = value_or(jc, "pilot_configs", c.pilot_configs);
      const auto constants = value_or<std::string>(jc, "constants", "all_ones");
      if (constants == "all_ones") {
        c.constants = ConstantModel::kAllOnes;
      } else if (constants == "shadowed_rician") {
        c.constants = ConstantModel::kShadowedRician;
      } else {
        throw Error(ErrorCode::kIo, "unknown channel constants model '" + constants + "'");
      }
      if (auto r = jc.find("sat_to_tis"); r != jc.end()) c.sat_to_tis = rician_from(*r);
      if (auto r = jc.find("tis_to_user"); r != jc.end()) c.tis_to_user = rician_from(*r);
    }
    return scene;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("malformed scene: ") + e.what());
  }
}

std::string write_scene_string(const Scene& scene) { return scene_to_json(scene).dump(2); }

Scene read_scene_string(const std::string& text) {
  try {
    return scene_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kIo, std::string("scene parse error: ") + e.what());
  }
}

void write_scene_file(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << write_scene_string(scene) << '\n';
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kIo, path.string() + ": " + e.what());
  }
}

Scene read_scene_file(const std::filesystem::path& path) {
  return scene_from_json(read_json_file(path));
}

}  // namespace tsipa
