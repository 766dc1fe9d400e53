// Writes the reference scenes and experiment specs into a directory
// (default: ./scenarios). The noise constants are the calibrated values that
// put the mean stage-1 TIS error near 1 m (CEM) and 0.7 m (CPM).

#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <nlohmann/json.hpp>

#include "tsipa/geometry.hpp"
#include "tsipa/random.hpp"
#include "tsipa/scene.hpp"
#include "tsipa/scene_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tsipa;

namespace {

constexpr double kCodeSigmaM = 0.37;
constexpr double kCarrierSigmaM = 0.26;
constexpr double kSatelliteRangeM = 2.0e7;
constexpr double kLayoutDistanceM = 6.0;

Scene reference_scene() {
  Scene s;
  s.rng_seed = 20240501;
  const double lambda = s.channel.carrier_wavelength_m;

  const std::array<double, 6> elev{25, 40, 55, 70, 35, 80};
  const std::array<double, 6> azim{10, 75, 140, 200, 260, 320};
  // Satellite clock offsets: uniform in +/-1 ms, drawn from the scene's build stream.
  Rng rng(derive_seed(s.rng_seed, static_cast<std::uint64_t>(SceneStream::kBuild)));
  std::uniform_real_distribution<double> clock(-1e-3, 1e-3);
  for (std::size_t i = 0; i < elev.size(); ++i) {
    SatelliteEphemeris sat;
    sat.id = static_cast<int>(i) + 1;
    sat.position = kSatelliteRangeM * direction_from_angles(deg2rad(elev[i]), deg2rad(azim[i]));
    sat.clock_offset_s = clock(rng);
    sat.emit_time_s = 345600.0;
    sat.wavelength_m = lambda;
    sat.tx_antennas = 4;
    sat.antenna_spacing_m = lambda / 2.0;
    s.satellites.push_back(sat);
  }

  s.user.position = Position3::Zero();
  s.user.clock_offset_s = 3.2e-4;
  s.user.rx_antennas = 4;
  s.user.antenna_spacing_m = lambda / 2.0;

  TisArray tmpl;
  tmpl.id = 1;
  tmpl.elements = 81;
  tmpl.element_spacing_m = lambda / 2.0;
  tmpl.transmission = identity_transmission(81);
  tmpl.time_slot = 1;
  tmpl.incidence_deg = 45.0;
  s.tis_arrays.push_back(tmpl);

  s.noise.code_sigma_m = kCodeSigmaM;
  s.noise.carrier_sigma_m = kCarrierSigmaM;
  s.noise.aoa_ambiguity_mode = AmbiguityMode::kFixedDeg;
  s.noise.aoa_ambiguity_deg = 22.0;
  return with_planar_layout(s, kLayoutDistanceM, {0.0, 30.0, 60.0, 90.0});
}

json spec(const std::string& id, const std::string& kind, const std::string& scene_file,
          int trials, std::uint64_t seed) {
  return {{"id", id},
          {"kind", kind},
          {"base_scene", scene_file},
          {"trials_per_point", trials},
          {"methods", {"cem", "cpm"}},
          {"optimizers", {"mvm", "nuom", "lsm", "gdm"}},
          {"seed", seed}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  f << j.dump(2) << '\n';
  std::cout << "wrote " << path.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path("scenarios");
  fs::create_directories(dir);

  const Scene ref = reference_scene();
  write_scene_file(ref, dir / "reference_scene.json");

  Scene distance_scene = ref;
  distance_scene.noise.aoa_ambiguity_deg = 7.5;
  write_scene_file(distance_scene, dir / "distance_scene.json");

  Scene clean = ref;
  clean.noise.code_sigma_m = 0.0;
  clean.noise.carrier_sigma_m = 0.0;
  clean.noise.aoa_ambiguity_mode = AmbiguityMode::kNone;
  clean.noise.aoa_ambiguity_deg = 0.0;
  write_scene_file(clean, dir / "noise_free_scene.json");

  json ambiguity = spec("ambiguity_sweep", "ambiguity_sweep", "reference_scene.json", 500, 101);
  ambiguity["sweep"] = {{"name", "ambiguity"}, {"units", "deg"}, {"start", 1.0}, {"stop", 25.0}, {"count", 25}};
  write_json(dir / "ambiguity_sweep.json", ambiguity);

  json distance = spec("distance_sweep", "distance_sweep", "distance_scene.json", 500, 202);
  distance["sweep"] = {{"name", "distance"}, {"units", "m"}, {"start", 4.0}, {"stop", 40.0}, {"count", 10}};
  distance["azimuths_deg"] = {0.0, 30.0, 60.0, 90.0};
  write_json(dir / "distance_sweep.json", distance);

  json rotation = spec("rotation_study", "rotation_study", "reference_scene.json", 200, 303);
  rotation["optimizers"] = json::array();
  rotation["rotation"] = {{"step_deg_per_tis", {3.0, 6.0, 9.0}},
                      {"turns", 10},
                      {"radius_m", 2.0},
                      {"fixed_distance_m", 4.0},
                      {"start_azimuth_deg", 90.0}};
  write_json(dir / "rotation_study.json", rotation);

  json single = spec("single_fix", "single_fix", "reference_scene.json", 50, 404);
  write_json(dir / "single_fix.json", single);

  json repeat = spec("repeat_fix", "repeat_fix", "reference_scene.json", 50, 505);
  write_json(dir / "repeat_fix.json", repeat);
  return 0;
}
