#include "tsipa/aoa_estimator.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <random>

#include "tsipa/errors.hpp"
#include "tsipa/random.hpp"

namespace tsipa {

namespace {

constexpr double kAngleSlack = 1e-12;

void check_angle(double rad, const char* what) {
  if (!(rad >= -kAngleSlack && rad <= kPi / 2.0 + kAngleSlack)) {
    throw Error(ErrorCode::kDomain, std::string(what) + " outside [0, pi/2]", rad);
  }
}

Eigen::VectorXcd incident_at(const DictionaryModel& m, double a_rad) {
  const int K = m.tis_side.elements;
  const Eigen::VectorXcd ar = array_factor(K, m.tis_side.spacing_m, m.wavelength_m, a_rad);
  Eigen::VectorXcd incident = Eigen::VectorXcd::Zero(K);
  for (const auto& s : m.sources) {
    const Eigen::VectorXcd at =
        array_factor(s.side.elements, s.side.spacing_m, m.wavelength_m, kPi / 2.0 - a_rad);
    const Eigen::MatrixXcd h = s.constants.cwiseProduct(ar * at.adjoint());
    incident += h * s.precoder * s.weight;
  }
  return incident;
}

Eigen::MatrixXcd combiner_at(const DictionaryModel& m, double b_rad) {
  const Eigen::VectorXcd ar =
      array_factor(m.user_side.elements, m.user_side.spacing_m, m.wavelength_m, b_rad);
  const Eigen::VectorXcd at =
      array_factor(m.tis_side.elements, m.tis_side.spacing_m, m.wavelength_m, kPi / 2.0 - b_rad);
  return m.codebook.adjoint() * m.user_constants.cwiseProduct(ar * at.adjoint());
}

Eigen::VectorXcd stack(const DictionaryModel& m, const Eigen::MatrixXcd& combiner,
                       const Eigen::VectorXcd& incident) {
  const Eigen::Index D = combiner.rows();
  Eigen::VectorXcd col(D * static_cast<Eigen::Index>(m.pilot_psi.size()));
  for (std::size_t t = 0; t < m.pilot_psi.size(); ++t) {
    col.segment(static_cast<Eigen::Index>(t) * D, D) =
        combiner * m.pilot_psi[t].cwiseProduct(incident);
  }
  return col;
}

std::vector<double> codebook_angles(int rx_antennas) {
  if (rx_antennas <= 1) return {0.0};
  std::vector<double> angles;
  for (int d = 0; d < rx_antennas; ++d) {
    angles.push_back(kPi / 2.0 * d / (rx_antennas - 1));
  }
  return angles;
}

}  // namespace

AngleGrid AngleGrid::uniform(double lo_rad, double hi_rad, double step_rad) {
  if (!(step_rad > 0.0)) throw Error(ErrorCode::kDomain, "grid step must be > 0", step_rad);
  check_angle(lo_rad, "grid lower bound");
  check_angle(hi_rad, "grid upper bound");
  if (hi_rad < lo_rad) throw Error(ErrorCode::kDomain, "grid upper bound below lower bound");
  AngleGrid g;
  g.resolution_rad = step_rad;
  const auto n = static_cast<long>(std::floor((hi_rad - lo_rad) / step_rad + 0.5));
  for (long i = 0; i <= n; ++i) {
    g.values_rad.push_back(std::min(lo_rad + static_cast<double>(i) * step_rad, kPi / 2.0));
  }
  return g;
}

AngleGrid AngleGrid::degrees(double step_deg) {
  return uniform(0.0, kPi / 2.0, deg2rad(step_deg));
}

DictionaryModel make_dictionary_model(const Scene& scene, int tis_id, const SignalInputs& in) {
  const TisArray& tis = scene.tis(tis_id);
  const auto& ch = scene.channel;
  const int K = tis.elements;
  const int W = scene.user.rx_antennas;

  DictionaryModel m;
  m.codebook = in.codebook;
  for (const auto& psi : pilot_transmissions(scene, tis)) m.pilot_psi.push_back(psi.diagonal);
  m.tis_side = {K, tis.element_spacing_m};
  m.user_side = {W, scene.user.antenna_spacing_m};
  m.wavelength_m = ch.carrier_wavelength_m;
  m.user_constants = in.user_constants.size() == 0 ? Eigen::MatrixXcd::Ones(W, K) : in.user_constants;

  const double l_ru = large_scale(ch.rx_gain_db, m.wavelength_m,
                                  euclidean_distance(tis.position, scene.user.position),
                                  Link::kTisToUser)
                          .value;
  for (std::size_t i = 0; i < scene.satellites.size(); ++i) {
    const auto& sat = scene.satellites[i];
    const double l_ir =
        large_scale(ch.tx_gain_db, m.wavelength_m, euclidean_distance(sat.position, tis.position))
            .value;
    DictionaryModel::Source s;
    s.side = {sat.tx_antennas, sat.antenna_spacing_m};
    s.precoder = in.precoders.at(i);
    s.weight = std::sqrt(l_ir * l_ru * ch.tx_power_w) * in.symbols.at(i);
    s.constants = in.sat_constants.empty() ? Eigen::MatrixXcd::Ones(K, sat.tx_antennas)
                                           : in.sat_constants[i];
    m.sources.push_back(std::move(s));
  }
  return m;
}

Eigen::VectorXcd dictionary_column(const DictionaryModel& model, double a_rad, double b_rad) {
  check_angle(a_rad, "satellite-side angle");
  check_angle(b_rad, "user-side angle");
  return stack(model, combiner_at(model, b_rad), incident_at(model, a_rad));
}

double projection_residual(const Eigen::VectorXcd& y, const Eigen::VectorXcd& d) {
  const double dd = d.squaredNorm();
  if (dd == 0.0) return y.squaredNorm();
  const cdouble coef = d.dot(y) / dd;  // Eigen's dot conjugates the first argument
  return (y - d * coef).squaredNorm();
}

AoaEstimate estimate_aoa(const Eigen::VectorXcd& y, const AngleGrid& sat_grid,
                         const AngleGrid& user_grid, const DictionaryModel& model) {
  if (sat_grid.values_rad.empty() || user_grid.values_rad.empty()) {
    throw Error(ErrorCode::kDomain, "estimate_aoa: empty angle grid");
  }
  if (y.squaredNorm() == 0.0) {
    throw Error(ErrorCode::kDegenerateInput, "estimate_aoa: observation is all zero");
  }

  std::vector<Eigen::MatrixXcd> combiners;
  combiners.reserve(user_grid.values_rad.size());
  for (double b : user_grid.values_rad) {
    check_angle(b, "user-side angle");
    combiners.push_back(combiner_at(model, b));
  }

  AoaEstimate best;
  best.residual = std::numeric_limits<double>::infinity();
  for (double a : sat_grid.values_rad) {
    check_angle(a, "satellite-side angle");
    const Eigen::VectorXcd incident = incident_at(model, a);
    for (std::size_t j = 0; j < combiners.size(); ++j) {
      const double r = projection_residual(y, stack(model, combiners[j], incident));
      if (r < best.residual) {
        best = {user_grid.values_rad[j], a, r};
      }
    }
  }
  return best;
}

double hpbw_upa(int elements, double spacing_over_lambda, double theta0_rad) {
  if (elements <= 0 || !is_perfect_square(elements)) {
    throw Error(ErrorCode::kDomain, "hpbw_upa: K must be a positive perfect square", elements);
  }
  if (!(spacing_over_lambda > 0.0)) {
    throw Error(ErrorCode::kDomain, "hpbw_upa: spacing must be > 0", spacing_over_lambda);
  }
  if (!(theta0_rad >= 0.0 && theta0_rad < kPi / 2.0)) {
    throw Error(ErrorCode::kDomain, "hpbw_upa: theta0 must be in [0, pi/2)", theta0_rad);
  }
  const double c = std::cos(theta0_rad);
  if (!(c > 0.0)) throw Error(ErrorCode::kDomain, "hpbw_upa: broadside singularity", theta0_rad);
  return 102.0 / (std::sqrt(static_cast<double>(elements)) * spacing_over_lambda * c);
}

double hpbw_planar(double theta0_rad, double phi0_rad, double dtheta_x_deg, double dtheta_y_deg) {
  if (!(dtheta_x_deg > 0.0 && dtheta_y_deg > 0.0)) {
    throw Error(ErrorCode::kDomain, "hpbw_planar: beam widths must be > 0");
  }
  if (!(theta0_rad >= 0.0 && theta0_rad < kPi / 2.0)) {
    throw Error(ErrorCode::kDomain, "hpbw_planar: theta0 must be in [0, pi/2)", theta0_rad);
  }
  const double c = std::cos(phi0_rad);
  const double s = std::sin(phi0_rad);
  const double inv = c * c / (dtheta_x_deg * dtheta_x_deg) + s * s / (dtheta_y_deg * dtheta_y_deg);
  return 1.0 / (std::cos(theta0_rad) * std::sqrt(inv));
}

Vec3 apply_ambiguity(const Vec3& direction, double halfwidth_rad, AmbiguityMode mode,
                     std::uint64_t seed) {
  if (!(halfwidth_rad >= 0.0)) {
    throw Error(ErrorCode::kDomain, "apply_ambiguity: halfwidth must be >= 0", halfwidth_rad);
  }
  if (mode == AmbiguityMode::kNone) return direction;
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-halfwidth_rad, halfwidth_rad);
  const double d_elev = u(rng);
  const double d_azim = u(rng);
  const ElevationAzimuth ang = angles_from_direction(direction);
  return direction_from_angles(ang.elevation_rad + d_elev, ang.azimuth_rad + d_azim).normalized();
}

double ambiguity_halfwidth_rad(const Scene& scene, const TisArray& tis, const Vec3& direction) {
  switch (scene.noise.aoa_ambiguity_mode) {
    case AmbiguityMode::kNone:
      return 0.0;
    case AmbiguityMode::kFixedDeg:
      return deg2rad(scene.noise.aoa_ambiguity_deg) / 2.0;
    case AmbiguityMode::kHpbwUniform: {
      const double theta0 = std::abs(angles_from_direction(direction).elevation_rad);
      const double zeta = tis.element_spacing_m / scene.channel.carrier_wavelength_m;
      return deg2rad(hpbw_upa(tis.elements, zeta, theta0)) / 2.0;
    }
  }
  return 0.0;
}

RayEstimate ray_from_ambiguity(const Scene& scene, int tis_id, const Position3& origin,
                               std::uint64_t seed) {
  const TisArray& tis = scene.tis(tis_id);
  const Vec3 offset = scene.user.position - tis.position;
  if (!(offset.norm() > 0.0)) {
    throw Error(ErrorCode::kDegenerateInput, "TIS " + std::to_string(tis_id) + " coincides with the user");
  }
  const Vec3 truth = offset.normalized();
  RayEstimate ray;
  ray.tis_id = tis_id;
  ray.origin = origin;
  ray.ambiguity_halfwidth_rad = ambiguity_halfwidth_rad(scene, tis, truth);
  ray.direction = apply_ambiguity(truth, ray.ambiguity_halfwidth_rad,
                                  scene.noise.aoa_ambiguity_mode, seed);
  const ElevationAzimuth ang = angles_from_direction(ray.direction);
  ray.elevation_rad = ang.elevation_rad;
  ray.azimuth_rad = ang.azimuth_rad;
  return ray;
}

RayEstimate ray_from_dictionary(const Scene& scene, int tis_id, const Position3& origin,
                                const AngleGrid& grid, std::uint64_t seed) {
  const TisArray& tis = scene.tis(tis_id);
  const Vec3 offset = scene.user.position - tis.position;
  if (!(offset.norm() > 0.0)) {
    throw Error(ErrorCode::kDegenerateInput, "TIS " + std::to_string(tis_id) + " coincides with the user");
  }
  const ElevationAzimuth truth = angles_from_direction(offset);
  const double facing = deg2rad(tis.facing_azimuth_deg);
  const double cuts[2] = {wrap_pi(truth.azimuth_rad - facing), -truth.elevation_rad};
  for (double c : cuts) check_angle(c, "TIS-to-user angle relative to the mount");

  const double sat_angle = deg2rad(tis.incidence_deg);
  const auto angles = codebook_angles(scene.user.rx_antennas);
  double estimates[2] = {0.0, 0.0};
  for (int cut = 0; cut < 2; ++cut) {
    const std::uint64_t cut_seed = derive_seed(seed, static_cast<std::uint64_t>(cut));
    SignalInputs in = default_signal_inputs(scene, tis_id, sat_angle, cuts[cut], angles,
                                            derive_seed(cut_seed, 0));
    if (scene.channel.snr_db) {
      const Eigen::VectorXcd clean = received_signal(scene, tis_id, in, 0);
      in.noise_power_w = noise_power_for_snr(clean, *scene.channel.snr_db);
    }
    const Eigen::VectorXcd y = received_signal(scene, tis_id, in, derive_seed(cut_seed, 1));
    const DictionaryModel model = make_dictionary_model(scene, tis_id, in);
    estimates[cut] = estimate_aoa(y, grid, grid, model).user_angle_rad;
  }

  RayEstimate ray;
  ray.tis_id = tis_id;
  ray.origin = origin;
  ray.elevation_rad = -estimates[1];
  ray.azimuth_rad = wrap_pi(facing + estimates[0]);
  ray.direction = direction_from_angles(ray.elevation_rad, ray.azimuth_rad);
  ray.ambiguity_halfwidth_rad = grid.resolution_rad / 2.0;
  return ray;
}

void write_rays_csv(std::span<const RayEstimate> rays, std::ostream& out) {
  out << "tis,ox,oy,oz,dx,dy,dz,elev_deg,azim_deg,halfwidth_deg\n";
  out << std::setprecision(17);
  for (const auto& r : rays) {
    out << r.tis_id << ',' << r.origin.x() << ',' << r.origin.y() << ',' << r.origin.z() << ','
        << r.direction.x() << ',' << r.direction.y() << ',' << r.direction.z() << ','
        << rad2deg(r.elevation_rad) << ',' << rad2deg(r.azimuth_rad) << ','
        << rad2deg(r.ambiguity_halfwidth_rad) << '\n';
  }
}

}  // namespace tsipa
