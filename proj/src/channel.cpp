#include "tsipa/channel.hpp"

#include <cmath>
#include <random>

#include "tsipa/errors.hpp"
#include "tsipa/random.hpp"

namespace tsipa {

LargeScaleGain large_scale(double gain_db, double wavelength_m, double distance_m, Link link) {
  if (!(distance_m > 0.0)) {
    throw Error(ErrorCode::kDomain, "large_scale: distance must be > 0");
  }
  const double gain = std::pow(10.0, gain_db / 10.0);
  const double ratio = wavelength_m / (4.0 * kPi * distance_m);
  return {gain * ratio * ratio, link};
}

Eigen::VectorXcd array_factor(int n_antennas, double spacing_m, double wavelength_m,
                              double angle_rad) {
  Eigen::VectorXcd a(n_antennas);
  const double step = 2.0 * kPi * spacing_m / wavelength_m * std::sin(angle_rad);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n_antennas));
  for (int q = 0; q < n_antennas; ++q) {
    a[q] = std::polar(norm, -step * q);
  }
  return a;
}

ChannelMatrix sample_shadowed_rician(const ShadowedRicianParams& params, Eigen::Index rows,
                                     Eigen::Index cols, std::uint64_t seed, Link link) {
  Rng rng(seed);
  std::normal_distribution<double> scatter(0.0, std::sqrt(params.b));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::gamma_distribution<double> los_power(params.m, params.omega / params.m);

  Eigen::MatrixXcd h(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = scatter(rng);
      const double im = scatter(rng);
      const double amp = params.omega > 0.0 ? std::sqrt(los_power(rng)) : 0.0;
      h(r, c) = cdouble(re, im) + std::polar(amp, phase(rng));
    }
  }
  return {std::move(h), link};
}

ChannelMatrix structured_channel(const Eigen::MatrixXcd& constants, double arrival_rad,
                                 ArraySide rx, ArraySide tx, double wavelength_m, Link link) {
  if (constants.rows() != rx.elements || constants.cols() != tx.elements) {
    throw Error(ErrorCode::kDomain, "structured_channel: constant matrix is " +
                                        std::to_string(constants.rows()) + "x" +
                                        std::to_string(constants.cols()) + ", expected " +
                                        std::to_string(rx.elements) + "x" +
                                        std::to_string(tx.elements));
  }
  const Eigen::VectorXcd ar = array_factor(rx.elements, rx.spacing_m, wavelength_m, arrival_rad);
  const Eigen::VectorXcd at =
      array_factor(tx.elements, tx.spacing_m, wavelength_m, kPi / 2.0 - arrival_rad);
  Eigen::MatrixXcd h = constants.cwiseProduct(ar * at.adjoint());
  return {std::move(h), link};
}

TransmissionMatrix make_transmission(const std::vector<TransmissionCoeff>& coeffs) {
  TransmissionMatrix psi;
  psi.diagonal.resize(static_cast<Eigen::Index>(coeffs.size()));
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    psi.diagonal[static_cast<Eigen::Index>(k)] =
        std::polar(coeffs[k].amplitude, coeffs[k].phase_rad);
  }
  return psi;
}

std::vector<TransmissionMatrix> pilot_transmissions(const Scene& scene, const TisArray& tis) {
  const TransmissionMatrix base = make_transmission(tis.transmission);
  std::vector<TransmissionMatrix> configs{base};
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  for (int t = 1; t < scene.channel.pilot_configs; ++t) {
    Rng rng(derive_seed(scene.rng_seed ^ static_cast<std::uint64_t>(SceneStream::kPilotPhases),
                        static_cast<std::uint64_t>(tis.id) * 4096u + static_cast<std::uint64_t>(t)));
    TransmissionMatrix psi = base;
    for (Eigen::Index k = 0; k < psi.diagonal.size(); ++k) {
      psi.diagonal[k] *= std::polar(1.0, phase(rng));
    }
    configs.push_back(std::move(psi));
  }
  return configs;
}

Eigen::MatrixXcd steering_codebook(int n_antennas, double spacing_m, double wavelength_m,
                                   const std::vector<double>& angles_rad) {
  Eigen::MatrixXcd w(n_antennas, static_cast<Eigen::Index>(angles_rad.size()));
  for (std::size_t d = 0; d < angles_rad.size(); ++d) {
    w.col(static_cast<Eigen::Index>(d)) =
        array_factor(n_antennas, spacing_m, wavelength_m, angles_rad[d]);
  }
  return w;
}

Eigen::VectorXcd received_signal(const Scene& scene, int active_tis, const SignalInputs& in,
                                 std::uint64_t seed) {
  const TisArray& tis = scene.tis(active_tis);
  const auto& ch = scene.channel;
  const double lambda = ch.carrier_wavelength_m;
  const int K = tis.elements;
  const int W = scene.user.rx_antennas;
  const std::size_t I = scene.satellites.size();

  if (in.codebook.rows() != W) {
    throw Error(ErrorCode::kDomain, "received_signal: codebook rows must equal rx_antennas");
  }
  if (in.precoders.size() != I || in.symbols.size() != I) {
    throw Error(ErrorCode::kDomain, "received_signal: need one precoder and symbol per satellite");
  }
  if (!in.sat_constants.empty() && in.sat_constants.size() != I) {
    throw Error(ErrorCode::kDomain, "received_signal: need one C_ir per satellite");
  }

  const Eigen::MatrixXcd c_ru =
      in.user_constants.size() == 0 ? Eigen::MatrixXcd::Ones(W, K) : in.user_constants;
  const ChannelMatrix h_ru = structured_channel(c_ru, in.user_angle_rad,
                                                {W, scene.user.antenna_spacing_m},
                                                {K, tis.element_spacing_m}, lambda,
                                                Link::kTisToUser);
  const double l_ru =
      large_scale(ch.rx_gain_db, lambda, euclidean_distance(tis.position, scene.user.position),
                  Link::kTisToUser)
          .value;

  // Sum over satellites of the TIS input  h_ir p_i sqrt(L_ir L_ru P_T) s_ir.
  Eigen::VectorXcd incident = Eigen::VectorXcd::Zero(K);
  for (std::size_t i = 0; i < I; ++i) {
    const auto& sat = scene.satellites[i];
    const int M = sat.tx_antennas;
    if (in.precoders[i].size() != M) {
      throw Error(ErrorCode::kDomain, "received_signal: precoder length must equal tx_antennas");
    }
    const Eigen::MatrixXcd c_ir =
        in.sat_constants.empty() ? Eigen::MatrixXcd::Ones(K, M) : in.sat_constants[i];
    const ChannelMatrix h_ir = structured_channel(c_ir, in.sat_angle_rad, {K, tis.element_spacing_m},
                                                  {M, sat.antenna_spacing_m}, lambda);
    const double l_ir =
        large_scale(ch.tx_gain_db, lambda, euclidean_distance(sat.position, tis.position)).value;
    const double scale = std::sqrt(l_ir * l_ru * ch.tx_power_w);
    incident += h_ir.entries * in.precoders[i] * (scale * in.symbols[i]);
  }

  const auto configs = pilot_transmissions(scene, tis);
  const Eigen::Index D = in.codebook.cols();
  const Eigen::MatrixXcd combiner = in.codebook.adjoint() * h_ru.entries;  // D x K
  Eigen::VectorXcd y(D * static_cast<Eigen::Index>(configs.size()));
  for (std::size_t t = 0; t < configs.size(); ++t) {
    y.segment(static_cast<Eigen::Index>(t) * D, D) =
        combiner * configs[t].diagonal.cwiseProduct(incident);
  }

  if (in.noise_power_w > 0.0) {
    Rng rng(seed);
    std::normal_distribution<double> n(0.0, std::sqrt(in.noise_power_w / 2.0));
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      const double re = n(rng);
      const double im = n(rng);
      y[k] += cdouble(re, im);
    }
  }
  return y;
}

SignalInputs default_signal_inputs(const Scene& scene, int active_tis, double sat_angle_rad,
                                   double user_angle_rad,
                                   const std::vector<double>& codebook_angles,
                                   std::uint64_t seed) {
  const TisArray& tis = scene.tis(active_tis);
  const auto& ch = scene.channel;
  SignalInputs in;
  in.sat_angle_rad = sat_angle_rad;
  in.user_angle_rad = user_angle_rad;
  in.codebook = steering_codebook(scene.user.rx_antennas, scene.user.antenna_spacing_m,
                                  ch.carrier_wavelength_m, codebook_angles);
  for (const auto& sat : scene.satellites) {
    in.precoders.push_back(array_factor(sat.tx_antennas, sat.antenna_spacing_m,
                                        ch.carrier_wavelength_m, kPi / 2.0 - sat_angle_rad));
    in.symbols.emplace_back(1.0, 0.0);
  }
  if (ch.constants == ConstantModel::kShadowedRician) {
    std::uint64_t stream = 0;
    for (const auto& sat : scene.satellites) {
      in.sat_constants.push_back(sample_shadowed_rician(ch.sat_to_tis, tis.elements,
                                                        sat.tx_antennas,
                                                        derive_seed(seed, ++stream))
                                     .entries);
    }
    in.user_constants = sample_shadowed_rician(ch.tis_to_user, scene.user.rx_antennas,
                                               tis.elements, derive_seed(seed, ++stream),
                                               Link::kTisToUser)
                            .entries;
  }
  return in;
}

double noise_power_for_snr(const Eigen::VectorXcd& clean, double snr_db) {
  if (clean.size() == 0) return 0.0;
  const double signal = clean.squaredNorm() / static_cast<double>(clean.size());
  return signal / std::pow(10.0, snr_db / 10.0);
}

}  // namespace tsipa
