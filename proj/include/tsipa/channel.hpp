#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "tsipa/scene.hpp"

namespace tsipa {

using cdouble = std::complex<double>;

enum class Link { kSatToTis, kTisToUser };

struct LargeScaleGain {
  double value;  ///< dimensionless power gain
  Link link;
};

/// Free-space gain G (lambda / (4 pi d))^2 with G given in dB.
LargeScaleGain large_scale(double gain_db, double wavelength_m, double distance_m,
                           Link link = Link::kSatToTis);

/// Uniform linear array response, unit norm:
/// entry q = exp(-j 2 pi d / lambda * q * sin(angle)) / sqrt(n).
Eigen::VectorXcd array_factor(int n_antennas, double spacing_m, double wavelength_m,
                              double angle_rad);

/// K x M (sat->TIS) or W x K (TIS->user) small-scale channel.
struct ChannelMatrix {
  Eigen::MatrixXcd entries;
  Link link;
};

/// I.i.d. shadowed-Rician samples: CN(0, 2b) scatter plus a LoS term of
/// uniform phase whose power is Gamma(m, omega/m) (Nakagami-m, mean omega).
ChannelMatrix sample_shadowed_rician(const ShadowedRicianParams& params, Eigen::Index rows,
                                     Eigen::Index cols, std::uint64_t seed,
                                     Link link = Link::kSatToTis);

/// Geometry of one side of a link: element count and spacing.
struct ArraySide {
  int elements;
  double spacing_m;
};

/// C .* a_r(arrival) a_t^H(pi/2 - arrival); `rx` sizes the rows, `tx` the
/// columns. Throws kDomain when C does not have the output dimensions.
ChannelMatrix structured_channel(const Eigen::MatrixXcd& constants, double arrival_rad,
                                 ArraySide rx, ArraySide tx, double wavelength_m,
                                 Link link = Link::kSatToTis);

struct TransmissionMatrix {
  Eigen::VectorXcd diagonal;  ///< beta_k exp(j theta_k)
};

TransmissionMatrix make_transmission(const std::vector<TransmissionCoeff>& coeffs);

/// The TIS phase configurations cycled within one time slot. Entry 0 is the
/// configured matrix; entries 1.. add known pseudo-random element phases
/// drawn from the scene seed, so both synthesis and estimation see the same
/// set.
std::vector<TransmissionMatrix> pilot_transmissions(const Scene& scene, const TisArray& tis);

/// Columns are unit-norm receive steering vectors at `angles_rad`.
Eigen::MatrixXcd steering_codebook(int n_antennas, double spacing_m, double wavelength_m,
                                   const std::vector<double>& angles_rad);

struct SignalInputs {
  Eigen::MatrixXcd codebook;                   ///< W x D, unit-norm columns
  std::vector<Eigen::VectorXcd> precoders;     ///< one per satellite, length M_i
  std::vector<cdouble> symbols;                ///< s_ir, one per satellite
  double sat_angle_rad = 0.0;                  ///< gamma_sr, common to all satellites
  double user_angle_rad = 0.0;                 ///< gamma_ru
  double noise_power_w = 0.0;                  ///< per-entry E|n|^2
  std::vector<Eigen::MatrixXcd> sat_constants; ///< C_ir (K x M_i); empty = all ones
  Eigen::MatrixXcd user_constants;             ///< C_ru (W x K); empty = all ones
};

/// Observation of the active TIS: for each pilot configuration t the
/// D-vector  sum_i W^H h_ru Psi_t h_ir p_i sqrt(L_ir L_ru P_T) s_ir + n,
/// stacked configuration-major (length D * T). Only `active_tis` contributes.
Eigen::VectorXcd received_signal(const Scene& scene, int active_tis, const SignalInputs& in,
                                 std::uint64_t seed);

/// Default inputs: codebook of receive steering vectors on `codebook_angles`,
/// matched precoders a_t(pi/2 - sat_angle), unit pilots, channel constants per
/// the scene's constant model. Noise power is left at zero.
SignalInputs default_signal_inputs(const Scene& scene, int active_tis, double sat_angle_rad,
                                   double user_angle_rad,
                                   const std::vector<double>& codebook_angles,
                                   std::uint64_t seed);

/// Noise power giving `snr_db` against the mean entry power of `clean`.
double noise_power_for_snr(const Eigen::VectorXcd& clean, double snr_db);

}  // namespace tsipa
