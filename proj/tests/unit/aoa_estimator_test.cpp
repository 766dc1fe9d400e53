#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tsipa/aoa_estimator.hpp"
#include "tsipa/csv_io.hpp"
#include "tsipa/errors.hpp"

using namespace tsipa;

namespace {

std::vector<double> codebook_angles() { return {0.0, kPi / 6, kPi / 3, kPi / 2}; }

struct Synth {
  Eigen::VectorXcd y;
  DictionaryModel model;
};

Synth synthesize(const Scene& s, int tis, double sat_deg, double user_deg) {
  const SignalInputs in =
      default_signal_inputs(s, tis, deg2rad(sat_deg), deg2rad(user_deg), codebook_angles(), 3);
  return {received_signal(s, tis, in, 0), make_dictionary_model(s, tis, in)};
}

}  // namespace

TEST(AngleGrid, UniformDegrees) {
  const AngleGrid g = AngleGrid::degrees(1.0);
  ASSERT_EQ(g.values_rad.size(), 91u);
  EXPECT_EQ(g.values_rad.front(), 0.0);
  EXPECT_NEAR(g.values_rad.back(), kPi / 2, 1e-15);
  for (std::size_t k = 1; k < g.values_rad.size(); ++k) EXPECT_GT(g.values_rad[k], g.values_rad[k - 1]);
}

TEST(AngleGrid, OutOfDomainRejected) {
  EXPECT_THROW(AngleGrid::uniform(-0.1, 1.0, 0.1), Error);
  EXPECT_THROW(AngleGrid::uniform(0.0, 2.0, 0.1), Error);
  EXPECT_THROW(AngleGrid::uniform(0.0, 1.0, 0.0), Error);
}

TEST(DictionaryColumn, MatchesForwardModelAtTrueAngles) {
  const Scene s = test::reference_scene();
  const Synth syn = synthesize(s, 2, 45.0, 33.0);
  const auto d = dictionary_column(syn.model, deg2rad(45.0), deg2rad(33.0));
  EXPECT_LT((d - syn.y).norm(), 1e-12 * syn.y.norm());
  EXPECT_LT(projection_residual(syn.y, d), 1e-20 * syn.y.squaredNorm());
}

TEST(DictionaryColumn, ZeroPowerGivesZeroColumn) {
  Scene s = test::reference_scene();
  s.channel.tx_power_w = 0.0;
  const Synth syn = synthesize(s, 1, 20.0, 30.0);
  EXPECT_EQ(dictionary_column(syn.model, 0.3, 0.5).norm(), 0.0);
}

TEST(DictionaryColumn, GlobalSymbolPhaseFactorsOut) {
  const Scene s = test::reference_scene();
  SignalInputs in = default_signal_inputs(s, 1, 0.3, 0.5, codebook_angles(), 3);
  const auto base = dictionary_column(make_dictionary_model(s, 1, in), 0.7, 0.2);
  const cdouble phase = std::polar(1.0, 1.1);
  for (auto& sym : in.symbols) sym *= phase;
  const auto rotated = dictionary_column(make_dictionary_model(s, 1, in), 0.7, 0.2);
  EXPECT_LT((rotated - base * phase).norm(), 1e-12 * base.norm());
}

TEST(DictionaryColumn, OutOfDomainRejected) {
  const Scene s = test::reference_scene();
  const Synth syn = synthesize(s, 1, 20.0, 30.0);
  EXPECT_THROW(dictionary_column(syn.model, -0.2, 0.5), Error);
  EXPECT_THROW(dictionary_column(syn.model, 0.2, 1.7), Error);
}

TEST(EstimateAoa, OnGridPair) {
  const Scene s = test::reference_scene();
  const Synth syn = synthesize(s, 1, 20.0, 30.0);
  const AngleGrid g = AngleGrid::degrees(1.0);
  const AoaEstimate est = estimate_aoa(syn.y, g, g, syn.model);
  EXPECT_NEAR(rad2deg(est.sat_angle_rad), 20.0, 1e-9);
  EXPECT_NEAR(rad2deg(est.user_angle_rad), 30.0, 1e-9);
}

TEST(EstimateAoa, OffGridQuantizesToNearest) {
  const Scene s = test::reference_scene();
  const Synth syn = synthesize(s, 1, 20.0, 30.4);
  const AngleGrid g = AngleGrid::degrees(1.0);
  const AngleGrid sat{{deg2rad(20.0)}, deg2rad(1.0)};
  const AoaEstimate est = estimate_aoa(syn.y, sat, g, syn.model);
  EXPECT_NEAR(rad2deg(est.user_angle_rad), 30.0, 1e-9);
}

TEST(EstimateAoa, OffGridJointSearchIsBruteForceMinimum) {
  const Scene s = test::reference_scene();
  const Synth syn = synthesize(s, 1, 20.0, 30.4);
  const AngleGrid g = AngleGrid::degrees(1.0);
  const AoaEstimate est = estimate_aoa(syn.y, g, g, syn.model);
  double best = std::numeric_limits<double>::infinity();
  for (double a : g.values_rad) {
    for (double b : g.values_rad) best = std::min(best, projection_residual(syn.y, dictionary_column(syn.model, a, b)));
  }
  EXPECT_EQ(est.residual, best);
  EXPECT_LE(std::abs(rad2deg(est.user_angle_rad) - 30.4), 2.0);
}

TEST(EstimateAoa, WinnerResidualIsMinimum) {
  const Scene s = test::reference_scene();
  Synth syn = synthesize(s, 3, 37.0, 12.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 0.2 * syn.y.cwiseAbs().mean());
  for (Eigen::Index k = 0; k < syn.y.size(); ++k) syn.y[k] += cdouble(n(rng), n(rng));
  const AngleGrid g = AngleGrid::degrees(5.0);
  const AoaEstimate est = estimate_aoa(syn.y, g, g, syn.model);
  for (double a : g.values_rad) {
    for (double b : g.values_rad) {
      const double r = projection_residual(syn.y, dictionary_column(syn.model, a, b));
      EXPECT_GE(r, 0.0);
      EXPECT_LE(est.residual, r);
    }
  }
}

TEST(EstimateAoa, ExactAtEveryFiveDegreeNode) {
  const Scene s = test::reference_scene();
  const AngleGrid g = AngleGrid::degrees(5.0);
  for (double a : g.values_rad) {
    for (double b : g.values_rad) {
      const SignalInputs in = default_signal_inputs(s, 1, a, b, codebook_angles(), 3);
      const auto y = received_signal(s, 1, in, 0);
      const AoaEstimate est = estimate_aoa(y, g, g, make_dictionary_model(s, 1, in));
      EXPECT_EQ(est.sat_angle_rad, a);
      EXPECT_EQ(est.user_angle_rad, b);
    }
  }
}

TEST(EstimateAoa, ZeroObservationRejected) {
  const Scene s = test::reference_scene();
  const Synth syn = synthesize(s, 1, 20.0, 30.0);
  const AngleGrid g = AngleGrid::degrees(5.0);
  try {
    estimate_aoa(Eigen::VectorXcd::Zero(syn.y.size()), g, g, syn.model);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateInput);
  }
}

TEST(ProjectionResidual, ZeroColumnGivesFullEnergy) {
  Eigen::VectorXcd y(3);
  y << cdouble(1, 2), cdouble(0, -1), cdouble(3, 0);
  EXPECT_DOUBLE_EQ(projection_residual(y, Eigen::VectorXcd::Zero(3)), y.squaredNorm());
  EXPECT_NEAR(projection_residual(y, y * cdouble(0.5, -2.0)), 0.0, 1e-24);
}

TEST(Hpbw, NineByNineArray) { EXPECT_NEAR(hpbw_upa(81, 0.5, 0.0), 22.67, 0.01); }

TEST(Hpbw, TwentyByTwentyArray) { EXPECT_NEAR(hpbw_upa(400, 0.5, 0.0), 10.2, 1e-12); }

TEST(Hpbw, SixtyDegreeScan) { EXPECT_NEAR(hpbw_upa(81, 0.5, deg2rad(60.0)), 45.33, 0.01); }

TEST(Hpbw, BroadsideSingularity) {
  EXPECT_THROW(hpbw_upa(81, 0.5, kPi / 2), Error);
  EXPECT_THROW(hpbw_planar(kPi / 2, 0.0, 10.0, 10.0), Error);
}

TEST(Hpbw, InvalidArrayRejected) {
  EXPECT_THROW(hpbw_upa(80, 0.5, 0.0), Error);
  EXPECT_THROW(hpbw_upa(81, 0.0, 0.0), Error);
}

TEST(Hpbw, MonotoneProperties) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> side(1, 30);
  std::uniform_real_distribution<double> zeta(0.1, 2.0);
  std::uniform_real_distribution<double> theta(0.0, 1.5);
  for (int k = 0; k < 2000; ++k) {
    const int n = side(rng);
    const double z = zeta(rng);
    const double t = theta(rng);
    const double h = hpbw_upa(n * n, z, t);
    EXPECT_LT(hpbw_upa((n + 1) * (n + 1), z, t), h);
    EXPECT_LT(hpbw_upa(n * n, z * 1.1, t), h);
    EXPECT_GT(hpbw_upa(n * n, z, std::min(t + 0.05, 1.56)), h);
  }
}

TEST(HpbwPlanar, AxisAligned) { EXPECT_NEAR(hpbw_planar(0.0, 0.0, 10.0, 30.0), 10.0, 1e-12); }

TEST(HpbwPlanar, EqualWidthsAreIsotropic) {
  for (double phi : {0.0, 0.4, 1.0, 2.5}) EXPECT_NEAR(hpbw_planar(0.0, phi, 7.0, 7.0), 7.0, 1e-12);
}

TEST(HpbwPlanar, ScanBroadening) { EXPECT_NEAR(hpbw_planar(deg2rad(60.0), 0.0, 10.0, 3.0), 20.0, 1e-9); }

TEST(HpbwPlanar, ReducesToUpaForm) {
  const double w = hpbw_upa(81, 0.5, 0.0);
  EXPECT_NEAR(hpbw_planar(deg2rad(35.0), 0.7, w, w), hpbw_upa(81, 0.5, deg2rad(35.0)), 1e-9);
}

TEST(ApplyAmbiguity, ZeroWidthIsIdentity) {
  const Vec3 d = direction_from_angles(0.3, -2.0);
  EXPECT_LT((apply_ambiguity(d, 0.0, AmbiguityMode::kHpbwUniform, 4) - d).norm(), 1e-15);
  EXPECT_EQ(apply_ambiguity(d, 0.5, AmbiguityMode::kNone, 4), d);
}

TEST(ApplyAmbiguity, UniformMoments) {
  const double h = deg2rad(11.0);
  const Vec3 d = direction_from_angles(0.2, 1.0);
  const int n = 100000;
  double max_dev = 0.0;
  double ss_el = 0.0;
  double ss_az = 0.0;
  for (int k = 0; k < n; ++k) {
    const Vec3 p = apply_ambiguity(d, h, AmbiguityMode::kHpbwUniform, derive_seed(9, k));
    EXPECT_NEAR(p.norm(), 1.0, 1e-12);
    const ElevationAzimuth a = angles_from_direction(p);
    const double de = a.elevation_rad - 0.2;
    const double da = wrap_pi(a.azimuth_rad - 1.0);
    max_dev = std::max({max_dev, std::abs(de), std::abs(da)});
    ss_el += de * de;
    ss_az += da * da;
  }
  EXPECT_LE(max_dev, h + 1e-12);
  EXPECT_NEAR(std::sqrt(ss_el / n) / (h / std::sqrt(3.0)), 1.0, 0.02);
  EXPECT_NEAR(std::sqrt(ss_az / n) / (h / std::sqrt(3.0)), 1.0, 0.02);
}

TEST(ApplyAmbiguity, Deterministic) {
  const Vec3 d = direction_from_angles(0.2, 1.0);
  EXPECT_EQ(apply_ambiguity(d, 0.1, AmbiguityMode::kFixedDeg, 5),
            apply_ambiguity(d, 0.1, AmbiguityMode::kFixedDeg, 5));
  EXPECT_NE(apply_ambiguity(d, 0.1, AmbiguityMode::kFixedDeg, 5),
            apply_ambiguity(d, 0.1, AmbiguityMode::kFixedDeg, 6));
}

TEST(AmbiguityHalfwidth, Modes) {
  Scene s = test::reference_scene();
  const TisArray& t = s.tis_arrays[0];
  const Vec3 level = Vec3(-1, 0, 0);
  s.noise.aoa_ambiguity_mode = AmbiguityMode::kNone;
  EXPECT_EQ(ambiguity_halfwidth_rad(s, t, level), 0.0);
  s.noise.aoa_ambiguity_mode = AmbiguityMode::kFixedDeg;
  s.noise.aoa_ambiguity_deg = 7.5;
  EXPECT_NEAR(ambiguity_halfwidth_rad(s, t, level), deg2rad(3.75), 1e-15);
  s.noise.aoa_ambiguity_mode = AmbiguityMode::kHpbwUniform;
  EXPECT_NEAR(rad2deg(ambiguity_halfwidth_rad(s, t, level)), 102.0 / 9.0 / 0.5 / 2.0, 1e-9);
}

TEST(RayFromAmbiguity, NoAmbiguityPointsAtUser) {
  Scene s = test::reference_scene();
  s.noise.aoa_ambiguity_mode = AmbiguityMode::kNone;
  const Position3 origin(1, 2, 3);
  const RayEstimate r = ray_from_ambiguity(s, 2, origin, 1);
  EXPECT_EQ(r.origin, origin);
  EXPECT_LT((r.direction - (s.user.position - s.tis(2).position).normalized()).norm(), 1e-15);
  EXPECT_EQ(r.ambiguity_halfwidth_rad, 0.0);
}

TEST(RayFromDictionary, RecoversDirectionOnGrid) {
  const Scene s = test::reference_scene();
  const AngleGrid g = AngleGrid::degrees(1.0);
  for (const auto& t : s.tis_arrays) {
    const RayEstimate r = ray_from_dictionary(s, t.id, t.position, g, 4);
    const Vec3 truth = (s.user.position - t.position).normalized();
    EXPECT_NEAR(r.direction.norm(), 1.0, 1e-12);
    EXPECT_LT(std::acos(std::min(1.0, r.direction.dot(truth))), deg2rad(0.75));
  }
}

TEST(RayFromDictionary, UserAboveArrayRejected) {
  Scene s = test::reference_scene();
  s.user.position.z() += 3.0;
  try {
    ray_from_dictionary(s, 1, s.tis_arrays[0].position, AngleGrid::degrees(5.0), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomain);
  }
}

TEST(RaysCsv, RoundTripIsBitExact) {
  Scene s = test::reference_scene();
  std::vector<RayEstimate> rays;
  for (const auto& t : s.tis_arrays) rays.push_back(ray_from_ambiguity(s, t.id, t.position + Vec3(0.1, -0.2, 0.3), t.id));
  std::stringstream io;
  write_rays_csv(rays, io);
  EXPECT_EQ(io.str().substr(0, io.str().find('\n')), "tis,ox,oy,oz,dx,dy,dz,elev_deg,azim_deg,halfwidth_deg");
  const auto back = read_rays_csv(io);
  ASSERT_EQ(back.size(), rays.size());
  for (std::size_t k = 0; k < rays.size(); ++k) {
    EXPECT_EQ(back[k].tis_id, rays[k].tis_id);
    EXPECT_EQ(back[k].origin, rays[k].origin);
    EXPECT_EQ(back[k].direction, rays[k].direction);
  }
}
