#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tsipa/csv_io.hpp"
#include "tsipa/errors.hpp"
#include "tsipa/tis_locator.hpp"

using namespace tsipa;

namespace {

Scene noiseless_reference() {
  Scene s = test::reference_scene();
  s.noise.code_sigma_m = 0.0;
  s.noise.carrier_sigma_m = 0.0;
  return s;
}

double true_bias(const Scene& s, int tis_id) {
  return (s.tis(tis_id).position - s.user.position).norm() + kSpeedOfLight * s.user.clock_offset_s;
}

}  // namespace

TEST(Linearize, ZeroResidualAtTruth) {
  const Scene s = noiseless_reference();
  const auto set = build_observation_set(s, RangeMethod::kCem, 1);
  const auto group = set.group(2, RangeMethod::kCem);
  const LinearizedSystem sys = linearize(group, {s.tis(2).position, true_bias(s, 2)}, s.satellites);
  EXPECT_LT(sys.residual.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Linearize, RowIsDirectionPlusOne) {
  std::vector<SatelliteEphemeris> sats(4);
  const Position3 positions[4] = {{1e7, 0, 0}, {0, 1e7, 0}, {0, 0, 1e7}, {1e7, 1e7, 1e7}};
  std::vector<PseudorangeObservation> obs(4);
  for (int i = 0; i < 4; ++i) {
    sats[i].id = i + 1;
    sats[i].position = positions[i];
    obs[i].satellite_id = i + 1;
    obs[i].corrected_range_m = 1e7;
  }
  const LinearizedSystem sys = linearize(obs, {}, sats);
  EXPECT_EQ(sys.design.row(0), Eigen::RowVector4d(1, 0, 0, 1));
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(sys.design.row(i).head<3>().norm(), 1.0, 1e-15);
    EXPECT_EQ(sys.design(i, 3), 1.0);
  }
  EXPECT_EQ(sys.weights, Eigen::MatrixXd::Identity(4, 4));
}

TEST(Linearize, FewerThanFourObservationsRejected) {
  const Scene s = noiseless_reference();
  auto group = build_observation_set(s, RangeMethod::kCem, 1).group(1, RangeMethod::kCem);
  group.resize(3);
  try {
    linearize(group, {}, s.satellites);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnderdetermined);
  }
}

TEST(Linearize, PointOnSatelliteRejected) {
  const Scene s = noiseless_reference();
  const auto group = build_observation_set(s, RangeMethod::kCem, 1).group(1, RangeMethod::kCem);
  try {
    linearize(group, {s.satellites[0].position, 0.0}, s.satellites);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingularGeometry);
  }
}

TEST(SolveWls, IdentitySystem) {
  LinearizedSystem sys{Eigen::MatrixXd::Identity(4, 4), Eigen::Vector4d(1, 2, 3, 4),
                       Eigen::MatrixXd::Identity(4, 4)};
  EXPECT_NEAR((solve_wls(sys) - Eigen::Vector4d(1, 2, 3, 4)).norm(), 0.0, 1e-14);
}

TEST(SolveWls, ResidualOrthogonalToColumns) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    LinearizedSystem sys;
    sys.design = Eigen::MatrixXd::NullaryExpr(8, 4, [&] { return n(rng); });
    sys.residual = Eigen::VectorXd::NullaryExpr(8, [&] { return n(rng); });
    Eigen::VectorXd w = Eigen::VectorXd::NullaryExpr(8, [&] { return 0.5 + std::abs(n(rng)); });
    sys.weights = w.asDiagonal();
    const Eigen::Vector4d x = solve_wls(sys);
    const Eigen::Vector4d g = sys.design.transpose() * sys.weights * (sys.design * x - sys.residual);
    EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-9);
    // Minimizer: perturbations never lower the cost.
    for (int j = 0; j < 10; ++j) {
      const Eigen::Vector4d eps = Eigen::Vector4d::NullaryExpr([&] { return 1e-3 * n(rng); });
      EXPECT_LE(wls_cost(sys, x), wls_cost(sys, x + eps));
    }
  }
}

TEST(SolveWls, UniformWeightScalingCancels) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  LinearizedSystem sys;
  sys.design = Eigen::MatrixXd::NullaryExpr(6, 4, [&] { return n(rng); });
  sys.residual = Eigen::VectorXd::NullaryExpr(6, [&] { return n(rng); });
  sys.weights = Eigen::MatrixXd::Identity(6, 6);
  const Eigen::Vector4d a = solve_wls(sys);
  for (double alpha : {2.0, 1e-3, 1e4}) {
    LinearizedSystem scaled = sys;
    scaled.weights *= alpha;
    EXPECT_LT((solve_wls(scaled) - a).norm(), 1e-10 * (1 + a.norm()));
  }
}

TEST(SolveWls, SingularNormalMatrixCarriesCondition) {
  LinearizedSystem sys;
  sys.design = Eigen::MatrixXd::Ones(5, 4);
  sys.residual = Eigen::VectorXd::Ones(5);
  sys.weights = Eigen::MatrixXd::Identity(5, 5);
  try {
    solve_wls(sys);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingularGeometry);
    EXPECT_GT(e.value(), 1e12);
  }
}

TEST(LocateTis, NoiseFreeFromOneKilometerOff) {
  Scene s = test::random_scene(4, 2, 31);
  const auto set = build_observation_set(s, RangeMethod::kCem, 1);
  for (const auto& t : s.tis_arrays) {
    TisLocatorOptions opt;
    opt.initial_guess.position = t.position + Vec3(600, -700, 400);
    const TisFix fix = locate_tis(set.group(t.id, RangeMethod::kCem), s.satellites, opt);
    EXPECT_TRUE(fix.converged);
    EXPECT_LT((fix.position_est - t.position).norm(), 1e-6);
    EXPECT_NEAR(fix.range_bias_m, true_bias(s, t.id), 1e-6);
    EXPECT_LE(fix.iterations_used, opt.k_max);
    EXPECT_LT(fix.final_update_norm_m, opt.tolerance_m);
  }
}

TEST(LocateTis, CalibratedReferenceErrors) {
  const Scene s = test::reference_scene();
  for (auto method : {RangeMethod::kCem, RangeMethod::kCpm}) {
    double sum = 0.0;
    int n = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const auto set = build_observation_set(s, method, derive_seed(1000, trial));
      for (const auto& outcome : locate_all_tis(set, method, s.satellites)) {
        ASSERT_TRUE(outcome.fix.has_value());
        sum += (outcome.fix->position_est - s.tis(outcome.tis_id).position).norm();
        ++n;
      }
    }
    const double target = method == RangeMethod::kCem ? 1.0 : 0.7;
    EXPECT_NEAR(sum / n, target, 0.1 * target) << to_string(method);
  }
}

TEST(LocateTis, CoplanarSatellitesAreSingular) {
  Scene s = test::random_scene(5, 2, 2);
  for (std::size_t i = 0; i < s.satellites.size(); ++i) {
    const double az = 2 * kPi * i / s.satellites.size();
    s.satellites[i].position = 2e7 * Vec3(std::cos(az), std::sin(az), 0.0);
  }
  for (auto& t : s.tis_arrays) t.position.z() = 0.0;
  const auto set = build_observation_set(s, RangeMethod::kCem, 1);
  TisLocatorOptions opt;
  opt.initial_guess.position = s.tis_arrays[0].position;
  try {
    locate_tis(set.group(1, RangeMethod::kCem), s.satellites, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingularGeometry);
  }
}

TEST(LocateTis, HalvingOffsetDoesNotAddIterations) {
  const Scene s = noiseless_reference();
  const auto group = build_observation_set(s, RangeMethod::kCem, 1).group(3, RangeMethod::kCem);
  int previous = 1 << 30;
  for (double offset : {4000.0, 2000.0, 1000.0, 500.0, 250.0}) {
    TisLocatorOptions opt;
    opt.initial_guess.position = s.tis(3).position + Vec3(offset, offset, -offset);
    const TisFix fix = locate_tis(group, s.satellites, opt);
    EXPECT_LE(fix.iterations_used, previous);
    previous = fix.iterations_used;
  }
}

TEST(LocateTis, UnbiasedLinearizedUpdate) {
  const Scene s = test::reference_scene();
  Scene clean = s;
  clean.noise.code_sigma_m = 0.0;
  const auto truth = build_observation_set(clean, RangeMethod::kCem, 0).group(1, RangeMethod::kCem);
  const LinearizationPoint at_truth{s.tis(1).position, true_bias(s, 1)};
  const int n = 10000;
  Eigen::Vector4d sum = Eigen::Vector4d::Zero();
  Eigen::Vector4d sum2 = Eigen::Vector4d::Zero();
  for (int k = 0; k < n; ++k) {
    const auto group = build_observation_set(s, RangeMethod::kCem, derive_seed(55, k)).group(1, RangeMethod::kCem);
    const Eigen::Vector4d dx = solve_wls(linearize(group, at_truth, s.satellites));
    sum += dx;
    sum2 += dx.cwiseProduct(dx);
  }
  const Eigen::Vector4d mean = sum / n;
  const Eigen::Vector4d se = ((sum2 / n - mean.cwiseProduct(mean)) / n).cwiseSqrt();
  for (int c = 0; c < 4; ++c) EXPECT_LT(std::abs(mean[c]), 3 * se[c]) << "component " << c;
}

TEST(LocateTis, DivergenceDetected) {
  const Scene s = noiseless_reference();
  auto group = build_observation_set(s, RangeMethod::kCem, 1).group(1, RangeMethod::kCem);
  // Inconsistent ranges with a start far beyond the satellites.
  for (std::size_t i = 0; i < group.size(); ++i) group[i].corrected_range_m = (i % 2 ? 1.0 : 5e7);
  TisLocatorOptions opt;
  opt.initial_guess.position = Position3(0, 0, -1e9);
  try {
    locate_tis(group, s.satellites, opt);
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::kDivergence || e.code() == ErrorCode::kSingularGeometry);
  }
}

TEST(LocateAllTis, FourNoiseFreeFixes) {
  const Scene s = noiseless_reference();
  const auto outcomes = locate_all_tis(build_observation_set(s, RangeMethod::kCpm, 1), RangeMethod::kCpm, s.satellites);
  ASSERT_EQ(outcomes.size(), 4u);
  for (const auto& o : outcomes) {
    ASSERT_TRUE(o.fix.has_value());
    EXPECT_LT((o.fix->position_est - s.tis(o.tis_id).position).norm(), 1e-6);
  }
}

TEST(LocateAllTis, PartialFailureCollected) {
  const Scene s = noiseless_reference();
  auto set = build_observation_set(s, RangeMethod::kCem, 1);
  std::erase_if(set.observations, [](const PseudorangeObservation& o) { return o.tis_id == 2 && o.satellite_id > 3; });
  const auto outcomes = locate_all_tis(set, RangeMethod::kCem, s.satellites);
  ASSERT_EQ(outcomes.size(), 4u);
  for (const auto& o : outcomes) {
    if (o.tis_id == 2) {
      EXPECT_FALSE(o.fix.has_value());
      EXPECT_NE(o.error.find("underdetermined"), std::string::npos);
    } else {
      EXPECT_TRUE(o.fix.has_value());
    }
  }
}

TEST(LocateAllTis, IndependentOfObservationOrder) {
  const Scene s = test::reference_scene();
  auto set = build_observation_set(s, RangeMethod::kCem, 9);
  const auto a = locate_all_tis(set, RangeMethod::kCem, s.satellites);
  std::reverse(set.observations.begin(), set.observations.end());
  const auto b = locate_all_tis(set, RangeMethod::kCem, s.satellites);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].tis_id, b[k].tis_id);
    EXPECT_LT((a[k].fix->position_est - b[k].fix->position_est).norm(), 1e-6);
  }
}

TEST(TisFixCsv, RoundTrip) {
  const Scene s = test::reference_scene();
  std::vector<TisFix> fixes;
  for (const auto& o : locate_all_tis(build_observation_set(s, RangeMethod::kCem, 9), RangeMethod::kCem, s.satellites)) {
    fixes.push_back(*o.fix);
  }
  fixes[1].error_vs_truth_m = 0.123;
  std::stringstream io;
  write_tis_fix_csv(fixes, io);
  EXPECT_EQ(io.str().substr(0, io.str().find('\n')), "tis,x_est,y_est,z_est,bias_m,iters,converged,err_m");
  const auto back = read_tis_fix_csv(io);
  ASSERT_EQ(back.size(), fixes.size());
  for (std::size_t k = 0; k < fixes.size(); ++k) {
    EXPECT_EQ(back[k].position_est, fixes[k].position_est);
    EXPECT_EQ(back[k].range_bias_m, fixes[k].range_bias_m);
    EXPECT_EQ(back[k].converged, fixes[k].converged);
    EXPECT_EQ(back[k].error_vs_truth_m, fixes[k].error_vs_truth_m);
  }
}
