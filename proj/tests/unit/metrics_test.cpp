#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "tsipa/errors.hpp"
#include "tsipa/metrics.hpp"

using namespace tsipa;

namespace {

std::vector<Position3> square() { return {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}}; }

std::vector<Position3> random_points(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<Position3> p;
  for (int k = 0; k < n; ++k) p.emplace_back(u(rng), u(rng), u(rng));
  return p;
}

}  // namespace

TEST(Tpdop, SymmetricSquare) {
  const auto r = tpdop(square());
  EXPECT_EQ(r.centroid, Position3::Zero());
  EXPECT_DOUBLE_EQ(r.tpdop_m, 4.0);
}

TEST(Tpdop, CoincidentIsZero) {
  const std::vector<Position3> p(4, Position3(1, 2, 3));
  EXPECT_EQ(tpdop(p).tpdop_m, 0.0);
}

TEST(Tpdop, EmptyRejected) {
  try {
    tpdop({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomain);
  }
}

TEST(Tpdop, RigidMotionInvariant) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  for (int k = 0; k < 100; ++k) {
    const auto p = random_points(rng, 4);
    const Eigen::Matrix3d rot = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized().toRotationMatrix();
    const Vec3 shift(n(rng) * 50, n(rng) * 50, n(rng) * 50);
    std::vector<Position3> q;
    for (const auto& x : p) q.push_back(rot * x + shift);
    const auto a = tpdop(p);
    const auto b = tpdop(q);
    EXPECT_NEAR(a.tpdop_m, b.tpdop_m, 1e-10);
    EXPECT_LT((rot * a.centroid + shift - b.centroid).norm(), 1e-10);
    EXPECT_GE(a.tpdop_m, 0.0);
  }
}

TEST(CompactnessRmse, Equidistant) {
  EXPECT_NEAR(compactness_rmse(square(), Position3::Zero()), 0.0, 1e-15);
}

TEST(CompactnessRmse, UnequalDistances) {
  const std::vector<Position3> p = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {3, 0, 0}};
  EXPECT_NEAR(compactness_rmse(p, Position3::Zero()), std::sqrt(0.75), 1e-15);
}

TEST(CompactnessRmse, EmptyRejected) { EXPECT_THROW(compactness_rmse({}, Position3::Zero()), Error); }

TEST(CompactnessRmse, HomogeneousAndRotationInvariant) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  for (int k = 0; k < 100; ++k) {
    const auto p = random_points(rng, 5);
    const Position3 user(n(rng), n(rng), n(rng));
    const double alpha = 0.1 + std::abs(n(rng)) * 3;
    const Eigen::Matrix3d rot = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized().toRotationMatrix();
    std::vector<Position3> scaled;
    std::vector<Position3> rotated;
    for (const auto& x : p) {
      scaled.push_back(user + alpha * (x - user));
      rotated.push_back(user + rot * (x - user));
    }
    const double r = compactness_rmse(p, user);
    EXPECT_NEAR(compactness_rmse(scaled, user), alpha * r, 1e-10 * (1 + r));
    EXPECT_NEAR(compactness_rmse(rotated, user), r, 1e-10 * (1 + r));
  }
}

TEST(ErrorStats, ExactFixes) {
  const std::vector<Position3> p(5, Position3(1, 2, 3));
  const ErrorStats s = error_stats(p, Position3(1, 2, 3));
  EXPECT_EQ(s.mean_m, 0.0);
  EXPECT_EQ(s.std_m, 0.0);
  EXPECT_EQ(s.p95_m, 0.0);
}

TEST(ErrorStats, ConstantErrors) {
  const std::vector<double> e = {1, 1, 1, 1};
  const ErrorStats s = error_stats(e);
  EXPECT_EQ(s.mean_m, 1.0);
  EXPECT_EQ(s.std_m, 0.0);
}

TEST(ErrorStats, SampleStdAndPercentile) {
  std::vector<double> e;
  for (int k = 1; k <= 21; ++k) e.push_back(k);
  const ErrorStats s = error_stats(e);
  EXPECT_DOUBLE_EQ(s.mean_m, 11.0);
  EXPECT_NEAR(s.std_m, std::sqrt(38.5), 1e-12);
  EXPECT_NEAR(s.p95_m, 20.0, 1e-12);
}

TEST(ErrorStats, EmptyRejected) { EXPECT_THROW(error_stats(std::vector<double>{}), Error); }

TEST(ErrorStats, GaussianMeanMatchesMonteCarloOracle) {
  const double sigma = 0.7;
  const int n = 1000000;
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<Position3> fixes;
  fixes.reserve(n);
  double oracle = 0.0;
  for (int k = 0; k < n; ++k) {
    fixes.emplace_back(g(rng), g(rng), g(rng));
    oracle += fixes.back().norm();
  }
  oracle /= n;
  const ErrorStats s = error_stats(fixes, Position3::Zero());
  EXPECT_NEAR(s.mean_m, oracle, 1e-9);
  EXPECT_NEAR(s.mean_m / (sigma * std::sqrt(8.0 / kPi)), 1.0, 0.005);
}

TEST(GeometryReport, Fields) {
  const auto r = geometry_report(square(), Position3(0, 0, 1));
  EXPECT_DOUBLE_EQ(r.tpdop_m, 4.0);
  EXPECT_NEAR(r.rmse_m, 0.0, 1e-15);
  ASSERT_EQ(r.per_tis_distance_m.size(), 4u);
  EXPECT_NEAR(r.mean_distance_m, std::sqrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(r.centroid_offset_m, 1.0);
}

TEST(GeometryCsv, Header) {
  std::vector<KeyedReport> rows = {{0, "CEM", geometry_report(square(), Position3::Zero())}};
  std::stringstream out;
  write_geometry_csv(rows, out);
  std::string header;
  std::getline(out, header);
  EXPECT_EQ(header, "turn,method,tpdop_m,rmse_m,cx,cy,cz,mean_distance_m,centroid_offset_m");
}
