#include "tsipa/tis_locator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>

#include <Eigen/Dense>

#include "tsipa/errors.hpp"

namespace tsipa {

namespace {

const SatelliteEphemeris& find_satellite(std::span<const SatelliteEphemeris> sats, int id) {
  for (const auto& s : sats) {
    if (s.id == id) return s;
  }
  throw Error(ErrorCode::kDomain, "observation references unknown satellite " + std::to_string(id));
}

}  // namespace

LinearizedSystem linearize(std::span<const PseudorangeObservation> observations,
                           const LinearizationPoint& point,
                           std::span<const SatelliteEphemeris> satellites,
                           std::span<const double> sigmas) {
  const auto rows = static_cast<Eigen::Index>(observations.size());
  if (rows < 4) {
    throw Error(ErrorCode::kUnderdetermined,
                "need at least 4 observations, got " + std::to_string(rows));
  }
  if (!sigmas.empty() && sigmas.size() != observations.size()) {
    throw Error(ErrorCode::kDomain, "one sigma per observation required");
  }

  LinearizedSystem sys;
  sys.design.resize(rows, 4);
  sys.residual.resize(rows);
  sys.weights = Eigen::MatrixXd::Identity(rows, rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& obs = observations[static_cast<std::size_t>(i)];
    const auto& sat = find_satellite(satellites, obs.satellite_id);
    const Vec3 toward = sat.position - point.position;
    const double range = toward.norm();
    if (!(range > 0.0)) {
      throw Error(ErrorCode::kSingularGeometry, "linearization point coincides with satellite " +
                                                    std::to_string(sat.id));
    }
    sys.design.block<1, 3>(i, 0) = (toward / range).transpose();
    sys.design(i, 3) = 1.0;
    sys.residual[i] = obs.corrected_range_m - (range + point.bias_m);
    if (!sigmas.empty()) {
      const double s = sigmas[static_cast<std::size_t>(i)];
      sys.weights(i, i) = 1.0 / (s * s);
    }
  }
  return sys;
}

Eigen::Vector4d solve_wls(const LinearizedSystem& system, double max_condition) {
  const Eigen::Matrix4d normal = system.design.transpose() * system.weights * system.design;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(normal);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition <= max_condition)) {
    throw Error(ErrorCode::kSingularGeometry,
                "ill-conditioned normal matrix (condition " + std::to_string(condition) + ")",
                condition);
  }
  const Eigen::Vector4d rhs = system.design.transpose() * system.weights * system.residual;
  return normal.ldlt().solve(rhs);
}

double wls_cost(const LinearizedSystem& system, const Eigen::Vector4d& x) {
  const Eigen::VectorXd r = system.design * x - system.residual;
  return r.dot(system.weights * r);
}

TisFix locate_tis(std::span<const PseudorangeObservation> observations,
                  std::span<const SatelliteEphemeris> satellites,
                  const TisLocatorOptions& options) {
  std::set<int> distinct;
  for (const auto& o : observations) distinct.insert(o.satellite_id);
  if (distinct.size() < 4) {
    throw Error(ErrorCode::kUnderdetermined,
                "need at least 4 distinct satellites, got " + std::to_string(distinct.size()));
  }

  TisFix fix;
  fix.tis_id = observations.empty() ? 0 : observations.front().tis_id;
  LinearizationPoint point = options.initial_guess;
  double previous_norm = std::numeric_limits<double>::infinity();
  int growth_streak = 0;

  for (int k = 1; k <= options.k_max; ++k) {
    const LinearizedSystem sys = linearize(observations, point, satellites, options.satellite_sigmas_m);
    const Eigen::Vector4d dx = solve_wls(sys, options.max_condition);
    // A carries +direction cosines toward the satellites, so the position
    // correction enters with a minus sign; the bias enters directly.
    point.position -= dx.head<3>();
    point.bias_m += dx[3];

    const double update = dx.head<3>().norm();
    fix.iterations_used = k;
    fix.final_update_norm_m = update;
    if (update < options.tolerance_m) {
      fix.converged = true;
      break;
    }
    growth_streak = update > previous_norm ? growth_streak + 1 : 0;
    if (growth_streak >= 3) {
      throw Error(ErrorCode::kDivergence,
                  "TIS " + std::to_string(fix.tis_id) + ": update norm grew 3 iterations in a row",
                  update);
    }
    previous_norm = update;
  }
  fix.position_est = point.position;
  fix.range_bias_m = point.bias_m;
  return fix;
}

std::vector<TisSolveOutcome> locate_all_tis(const PseudorangeSet& set, RangeMethod method,
                                            std::span<const SatelliteEphemeris> satellites,
                                            const TisLocatorOptions& options) {
  std::set<int> ids;
  for (const auto& o : set.observations) {
    if (o.method == method) ids.insert(o.tis_id);
  }
  std::vector<TisSolveOutcome> out;
  for (int id : ids) {
    TisSolveOutcome outcome;
    outcome.tis_id = id;
    const auto group = set.group(id, method);
    try {
      outcome.fix = locate_tis(group, satellites, options);
      outcome.fix->tis_id = id;
    } catch (const Error& e) {
      outcome.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    out.push_back(std::move(outcome));
  }
  return out;
}

void write_tis_fix_csv(std::span<const TisFix> fixes, std::ostream& out) {
  out << "tis,x_est,y_est,z_est,bias_m,iters,converged,err_m\n";
  out << std::setprecision(17);
  for (const auto& f : fixes) {
    out << f.tis_id << ',' << f.position_est.x() << ',' << f.position_est.y() << ','
        << f.position_est.z() << ',' << f.range_bias_m << ',' << f.iterations_used << ','
        << (f.converged ? 1 : 0) << ',';
    if (f.error_vs_truth_m) out << *f.error_vs_truth_m;
    out << '\n';
  }
}

}  // namespace tsipa
