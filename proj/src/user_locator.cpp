#include "tsipa/user_locator.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <numeric>

#include <Eigen/Dense>

#include "tsipa/errors.hpp"

namespace tsipa {

namespace {

void require_rays(std::span<const RayEstimate> rays) {
  if (rays.size() < 2) {
    throw Error(ErrorCode::kUnderdetermined,
                "need at least 2 rays, got " + std::to_string(rays.size()));
  }
}

UserFix finish(const Position3& p, Optimizer o, std::span<const RayEstimate> rays, int iters,
               bool converged) {
  UserFix fix;
  fix.position_est = p;
  fix.optimizer = o;
  fix.objective_value_m = objective(p, rays);
  fix.squared_objective_m2 = squared_objective(p, rays);
  fix.iterations = iters;
  fix.converged = converged;
  return fix;
}

/// Sum of unit vectors from each ray foot toward p. Rays passing through p
/// contribute nothing (subgradient 0).
Vec3 objective_gradient(const Position3& p, std::span<const RayEstimate> rays) {
  Vec3 g = Vec3::Zero();
  for (const auto& r : rays) {
    const double t = std::max(0.0, (p - r.origin).dot(r.direction));
    const Vec3 diff = p - (r.origin + t * r.direction);
    const double n = diff.norm();
    if (n > 0.0) g += diff / n;
  }
  return g;
}

}  // namespace

const char* to_string(Optimizer o) {
  switch (o) {
    case Optimizer::kMvm: return "MVM";
    case Optimizer::kNuom: return "NUOM";
    case Optimizer::kLsm: return "LSM";
    case Optimizer::kGdm: return "GDM";
  }
  return "?";
}

Optimizer optimizer_from(const std::string& s) {
  std::string low = s;
  std::transform(low.begin(), low.end(), low.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (low == "mvm") return Optimizer::kMvm;
  if (low == "nuom") return Optimizer::kNuom;
  if (low == "lsm") return Optimizer::kLsm;
  if (low == "gdm") return Optimizer::kGdm;
  throw Error(ErrorCode::kDomain, "unknown optimizer '" + s + "'");
}

double point_to_ray_distance(const Position3& p, const Position3& origin, const Vec3& direction) {
  const double t = std::max(0.0, (p - origin).dot(direction));
  return (p - (origin + t * direction)).norm();
}

double objective(const Position3& p, std::span<const RayEstimate> rays) {
  require_rays(rays);
  double sum = 0.0;
  for (const auto& r : rays) sum += point_to_ray_distance(p, r.origin, r.direction);
  return sum;
}

double squared_objective(const Position3& p, std::span<const RayEstimate> rays) {
  require_rays(rays);
  double sum = 0.0;
  for (const auto& r : rays) {
    const double d = point_to_ray_distance(p, r.origin, r.direction);
    sum += d * d;
  }
  return sum;
}

UserFix solve_mvm(std::span<const RayEstimate> rays, const UserLocatorOptions& options) {
  require_rays(rays);
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  int used = 0;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    for (std::size_t j = i + 1; j < rays.size(); ++j) {
      const Eigen::Vector2d o1 = rays[i].origin.head<2>();
      const Eigen::Vector2d o2 = rays[j].origin.head<2>();
      const Eigen::Vector2d u1 = rays[i].direction.head<2>();
      const Eigen::Vector2d u2 = rays[j].direction.head<2>();
      const double n1 = u1.norm();
      const double n2 = u2.norm();
      if (n1 == 0.0 || n2 == 0.0) continue;
      const double cross = u1.x() * u2.y() - u1.y() * u2.x();
      if (std::abs(cross) / (n1 * n2) < options.parallel_sin_threshold) continue;
      // o1 + s u1 = o2 + t u2  =>  s = ((o2 - o1) x u2) / (u1 x u2)
      const Eigen::Vector2d d = o2 - o1;
      const double s = (d.x() * u2.y() - d.y() * u2.x()) / cross;
      sum += o1 + s * u1;
      ++used;
    }
  }
  if (used == 0) {
    throw Error(ErrorCode::kSingularGeometry, "MVM: every ray pair is parallel in the x-y plane");
  }
  const Eigen::Vector2d xy = sum / used;

  double z = 0.0;
  for (const auto& r : rays) {
    const Eigen::Vector2d u = r.direction.head<2>();
    const double uu = u.squaredNorm();
    const double t = uu > 0.0 ? std::max(0.0, (xy - r.origin.head<2>()).dot(u) / uu) : 0.0;
    z += r.origin.z() + t * r.direction.z();
  }
  z /= static_cast<double>(rays.size());
  return finish(Position3(xy.x(), xy.y(), z), Optimizer::kMvm, rays, 0, true);
}

UserFix solve_lsm(std::span<const RayEstimate> rays) {
  require_rays(rays);
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  for (const auto& r : rays) {
    const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - r.direction * r.direction.transpose();
    a += proj;
    b += proj * r.origin;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(a);
  const double hi = eig.eigenvalues().maxCoeff();
  const double lo = eig.eigenvalues().minCoeff();
  if (!(lo > 1e-12 * std::max(hi, 1.0))) {
    throw Error(ErrorCode::kSingularGeometry, "LSM: rays are collinear (rank-deficient system)", lo);
  }
  return finish(a.ldlt().solve(b), Optimizer::kLsm, rays, 0, true);
}

UserFix solve_gdm(std::span<const RayEstimate> rays, const UserLocatorOptions& options) {
  Position3 p = solve_mvm(rays, options).position_est;
  double f = objective(p, rays);
  double step = options.gdm_step_m;
  int iters = 0;
  bool converged = false;
  while (iters < options.gdm_max_iters) {
    const Vec3 g = objective_gradient(p, rays);
    const double gn = g.norm();
    if (gn == 0.0) {
      converged = true;
      break;
    }
    ++iters;
    const Vec3 dir = -g / gn;
    // Backtrack until the step decreases the objective.
    double trial_step = step;
    Position3 q = p + trial_step * dir;
    double fq = objective(q, rays);
    while (fq >= f && trial_step > 1e-12) {
      trial_step *= 0.5;
      q = p + trial_step * dir;
      fq = objective(q, rays);
    }
    if (fq >= f) {
      converged = true;
      break;
    }
    const double decrease = f - fq;
    p = q;
    f = fq;
    step = trial_step;
    if (decrease < options.gdm_tol_m) {
      converged = true;
      break;
    }
  }
  return finish(p, Optimizer::kGdm, rays, iters, converged);
}

UserFix solve_nuom(std::span<const RayEstimate> rays, const UserLocatorOptions& options) {
  const Position3 start = solve_mvm(rays, options).position_est;
  auto f = [&](const Position3& p) { return objective(p, rays); };

  std::array<Position3, 4> x;
  std::array<double, 4> fx;
  x[0] = start;
  for (int k = 0; k < 3; ++k) {
    x[k + 1] = start;
    x[k + 1][k] += options.nuom_edge_m;
  }
  for (int k = 0; k < 4; ++k) fx[k] = f(x[k]);
  int evals = 4;
  int iters = 0;
  bool converged = false;

  std::array<int, 4> order{0, 1, 2, 3};
  while (evals < options.nuom_max_evals) {
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    double diameter = 0.0;
    for (int k = 1; k < 4; ++k) diameter = std::max(diameter, (x[order[k]] - x[order[0]]).norm());
    if (diameter < options.nuom_tol_m) {
      converged = true;
      break;
    }
    ++iters;
    const int worst = order[3];
    const Position3 centroid = (x[order[0]] + x[order[1]] + x[order[2]]) / 3.0;
    const Position3 xr = centroid + (centroid - x[worst]);
    const double fr = f(xr);
    ++evals;
    if (fr < fx[order[0]]) {
      const Position3 xe = centroid + 2.0 * (centroid - x[worst]);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        x[worst] = xe;
        fx[worst] = fe;
      } else {
        x[worst] = xr;
        fx[worst] = fr;
      }
      continue;
    }
    if (fr < fx[order[2]]) {
      x[worst] = xr;
      fx[worst] = fr;
      continue;
    }
    const bool outside = fr < fx[worst];
    const Position3 xc = outside ? Position3(centroid + 0.5 * (xr - centroid))
                                 : Position3(centroid + 0.5 * (x[worst] - centroid));
    const double fc = f(xc);
    ++evals;
    if (fc < (outside ? fr : fx[worst])) {
      x[worst] = xc;
      fx[worst] = fc;
      continue;
    }
    // Shrink toward the best vertex.
    for (int k = 1; k < 4; ++k) {
      const int i = order[k];
      x[i] = x[order[0]] + 0.5 * (x[i] - x[order[0]]);
      fx[i] = f(x[i]);
      ++evals;
    }
  }
  const int best =
      static_cast<int>(std::min_element(fx.begin(), fx.end()) - fx.begin());
  return finish(x[best], Optimizer::kNuom, rays, iters, converged);
}

UserFix locate_user(std::span<const RayEstimate> rays, Optimizer optimizer,
                    const UserLocatorOptions& options) {
  switch (optimizer) {
    case Optimizer::kMvm: return solve_mvm(rays, options);
    case Optimizer::kNuom: return solve_nuom(rays, options);
    case Optimizer::kLsm: return solve_lsm(rays);
    case Optimizer::kGdm: return solve_gdm(rays, options);
  }
  throw Error(ErrorCode::kDomain, "unknown optimizer");
}

void write_user_fix_csv(std::span<const UserFix> fixes, std::ostream& out) {
  out << "optimizer,x,y,z,objective_m,iters,err_m\n";
  out << std::setprecision(17);
  for (const auto& f : fixes) {
    out << to_string(f.optimizer) << ',' << f.position_est.x() << ',' << f.position_est.y() << ','
        << f.position_est.z() << ',' << f.objective_value_m << ',' << f.iterations << ',';
    if (f.error_vs_truth_m) out << *f.error_vs_truth_m;
    out << '\n';
  }
}

}  // namespace tsipa
