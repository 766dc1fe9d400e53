#include "tsipa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "tsipa/errors.hpp"

namespace tsipa {

namespace {

void require_nonempty(std::size_t n, const char* what) {
  if (n == 0) throw Error(ErrorCode::kDomain, std::string(what) + ": empty input");
}

}  // namespace

TpdopResult tpdop(std::span<const Position3> tis_positions) {
  require_nonempty(tis_positions.size(), "tpdop");
  TpdopResult r;
  for (const auto& p : tis_positions) r.centroid += p;
  r.centroid /= static_cast<double>(tis_positions.size());
  for (const auto& p : tis_positions) r.tpdop_m += (p - r.centroid).norm();
  return r;
}

double compactness_rmse(std::span<const Position3> tis_positions, const Position3& user) {
  require_nonempty(tis_positions.size(), "compactness_rmse");
  const double n = static_cast<double>(tis_positions.size());
  double mean = 0.0;
  for (const auto& p : tis_positions) mean += (p - user).norm();
  mean /= n;
  double ss = 0.0;
  for (const auto& p : tis_positions) {
    const double d = (p - user).norm() - mean;
    ss += d * d;
  }
  return std::sqrt(ss / n);
}

ErrorStats error_stats(std::span<const double> errors_m) {
  require_nonempty(errors_m.size(), "error_stats");
  const double n = static_cast<double>(errors_m.size());
  ErrorStats s;
  for (double e : errors_m) s.mean_m += e;
  s.mean_m /= n;
  if (errors_m.size() > 1) {
    double ss = 0.0;
    for (double e : errors_m) ss += (e - s.mean_m) * (e - s.mean_m);
    s.std_m = std::sqrt(ss / (n - 1.0));
  }
  std::vector<double> sorted(errors_m.begin(), errors_m.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = 0.95 * (n - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  s.p95_m = sorted[lo] + (rank - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  return s;
}

ErrorStats error_stats(std::span<const Position3> estimates, const Position3& truth) {
  std::vector<double> e;
  e.reserve(estimates.size());
  for (const auto& p : estimates) e.push_back((p - truth).norm());
  return error_stats(e);
}

GeometryReport geometry_report(std::span<const Position3> tis_positions, const Position3& user) {
  const TpdopResult t = tpdop(tis_positions);
  GeometryReport r;
  r.tpdop_m = t.tpdop_m;
  r.centroid = t.centroid;
  r.rmse_m = compactness_rmse(tis_positions, user);
  for (const auto& p : tis_positions) r.per_tis_distance_m.push_back((p - user).norm());
  for (double d : r.per_tis_distance_m) r.mean_distance_m += d;
  r.mean_distance_m /= static_cast<double>(r.per_tis_distance_m.size());
  r.centroid_offset_m = (t.centroid - user).norm();
  return r;
}

void write_geometry_csv(std::span<const KeyedReport> rows, std::ostream& out) {
  out << "turn,method,tpdop_m,rmse_m,cx,cy,cz,mean_distance_m,centroid_offset_m\n";
  out << std::setprecision(17);
  for (const auto& k : rows) {
    const auto& r = k.report;
    out << k.turn << ',' << k.method << ',' << r.tpdop_m << ',' << r.rmse_m << ','
        << r.centroid.x() << ',' << r.centroid.y() << ',' << r.centroid.z() << ','
        << r.mean_distance_m << ',' << r.centroid_offset_m << '\n';
  }
}

}  // namespace tsipa
