#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tsipa/geometry.hpp"

namespace tsipa {

struct TpdopResult {
  double tpdop_m = 0.0;
  Position3 centroid = Position3::Zero();
};

/// Sum of distances from each TIS to the vertex centroid. Throws kDomain
/// on empty input.
TpdopResult tpdop(std::span<const Position3> tis_positions);

/// Population standard deviation of the TIS-to-user distances.
double compactness_rmse(std::span<const Position3> tis_positions, const Position3& user);

struct ErrorStats {
  double mean_m = 0.0;
  double std_m = 0.0;  ///< sample (n - 1) form; 0 for a single value
  double p95_m = 0.0;  ///< linear interpolation between order statistics
};

/// Statistics of already-computed error magnitudes. Throws kDomain on empty input.
ErrorStats error_stats(std::span<const double> errors_m);

/// Statistics of ||estimate - truth||.
ErrorStats error_stats(std::span<const Position3> estimates, const Position3& truth);

struct GeometryReport {
  double tpdop_m = 0.0;
  double rmse_m = 0.0;
  Position3 centroid = Position3::Zero();
  std::vector<double> per_tis_distance_m;
  double mean_distance_m = 0.0;
  /// ||centroid - user||; diagnostic only.
  double centroid_offset_m = 0.0;
};

GeometryReport geometry_report(std::span<const Position3> tis_positions, const Position3& user);

/// CSV keyed by turn: turn,method,tpdop_m,rmse_m,cx,cy,cz,mean_distance_m,centroid_offset_m
struct KeyedReport {
  int turn = 0;
  std::string method;
  GeometryReport report;
};
void write_geometry_csv(std::span<const KeyedReport> rows, std::ostream& out);

}  // namespace tsipa
