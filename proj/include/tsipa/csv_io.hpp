#pragma once

#include <filesystem>
#include <istream>
#include <vector>

#include "tsipa/aoa_estimator.hpp"
#include "tsipa/geometry.hpp"
#include "tsipa/tis_locator.hpp"

namespace tsipa {

/// Readers for the CSV forms written by write_tis_fix_csv and write_rays_csv.
/// Columns are matched by header name; malformed input throws kIo.
std::vector<TisFix> read_tis_fix_csv(std::istream& in);
std::vector<TisFix> read_tis_fix_csv(const std::filesystem::path& path);
std::vector<RayEstimate> read_rays_csv(std::istream& in);
std::vector<RayEstimate> read_rays_csv(const std::filesystem::path& path);

/// Positions from a CSV with x,y,z or x_est,y_est,z_est columns.
std::vector<Position3> read_positions_csv(std::istream& in);
std::vector<Position3> read_positions_csv(const std::filesystem::path& path);

}  // namespace tsipa
