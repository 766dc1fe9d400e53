#include "tsipa/csv_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "tsipa/errors.hpp"

namespace tsipa {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cell.erase(std::remove(cell.begin(), cell.end(), '\r'), cell.end());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

class Table {
 public:
  explicit Table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::kIo, "CSV: missing header");
    const auto names = split(line);
    for (std::size_t i = 0; i < names.size(); ++i) columns_[names[i]] = i;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      rows_.push_back(split(line));
    }
  }

  bool has(const std::string& name) const { return columns_.count(name) != 0; }
  std::size_t size() const { return rows_.size(); }

  const std::string& cell(std::size_t row, const std::string& name) const {
    const auto it = columns_.find(name);
    if (it == columns_.end()) throw Error(ErrorCode::kIo, "CSV: missing column '" + name + "'");
    const auto& r = rows_[row];
    if (it->second >= r.size()) {
      throw Error(ErrorCode::kIo, "CSV: row " + std::to_string(row + 1) + " is too short");
    }
    return r[it->second];
  }

  double number(std::size_t row, const std::string& name) const {
    const std::string& s = cell(row, name);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::kIo, "CSV: column '" + name + "' row " + std::to_string(row + 1) +
                                      ": not a number: '" + s + "'");
    }
  }

  int integer(std::size_t row, const std::string& name) const {
    const double v = number(row, name);
    if (v != std::floor(v)) {
      throw Error(ErrorCode::kIo, "CSV: column '" + name + "' expects an integer");
    }
    return static_cast<int>(v);
  }

 private:
  std::map<std::string, std::size_t> columns_;
  std::vector<std::vector<std::string>> rows_;
};

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<TisFix> read_tis_fix_csv(std::istream& in) {
  const Table t(in);
  std::vector<TisFix> fixes;
  for (std::size_t r = 0; r < t.size(); ++r) {
    TisFix f;
    f.tis_id = t.integer(r, "tis");
    f.position_est = {t.number(r, "x_est"), t.number(r, "y_est"), t.number(r, "z_est")};
    f.range_bias_m = t.number(r, "bias_m");
    f.iterations_used = t.integer(r, "iters");
    f.converged = t.integer(r, "converged") != 0;
    if (t.has("err_m") && !t.cell(r, "err_m").empty()) f.error_vs_truth_m = t.number(r, "err_m");
    fixes.push_back(f);
  }
  return fixes;
}

std::vector<TisFix> read_tis_fix_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return read_tis_fix_csv(in);
}

std::vector<RayEstimate> read_rays_csv(std::istream& in) {
  const Table t(in);
  std::vector<RayEstimate> rays;
  for (std::size_t r = 0; r < t.size(); ++r) {
    RayEstimate ray;
    ray.tis_id = t.integer(r, "tis");
    ray.origin = {t.number(r, "ox"), t.number(r, "oy"), t.number(r, "oz")};
    const Vec3 d{t.number(r, "dx"), t.number(r, "dy"), t.number(r, "dz")};
    if (!(d.norm() > 0.0)) throw Error(ErrorCode::kIo, "CSV: zero ray direction");
    // Directions round-trip at 17 digits; renormalize only when needed.
    ray.direction = std::abs(d.norm() - 1.0) < 1e-12 ? d : d.normalized();
    ray.elevation_rad = deg2rad(t.number(r, "elev_deg"));
    ray.azimuth_rad = deg2rad(t.number(r, "azim_deg"));
    ray.ambiguity_halfwidth_rad = deg2rad(t.number(r, "halfwidth_deg"));
    rays.push_back(ray);
  }
  return rays;
}

std::vector<RayEstimate> read_rays_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return read_rays_csv(in);
}

std::vector<Position3> read_positions_csv(std::istream& in) {
  const Table t(in);
  const bool est = !t.has("x") && t.has("x_est");
  const std::string x = est ? "x_est" : "x";
  const std::string y = est ? "y_est" : "y";
  const std::string z = est ? "z_est" : "z";
  std::vector<Position3> out;
  for (std::size_t r = 0; r < t.size(); ++r) {
    out.emplace_back(t.number(r, x), t.number(r, y), t.number(r, z));
  }
  return out;
}

std::vector<Position3> read_positions_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return read_positions_csv(in);
}

}  // namespace tsipa
