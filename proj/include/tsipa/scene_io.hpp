#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "tsipa/scene.hpp"

namespace tsipa {

// Scene files are JSON objects; every dimensioned field carries its unit in
// the key (`*_m`, `*_s`, `*_deg`, `*_rad`, `*_w`, `*_db`).

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

std::string write_scene_string(const Scene& scene);
Scene read_scene_string(const std::string& text);

void write_scene_file(const Scene& scene, const std::filesystem::path& path);
Scene read_scene_file(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace tsipa
