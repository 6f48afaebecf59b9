// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "gspoison/noise_scheduler.hpp"
#include "gspoison/poison_injector.hpp"

namespace gspoison {

/// Every tunable of the pipeline in one place. Built from defaults, then
/// an optional TOML file, then explicit command-line flags.
struct RunConfig {
    PoisonConfig poison;
    double kde_cutoff = 0.0;
    std::array<int, 3> grid_resolution = kDefaultResolution;

    // sprite placement; NaN offsets center the sprite in the poisoned view
    double sprite_offset_u = std::numeric_limits<double>::quiet_NaN();
    double sprite_offset_v = std::numeric_limits<double>::quiet_NaN();
    double sprite_scale = 1.0;
    int alpha_threshold = 127;

    NoiseSchedule noise;
    std::vector<int> checkpoints = {0, 7500, 15000, 22500, 30000};

    std::array<double, 3> background = {0.0, 0.0, 0.0};

    std::uint64_t seed = 0;
    int threads = 0;

    void validate() const;
    nlohmann::json to_json() const;
};

/// Overlays a TOML file onto `cfg`. Sections: [poison] [kde] [sprite]
/// [noise] [render] [run]. Unknown sections or keys are rejected.
void apply_toml(RunConfig& cfg, const std::filesystem::path& path);
void apply_toml_string(RunConfig& cfg, const std::string& text, const std::string& source = "config");

/// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

} // namespace gspoison
