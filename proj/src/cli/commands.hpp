// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gspoison/camera.hpp"
#include "gspoison/eval_protocol.hpp"
#include "gspoison/fixtures.hpp"
#include "gspoison/gaussian_model.hpp"
#include "gspoison/poison_injector.hpp"
#include "gspoison/run_config.hpp"

namespace gspoison::cli {

namespace fs = std::filesystem;

/// Deletes registered outputs unless commit() was called.
class OutputGuard {
public:
    OutputGuard() = default;
    OutputGuard(const OutputGuard&) = delete;
    OutputGuard& operator=(const OutputGuard&) = delete;
    ~OutputGuard();
    /// Registers `p` for cleanup if it does not exist yet.
    void track(const fs::path& p);
    void commit() { committed_ = true; }

private:
    std::vector<fs::path> paths_;
    bool committed_ = false;
};

struct InjectArgs {
    fs::path ply, cameras, sprite, out, log;
    std::string view;
    std::optional<double> naive_t;
};

struct PerturbArgs {
    fs::path cameras, out;
    std::string poisoned;
};

struct RankArgs {
    fs::path ply, cameras, out;
};

struct RenderArgs {
    fs::path ply, cameras, out;
    std::vector<std::string> views;
    bool depth = false;
};

struct EvaluateArgs {
    fs::path clean, poisoned, cameras, sprite, out;
    std::string view;
    std::vector<std::string> test_views;
    bool require_success = false;
};

struct SweepArgs {
    std::string fixture = "wall";
    std::vector<double> bandwidths;
    std::vector<double> sigma0s;
    std::vector<std::string> decays;
    fs::path out;
    int width = 400;
    int splats = 0;
    int sprite_size = 32;
};

struct FixtureArgs {
    std::string kind;
    fs::path out;
    int splats = 0;
    int cameras = 0;
    int width = 400;
    int height = 400;
    int sprite_size = 32;
    bool images = true;
};

int cmd_inject(const InjectArgs& a, const RunConfig& cfg);
int cmd_perturb(const PerturbArgs& a, const RunConfig& cfg);
int cmd_rank_views(const RankArgs& a, const RunConfig& cfg);
int cmd_render(const RenderArgs& a, const RunConfig& cfg);
int cmd_evaluate(const EvaluateArgs& a, const RunConfig& cfg);
int cmd_sweep(const SweepArgs& a, const RunConfig& cfg);
int cmd_fixtures_generate(const FixtureArgs& a, const RunConfig& cfg);

// Shared pipeline pieces.
const CameraFrame& find_frame(const std::vector<CameraFrame>& frames, const std::string& id);
IllusorySprite load_sprite(const fs::path& path, const Camera& cam_p, const RunConfig& cfg);
IllusorySprite place_sprite(Image8 rgba, const Camera& cam_p, const RunConfig& cfg);
KdeField build_field(const GaussianCloud& cloud, const RunConfig& cfg);
/// aabb -> voxelize -> KDE -> depth -> density-guided insertion.
InjectionResult run_density_attack(const GaussianCloud& cloud, const Camera& cam_p, const IllusorySprite& sprite,
                                   const RunConfig& cfg);
AttackReport score_attack(const GaussianCloud& clean, const GaussianCloud& poisoned,
                          const std::vector<CameraFrame>& frames, const std::string& view,
                          const std::vector<std::string>& test_ids, const IllusorySprite& sprite,
                          const RunConfig& cfg);
nlohmann::json input_record(const fs::path& p);
void write_json(const nlohmann::json& j, const fs::path& p);

} // namespace gspoison::cli
