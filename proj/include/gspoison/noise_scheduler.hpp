// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gspoison/camera.hpp"
#include "gspoison/image.hpp"

namespace gspoison {

enum class Decay { Linear, Cosine, Sqrt };

Decay parse_decay(std::string_view name);
const char* decay_name(Decay d);

/// Noise strength over training: sigma0 in 8-bit intensity units,
/// decaying to zero at iteration total_T.
struct NoiseSchedule {
    double sigma0 = 100.0;
    int total_T = 30000;
    Decay decay = Decay::Linear;

    void validate() const;
};

/// linear: s0 (1 - t/T); cosine: s0 cos(pi t / 2T); sqrt: s0 sqrt(1 - t/T).
/// sigma(T) is exactly 0 for every decay.
double sigma_at(const NoiseSchedule& s, int t);

/// Stateless counter-based generator: the value at `counter` depends
/// only on (key, counter).
class KeyedRng {
public:
    explicit KeyedRng(std::uint64_t key) : key_(key) {}
    std::uint64_t bits(std::uint64_t counter) const;
    /// Uniform in (0, 1).
    double uniform(std::uint64_t counter) const;
    /// Standard normal via Box-Muller over counter pairs.
    double normal(std::uint64_t index) const;

private:
    std::uint64_t key_;
};

std::uint64_t noise_key(std::uint64_t global_seed, std::string_view frame_id, int checkpoint);

/// Innocent views get clip(I + eta), eta ~ N(0, sigma^2) per pixel and
/// channel, rounded to nearest; the poisoned view is returned as is.
Image8 perturb_view(const Image8& image, bool is_poisoned, double sigma, std::uint64_t seed);

struct PerturbRequest {
    std::filesystem::path cameras_file; // images resolve relative to its directory
    std::vector<CameraFrame> frames;
    std::string poisoned_id;
    NoiseSchedule schedule;
    std::vector<int> checkpoints;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    std::string config_json; // effective run config echoed into the manifest, may be empty
};

/// Writes noisy_t{t}/ per checkpoint (images at their original relative
/// paths plus the pose file) and manifest.json. Images that stay unchanged
/// (poisoned view, sigma = 0) are copied byte for byte.
void emit_perturbed_dataset(const PerturbRequest& req);

} // namespace gspoison
