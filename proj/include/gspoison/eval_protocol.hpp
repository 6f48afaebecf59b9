// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "gspoison/camera.hpp"
#include "gspoison/density_field.hpp"
#include "gspoison/image.hpp"

namespace gspoison {

enum class Difficulty { Easy, Median, Hard, Other };
const char* difficulty_name(Difficulty d);

struct ViewDifficulty {
    std::string view_id;
    double score = 0.0;
    int rank = 0;
    Difficulty difficulty = Difficulty::Other;
};

inline constexpr int kViewDensitySamples = 512;
inline constexpr double kViewDensityRadius = 0.10; // fraction of the scene AABB diagonal

/// Mean KDE over a fixed Halton set of points inside the camera frustum
/// and within kViewDensityRadius * scene_diag of the camera center.
double view_density(const KdeField& field, const Camera& cam, double scene_diag, int samples = kViewDensitySamples);

/// Ascending by score, ties by view id. Ranks 0, (n-1)/2, n-1 are
/// Easy, Median, Hard.
std::vector<ViewDifficulty> rank_scores(std::vector<std::pair<std::string, double>> scores);
std::vector<ViewDifficulty> rank_views(const KdeField& field, const std::vector<CameraFrame>& cameras);

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) on [0,1] images, channels pooled; mask restricts the
/// pixels. Exact matches report kPsnrCap.
double psnr(const ImageF& a, const ImageF& b, const Mask* mask = nullptr);

/// Mean local SSIM (11x11 Gaussian window, sigma 1.5, K1 0.01, K2 0.03,
/// range 1) over windows fully inside the image; with a mask, only
/// windows centered on masked pixels count. Channels are averaged.
double ssim(const ImageF& a, const ImageF& b, const Mask* mask = nullptr);

inline constexpr double kSuccessPsnr = 25.0;
inline constexpr double kMaxTestDrop = 3.0;

/// Illusion PSNR strictly above 25 dB and innocent-view drop of at most 3 dB.
bool attack_success(double illusory_psnr, double test_drop);

struct ViewMetrics {
    std::string view_id;
    bool poisoned = false;
    double psnr = 0.0;
    double ssim = 0.0;
    double masked_psnr = 0.0; // poisoned views only
    double masked_ssim = 0.0;
};

struct SetMetrics {
    double psnr = 0.0;
    double ssim = 0.0;
};

struct AttackReport {
    std::vector<ViewMetrics> views;
    SetMetrics v_illusory;
    SetMetrics v_test;
    SetMetrics v_test_clean_baseline;
    double v_test_drop = 0.0;
    bool success = false;

    std::string to_json() const;
    std::string to_table() const;
};

struct AttackInputs {
    std::map<std::string, ImageF> clean_renders;
    std::map<std::string, ImageF> poisoned_renders;
    std::map<std::string, ImageF> target_composites; // poisoned ids
    std::map<std::string, Mask> sprite_masks;        // poisoned ids
    std::vector<std::string> poisoned_ids;
    std::vector<std::string> test_ids;
};

/// V-Illusory: masked metrics of poisoned renders against the target
/// composite. V-Test: poisoned-cloud vs clean-cloud renders on test ids,
/// baseline being the clean renders scored against themselves.
AttackReport evaluate_attack(const AttackInputs& in);

} // namespace gspoison
