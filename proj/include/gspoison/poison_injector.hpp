// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gspoison/camera.hpp"
#include "gspoison/density_field.hpp"
#include "gspoison/gaussian_model.hpp"
#include "gspoison/image.hpp"

namespace gspoison {

/// RGBA sprite placed on the poisoned view's image plane. Sprite pixel
/// (i, j) covers image region [u0 + i*s, u0 + (i+1)*s) x [v0 + j*s, ...).
struct IllusorySprite {
    Image8 rgba; // 4 channels
    double offset_u = 0.0;
    double offset_v = 0.0;
    double scale = 1.0;
    int alpha_threshold = 127; // masked where alpha > threshold

    /// Throws ContractError if the placed footprint leaves the image or
    /// the sprite is not RGBA.
    void check_placement(const Camera& cam) const;

    /// Image-resolution rasterization of the placed sprite: which pixels
    /// are covered and their straight RGBA color in [0,1].
    struct Raster {
        Mask mask;
        std::vector<Eigen::Vector4d> rgba; // per pixel, zero outside the footprint
        int u_begin = 0, u_end = 0, v_begin = 0, v_end = 0; // footprint bounds
    };
    Raster rasterize(const Camera& cam) const;
};

struct PoisonConfig {
    double t_min = 0.3;
    int samples_per_ray = 64;
    double bandwidth_h = kDefaultBandwidth;
    double poison_opacity = 0.99;
    int pixel_stride = 1;

    void validate() const;
};

struct MinDensitySample {
    Eigen::Vector3d position;
    double t = 0.0;
    double density = 0.0;
};

/// Argmin of f over n uniformly spaced samples t in [t_min, t_max]
/// (both endpoints included); ties resolve to the smallest t.
MinDensitySample select_min_density(const KdeField& field, const Ray& ray, double t_min, double t_max, int n,
                                    PixelIndex px = {});

/// Ray distance to the first surface at `px`: the rendered z-depth
/// converted to distance along the pixel's ray, or 0.95 x the ray's AABB
/// exit distance where the depth map has no coverage. nullopt when the
/// ray misses the box.
std::optional<double> depth_bound(const MapF& depth, const Camera& cam, PixelIndex px, const Aabb& box);

struct InjectionLogEntry {
    PixelIndex pixel;
    double t = 0.0;
    double density = 0.0;
};

struct SkippedPixel {
    PixelIndex pixel;
    std::string reason;
};

struct InjectionResult {
    GaussianCloud poisoned_cloud;
    std::size_t inserted_count = 0;
    std::vector<InjectionLogEntry> per_point_log;
    std::vector<SkippedPixel> skipped;
};

/// Density-guided attack: one poison Gaussian per masked pixel (every
/// pixel_stride-th in both axes) at the ray's minimum-density sample.
InjectionResult inject(const GaussianCloud& cloud, const KdeField& field, const Camera& cam_p,
                       const IllusorySprite& sprite, const PoisonConfig& cfg, const MapF& depth);

/// Control baseline: same insertion at constant ray distance `fixed_t`.
InjectionResult naive_backproject(const GaussianCloud& cloud, const Camera& cam_p, const IllusorySprite& sprite,
                                  double fixed_t, const PoisonConfig& cfg = {});

/// Builds the Gaussian placed for one pixel.
GaussianPoint make_poison_point(const Eigen::Vector3d& position, double t, const Eigen::Vector3d& rgb,
                                const Camera& cam, const PoisonConfig& cfg);

/// Clean render with the sprite alpha-composited over it (the ideal
/// poisoned-view appearance).
ImageF composite_target(const ImageF& clean, const IllusorySprite::Raster& raster);

} // namespace gspoison
