// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include "gspoison/camera.hpp"
#include "gspoison/gaussian_model.hpp"
#include "gspoison/image.hpp"

namespace gspoison {

struct RenderedImage {
    ImageF rgb;
    MapF alpha;
    /// Alpha-weighted expected view-space z; +inf where alpha < 1e-4.
    MapF depth;
};

inline constexpr double kNearPlane = 0.01;
inline constexpr double kLowPassDilation = 0.3;
inline constexpr double kDepthAlphaFloor = 1e-4;

/// Forward EWA splatting: every Gaussian is projected with the local-affine
/// Jacobian at its mean, dilated by 0.3 px^2, sorted by view-space depth
/// (ties by index) and alpha-composited front to back over `background`.
RenderedImage render(const GaussianCloud& cloud, const Camera& cam,
                     const Eigen::Vector3d& background = Eigen::Vector3d::Zero());

MapF render_depth(const GaussianCloud& cloud, const Camera& cam);

/// Screen-space footprint of one Gaussian, exposed for tests.
struct ProjectedSplat {
    Eigen::Vector2d mean;
    Eigen::Matrix2d cov; // includes the low-pass dilation
    double depth = 0.0;
    bool visible = false;
};
ProjectedSplat project_gaussian(const GaussianPoint& p, const Camera& cam);

/// Box-filters an image by an integer factor.
ImageF downsample(const ImageF& img, int factor);

} // namespace gspoison
