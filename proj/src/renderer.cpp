// SPDX-License-Identifier: Apache-2.0
#include "gspoison/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "gspoison/error.hpp"
#include "gspoison/parallel.hpp"
#include "gspoison/simd/kernels.hpp"

namespace gspoison {

ProjectedSplat project_gaussian(const GaussianPoint& p, const Camera& cam) {
    ProjectedSplat out;
    const Eigen::Vector3d pc = cam.world_to_camera(p.mean());
    if (!(pc.z() > kNearPlane)) return out;

    const double z = pc.z();
    // Clamp the Jacobian's lateral term to a slightly widened frustum.
    const double lo_x = -1.3 * cam.cx() / cam.fx(), hi_x = 1.3 * (cam.width() - cam.cx()) / cam.fx();
    const double lo_y = -1.3 * cam.cy() / cam.fy(), hi_y = 1.3 * (cam.height() - cam.cy()) / cam.fy();
    const double x = std::clamp(pc.x() / z, lo_x, hi_x) * z;
    const double y = std::clamp(pc.y() / z, lo_y, hi_y) * z;

    Eigen::Matrix<double, 2, 3> jac;
    jac << cam.fx() / z, 0.0, -cam.fx() * x / (z * z), 0.0, cam.fy() / z, -cam.fy() * y / (z * z);
    const Eigen::Matrix3d w2c = cam.rotation().transpose();
    const Eigen::Matrix3d cov_cam = w2c * covariance_of(p) * w2c.transpose();
    Eigen::Matrix2d cov = jac * cov_cam * jac.transpose();
    cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
    cov(0, 0) += kLowPassDilation;
    cov(1, 1) += kLowPassDilation;
    if (!(cov.determinant() > 0.0) || !cov.allFinite()) return out;

    out.mean = cam.project_camera(pc);
    out.cov = cov;
    out.depth = z;
    out.visible = out.mean.allFinite();
    return out;
}

namespace {

struct SortedSplat {
    simd::SplatParams params;
    int u0, u1, v0, v1; // half-open pixel rectangle
};

std::vector<SortedSplat> prepare(const GaussianCloud& cloud, const Camera& cam) {
    const std::size_t n = cloud.size();
    std::vector<ProjectedSplat> proj(n);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) proj[i] = project_gaussian(cloud.points[i], cam);
    });

    std::vector<std::size_t> order;
    order.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (proj[i].visible) order.push_back(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return proj[a].depth < proj[b].depth; });

    std::vector<SortedSplat> out;
    out.reserve(order.size());
    for (std::size_t idx : order) {
        const ProjectedSplat& ps = proj[idx];
        const GaussianPoint& g = cloud.points[idx];
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(ps.cov, Eigen::EigenvaluesOnly);
        const double radius = std::ceil(3.0 * std::sqrt(eig.eigenvalues().maxCoeff()));
        // pixel u is touched when its center u + 0.5 lies within the radius
        const double umin = std::ceil(ps.mean.x() - radius - 0.5), umax = std::floor(ps.mean.x() + radius - 0.5);
        const double vmin = std::ceil(ps.mean.y() - radius - 0.5), vmax = std::floor(ps.mean.y() + radius - 0.5);
        SortedSplat s;
        s.u0 = static_cast<int>(std::clamp(umin, 0.0, double(cam.width())));
        s.u1 = static_cast<int>(std::clamp(umax + 1.0, 0.0, double(cam.width())));
        s.v0 = static_cast<int>(std::clamp(vmin, 0.0, double(cam.height())));
        s.v1 = static_cast<int>(std::clamp(vmax + 1.0, 0.0, double(cam.height())));
        if (s.u0 >= s.u1 || s.v0 >= s.v1) continue;

        const Eigen::Matrix2d conic = ps.cov.inverse();
        s.params.mean_u = ps.mean.x();
        s.params.mean_v = ps.mean.y();
        s.params.conic_a = conic(0, 0);
        s.params.conic_b = conic(0, 1);
        s.params.conic_c = conic(1, 1);
        s.params.opacity = g.opacity();
        const Eigen::Vector3d rgb = g.color().cwiseMax(0.0).cwiseMin(1.0);
        for (int c = 0; c < 3; ++c) s.params.color[c] = rgb[c];
        s.params.depth = ps.depth;
        out.push_back(s);
    }
    return out;
}

} // namespace

RenderedImage render(const GaussianCloud& cloud, const Camera& cam, const Eigen::Vector3d& background) {
    const int w = cam.width(), h = cam.height();
    const std::size_t npx = std::size_t(w) * h;
    std::vector<double> trans(npx, 1.0), red(npx, 0.0), green(npx, 0.0), blue(npx, 0.0), depth(npx, 0.0);
    std::vector<std::uint8_t> done(npx, 0);

    const std::vector<SortedSplat> splats = prepare(cloud, cam);
    const simd::SplatRowFn splat_row = simd::kernels().splat_row;

    constexpr int kBand = 16;
    const std::size_t bands = static_cast<std::size_t>((h + kBand - 1) / kBand);
    parallel_for(bands, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            const int band_v0 = static_cast<int>(b) * kBand;
            const int band_v1 = std::min(h, band_v0 + kBand);
            for (const SortedSplat& s : splats) {
                const int v0 = std::max(s.v0, band_v0), v1 = std::min(s.v1, band_v1);
                for (int v = v0; v < v1; ++v) {
                    const std::size_t off = std::size_t(v) * w;
                    simd::PixelRow row{trans.data() + off, red.data() + off,   green.data() + off,
                                       blue.data() + off,  depth.data() + off, done.data() + off};
                    splat_row(s.params, v + 0.5, s.u0, s.u1, row);
                }
            }
        }
    });

    RenderedImage out{ImageF(w, h), MapF(w, h), MapF(w, h)};
    for (std::size_t i = 0; i < npx; ++i) {
        const double t = trans[i];
        out.rgb.data[3 * i + 0] = red[i] + t * background[0];
        out.rgb.data[3 * i + 1] = green[i] + t * background[1];
        out.rgb.data[3 * i + 2] = blue[i] + t * background[2];
        const double a = 1.0 - t;
        out.alpha.data[i] = a;
        out.depth.data[i] = a >= kDepthAlphaFloor ? depth[i] / a : std::numeric_limits<double>::infinity();
    }
    return out;
}

MapF render_depth(const GaussianCloud& cloud, const Camera& cam) { return render(cloud, cam).depth; }

ImageF downsample(const ImageF& img, int factor) {
    if (factor < 1 || img.width % factor != 0 || img.height % factor != 0)
        throw ContractError("downsample: image size must be divisible by the factor");
    ImageF out(img.width / factor, img.height / factor);
    const double norm = 1.0 / (factor * factor);
    for (int v = 0; v < out.height; ++v)
        for (int u = 0; u < out.width; ++u)
            for (int c = 0; c < 3; ++c) {
                double s = 0.0;
                for (int dv = 0; dv < factor; ++dv)
                    for (int du = 0; du < factor; ++du) s += img.at(u * factor + du, v * factor + dv, c);
                out.at(u, v, c) = s * norm;
            }
    return out;
}

} // namespace gspoison
