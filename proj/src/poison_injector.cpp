// SPDX-License-Identifier: Apache-2.0
#include "gspoison/poison_injector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gspoison/error.hpp"
#include "gspoison/log.hpp"
#include "gspoison/parallel.hpp"

namespace gspoison {

namespace {

std::string pixel_name(PixelIndex px) { return "(" + std::to_string(px.u) + ", " + std::to_string(px.v) + ")"; }

// Masked pixels visited by the attack, in row-major scan order.
std::vector<PixelIndex> visited_pixels(const IllusorySprite::Raster& raster, int stride) {
    std::vector<PixelIndex> out;
    for (int v = raster.v_begin; v < raster.v_end; v += stride)
        for (int u = raster.u_begin; u < raster.u_end; u += stride)
            if (raster.mask.at(u, v)) out.push_back({u, v});
    return out;
}

} // namespace

void IllusorySprite::check_placement(const Camera& cam) const {
    if (rgba.channels != 4) throw ContractError("sprite must be RGBA");
    if (rgba.width <= 0 || rgba.height <= 0) throw ContractError("sprite is empty");
    if (!(scale > 0.0)) throw ContractError("sprite scale must be positive");
    if (offset_u < 0.0 || offset_v < 0.0 || offset_u + rgba.width * scale > cam.width() ||
        offset_v + rgba.height * scale > cam.height())
        throw ContractError("placed sprite footprint leaves the poisoned view's image bounds");
}

IllusorySprite::Raster IllusorySprite::rasterize(const Camera& cam) const {
    check_placement(cam);
    Raster r;
    r.mask = Mask(cam.width(), cam.height());
    r.rgba.assign(std::size_t(cam.width()) * cam.height(), Eigen::Vector4d::Zero());
    // pixels whose centers fall inside the placed footprint
    r.u_begin = static_cast<int>(std::ceil(offset_u - 0.5));
    r.v_begin = static_cast<int>(std::ceil(offset_v - 0.5));
    r.u_end = std::min(cam.width(), static_cast<int>(std::ceil(offset_u + rgba.width * scale - 0.5)));
    r.v_end = std::min(cam.height(), static_cast<int>(std::ceil(offset_v + rgba.height * scale - 0.5)));
    for (int v = r.v_begin; v < r.v_end; ++v) {
        const int j = std::min(rgba.height - 1, static_cast<int>(std::floor((v + 0.5 - offset_v) / scale)));
        for (int u = r.u_begin; u < r.u_end; ++u) {
            const int i = std::min(rgba.width - 1, static_cast<int>(std::floor((u + 0.5 - offset_u) / scale)));
            Eigen::Vector4d c(rgba.at(i, j, 0), rgba.at(i, j, 1), rgba.at(i, j, 2), rgba.at(i, j, 3));
            r.rgba[std::size_t(v) * cam.width() + u] = c / 255.0;
            r.mask.set(u, v, rgba.at(i, j, 3) > alpha_threshold);
        }
    }
    return r;
}

void PoisonConfig::validate() const {
    if (!(t_min > 0.0)) throw ContractError("t_min must be positive");
    if (samples_per_ray < 2) throw ContractError("samples_per_ray must be >= 2");
    if (!(bandwidth_h > 0.0)) throw ContractError("bandwidth_h must be positive");
    if (!(poison_opacity > 0.0 && poison_opacity < 1.0)) throw ContractError("poison_opacity must lie in (0, 1)");
    if (pixel_stride < 1) throw ContractError("pixel_stride must be >= 1");
}

MinDensitySample select_min_density(const KdeField& field, const Ray& ray, double t_min, double t_max, int n,
                                    PixelIndex px) {
    if (!(t_max > t_min))
        throw ContractError("select_min_density: t_max <= t_min at pixel " + pixel_name(px));
    if (n < 2) throw ContractError("select_min_density: need at least 2 samples");
    MinDensitySample best;
    best.density = std::numeric_limits<double>::infinity();
    const double step = (t_max - t_min) / (n - 1);
    for (int i = 0; i < n; ++i) {
        const double t = (i == n - 1) ? t_max : t_min + step * i;
        const Eigen::Vector3d x = ray.at(t);
        const double f = field.eval(x);
        if (f < best.density) best = {x, t, f};
    }
    return best;
}

std::optional<double> depth_bound(const MapF& depth, const Camera& cam, PixelIndex px, const Aabb& box) {
    const Ray ray = ray_through_pixel(cam, px);
    const double z = depth.at(px.u, px.v);
    if (std::isfinite(z)) {
        // convert view-space z to distance along the unit ray
        const Eigen::Vector3d dir_cam((px.u + 0.5 - cam.cx()) / cam.fx(), (px.v + 0.5 - cam.cy()) / cam.fy(), 1.0);
        return z * dir_cam.norm();
    }
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double o = ray.origin[a], d = ray.direction[a];
        if (d == 0.0) {
            if (o < box.min[a] || o > box.max[a]) return std::nullopt;
            continue;
        }
        double t0 = (box.min[a] - o) / d, t1 = (box.max[a] - o) / d;
        if (t0 > t1) std::swap(t0, t1);
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
    }
    if (t_far < std::max(t_near, 0.0)) return std::nullopt;
    return 0.95 * t_far;
}

GaussianPoint make_poison_point(const Eigen::Vector3d& position, double t, const Eigen::Vector3d& rgb,
                                const Camera& cam, const PoisonConfig& cfg) {
    GaussianPoint p;
    for (int a = 0; a < 3; ++a) p.position[a] = static_cast<float>(position[a]);
    p.rotation = {1.0f, 0.0f, 0.0f, 0.0f};
    // isotropic, about one poisoned-view pixel (times stride) wide at distance t
    const double sigma = t * cfg.pixel_stride / cam.fx();
    p.log_scale.fill(static_cast<float>(std::log(sigma)));
    p.opacity_logit = static_cast<float>(logit(cfg.poison_opacity));
    p.color_dc = color_to_dc(rgb);
    return p;
}

namespace {

struct PixelOutcome {
    bool ok = false;
    MinDensitySample sample;
    std::string reason;
};

InjectionResult assemble(const GaussianCloud& cloud, const Camera& cam, const IllusorySprite::Raster& raster,
                         const std::vector<PixelIndex>& pixels, const std::vector<PixelOutcome>& outcomes,
                         const PoisonConfig& cfg) {
    InjectionResult result;
    result.poisoned_cloud = cloud;
    result.poisoned_cloud.provenance = cloud.provenance.empty() ? "poisoned" : cloud.provenance + " +poison";
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const PixelOutcome& o = outcomes[i];
        if (!o.ok) {
            result.skipped.push_back({pixels[i], o.reason});
            continue;
        }
        const Eigen::Vector4d c = raster.rgba[std::size_t(pixels[i].v) * cam.width() + pixels[i].u];
        result.poisoned_cloud.push_back(make_poison_point(o.sample.position, o.sample.t, c.head<3>(), cam, cfg));
        result.per_point_log.push_back({pixels[i], o.sample.t, o.sample.density});
    }
    result.inserted_count = result.per_point_log.size();
    return result;
}

} // namespace

InjectionResult inject(const GaussianCloud& cloud, const KdeField& field, const Camera& cam_p,
                       const IllusorySprite& sprite, const PoisonConfig& cfg, const MapF& depth) {
    cfg.validate();
    if (cloud.empty()) throw ContractError("inject: cloud is empty");
    if (depth.width != cam_p.width() || depth.height != cam_p.height())
        throw ContractError("inject: depth map resolution does not match the poisoned camera");
    const auto raster = sprite.rasterize(cam_p);
    if (raster.mask.count() == 0) throw ContractError("inject: sprite mask is empty");

    const std::vector<PixelIndex> pixels = visited_pixels(raster, cfg.pixel_stride);
    const Aabb& box = field.grid().aabb();
    std::vector<PixelOutcome> outcomes(pixels.size());
    parallel_for(pixels.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const PixelIndex px = pixels[i];
            const auto t_max = depth_bound(depth, cam_p, px, box);
            if (!t_max) {
                outcomes[i].reason = "ray misses the scene bounding box";
                continue;
            }
            if (!(*t_max > cfg.t_min)) {
                outcomes[i].reason = "scene depth " + std::to_string(*t_max) + " is not beyond t_min";
                continue;
            }
            outcomes[i].sample =
                select_min_density(field, ray_through_pixel(cam_p, px), cfg.t_min, *t_max, cfg.samples_per_ray, px);
            outcomes[i].ok = true;
        }
    });
    InjectionResult res = assemble(cloud, cam_p, raster, pixels, outcomes, cfg);
    if (!res.skipped.empty())
        log_warning("inject: skipped " + std::to_string(res.skipped.size()) + " of " + std::to_string(pixels.size()) +
                    " pixels (first: " + pixel_name(res.skipped.front().pixel) + ", " + res.skipped.front().reason +
                    ")");
    return res;
}

InjectionResult naive_backproject(const GaussianCloud& cloud, const Camera& cam_p, const IllusorySprite& sprite,
                                  double fixed_t, const PoisonConfig& cfg) {
    if (!(fixed_t > 0.0)) throw ContractError("naive_backproject: fixed_t must be positive");
    if (cfg.pixel_stride < 1) throw ContractError("pixel_stride must be >= 1");
    if (!(cfg.poison_opacity > 0.0 && cfg.poison_opacity < 1.0))
        throw ContractError("poison_opacity must lie in (0, 1)");
    const auto raster = sprite.rasterize(cam_p);
    if (raster.mask.count() == 0) throw ContractError("naive_backproject: sprite mask is empty");
    const std::vector<PixelIndex> pixels = visited_pixels(raster, cfg.pixel_stride);
    std::vector<PixelOutcome> outcomes(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const Ray ray = ray_through_pixel(cam_p, pixels[i]);
        outcomes[i].ok = true;
        outcomes[i].sample = {ray.at(fixed_t), fixed_t, 0.0};
    }
    return assemble(cloud, cam_p, raster, pixels, outcomes, cfg);
}

ImageF composite_target(const ImageF& clean, const IllusorySprite::Raster& raster) {
    if (clean.width != raster.mask.width || clean.height != raster.mask.height)
        throw ContractError("composite_target: size mismatch");
    ImageF out = clean;
    for (int v = raster.v_begin; v < raster.v_end; ++v)
        for (int u = raster.u_begin; u < raster.u_end; ++u) {
            const Eigen::Vector4d& c = raster.rgba[std::size_t(v) * clean.width + u];
            for (int ch = 0; ch < 3; ++ch) out.at(u, v, ch) = c[3] * c[ch] + (1.0 - c[3]) * clean.at(u, v, ch);
        }
    return out;
}

} // namespace gspoison
