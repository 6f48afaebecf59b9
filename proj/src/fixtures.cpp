// SPDX-License-Identifier: Apache-2.0
#include "gspoison/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gspoison/error.hpp"
#include "gspoison/noise_scheduler.hpp"

namespace gspoison {

SceneKind parse_scene_kind(std::string_view name) {
    if (name == "wall") return SceneKind::Wall;
    if (name == "corridor") return SceneKind::Corridor;
    if (name == "shell") return SceneKind::Shell;
    if (name == "empty") return SceneKind::Empty;
    throw ContractError("unknown fixture kind '" + std::string(name) + "' (expected wall, corridor, shell or empty)");
}

const char* scene_kind_name(SceneKind k) {
    switch (k) {
    case SceneKind::Wall: return "wall";
    case SceneKind::Corridor: return "corridor";
    case SceneKind::Shell: return "shell";
    case SceneKind::Empty: return "empty";
    }
    return "wall";
}

namespace {

const Eigen::Vector3d kUp(0.0, -1.0, 0.0); // camera +y points down

class Jitter {
public:
    explicit Jitter(std::uint64_t seed, std::uint64_t stream) : rng_(noise_key(seed, "fixture", int(stream))) {}
    // uniform in [-1, 1)
    double next() { return 2.0 * rng_.uniform(counter_++) - 1.0; }

private:
    KeyedRng rng_;
    std::uint64_t counter_ = 0;
};

void add_splat(GaussianCloud& cloud, const Eigen::Vector3d& pos, double sigma, double opacity,
               const Eigen::Vector3d& rgb) {
    GaussianPoint p;
    for (int a = 0; a < 3; ++a) p.position[a] = static_cast<float>(pos[a]);
    p.log_scale.fill(static_cast<float>(std::log(sigma)));
    p.opacity_logit = static_cast<float>(logit(opacity));
    p.color_dc = color_to_dc(rgb.cwiseMax(0.0).cwiseMin(1.0));
    cloud.push_back(p);
}

std::string cam_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "cam_%03d", i);
    return buf;
}

CameraFrame frame(int i, const Camera& cam) { return {cam, "images/" + cam_id(i) + ".png", cam_id(i)}; }

// Fibonacci sphere of `n` splats.
void add_backdrop(GaussianCloud& cloud, int n, double radius, double brightness, std::uint64_t seed) {
    Jitter jit(seed, 7);
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    const double sigma = radius * std::sqrt(4.0 * M_PI / n) * 0.6;
    for (int i = 0; i < n; ++i) {
        const double y = 1.0 - 2.0 * (i + 0.5) / n;
        const double r = std::sqrt(1.0 - y * y);
        const double phi = golden * i;
        const Eigen::Vector3d dir(r * std::cos(phi), y, r * std::sin(phi));
        const Eigen::Vector3d rgb = brightness * Eigen::Vector3d(0.6 + 0.4 * dir.x(), 0.6 + 0.3 * dir.y(),
                                                                 0.7 + 0.3 * dir.z() + 0.05 * jit.next());
        add_splat(cloud, radius * dir, sigma, 0.9, rgb);
    }
}

Scene make_wall(const SceneSpec& s) {
    Scene scene;
    const int budget = s.splats > 0 ? s.splats : 20000;
    constexpr double kHalf = 6.0;
    constexpr int kLayers = 3;
    const double spacing = std::sqrt(4.0 * kHalf * kHalf * kLayers / budget);
    const int n = std::max(2, static_cast<int>(std::lround(2.0 * kHalf / spacing)) + 1);
    const double step = 2.0 * kHalf / (n - 1);
    Jitter jit(s.seed, 1);
    for (int l = 0; l < kLayers; ++l) {
        const double z = 4.8 + 0.2 * l;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double x = -kHalf + step * i, y = -kHalf + step * j;
                Eigen::Vector3d pos(x + 0.1 * step * jit.next(), y + 0.1 * step * jit.next(), z);
                // exact slab bounds on the border rows
                if (i == 0 || i == n - 1) pos.x() = x;
                if (j == 0 || j == n - 1) pos.y() = y;
                const double gx = (x + kHalf) / (2 * kHalf), gy = (y + kHalf) / (2 * kHalf);
                const Eigen::Vector3d rgb(0.2 + 0.25 * gx, 0.5 + 0.1 * gy, 0.25 + 0.25 * gy);
                add_splat(scene.cloud, pos, 0.75 * step, 0.95, rgb);
            }
    }
    scene.cloud.provenance = "fixture:wall";

    const int w = s.width, h = s.height;
    const double f = double(w);
    Eigen::Matrix4d id = Eigen::Matrix4d::Identity();
    scene.cameras.push_back(frame(0, Camera(w, h, f, f, 0.5 * w, 0.5 * h, id)));
    scene.poisoned_id = cam_id(0);
    const int innocents = s.cameras > 0 ? std::max(1, s.cameras - 1) : 4;
    for (int k = 0; k < innocents; ++k) {
        const double a = 2.0 * M_PI * (k + 0.5) / innocents;
        const Eigen::Vector3d eye(std::sqrt(2.0) * std::cos(a), std::sqrt(2.0) * std::sin(a), 11.0);
        const Eigen::Vector3d target(eye.x(), eye.y(), 0.0);
        scene.cameras.push_back(frame(k + 1, Camera(w, h, f, f, 0.5 * w, 0.5 * h, look_at(eye, target, kUp))));
        scene.test_ids.push_back(cam_id(k + 1));
    }
    return scene;
}

Scene make_corridor(const SceneSpec& s) {
    Scene scene;
    const int ncam = s.cameras > 0 ? s.cameras : 10;
    if (ncam < 3) throw ContractError("corridor fixture needs at least 3 cameras");
    const double x_last = 2.0 * (ncam - 1);
    const double x0 = -4.0, x1 = x_last + 4.0;
    const int budget = s.splats > 0 ? s.splats : 16000;
    Jitter jit(s.seed, 2);

    // back wall at z = 8
    const double wall_spacing = 0.3;
    const int wx = static_cast<int>(std::lround((x1 - x0 + 4.0) / wall_spacing)) + 1;
    const int wy = static_cast<int>(std::lround(8.0 / wall_spacing)) + 1;
    for (int j = 0; j < wy; ++j)
        for (int i = 0; i < wx; ++i) {
            const double x = x0 - 2.0 + wall_spacing * i, y = -4.0 + wall_spacing * j;
            const double stripe = 0.5 + 0.5 * std::sin(1.3 * x) * std::cos(1.1 * y);
            add_splat(scene.cloud, {x, y, 8.0}, 0.7 * wall_spacing, 0.95,
                      {0.3 + 0.5 * stripe, 0.3 + 0.3 * (1 - stripe), 0.6});
        }

    // fog whose opacity rises linearly along the corridor
    const int fog_budget = std::max(64, budget - wx * wy);
    const double volume = (x1 - x0) * 6.0 * 8.5;
    const double spacing = std::cbrt(volume / fog_budget);
    const int fx = static_cast<int>(std::lround((x1 - x0) / spacing)) + 1;
    const int fy = static_cast<int>(std::lround(6.0 / spacing)) + 1;
    // z levels are anchored so one sits between the cameras and t_min
    constexpr double kVeilZ = 0.15;
    const int k_lo = -static_cast<int>(std::floor((kVeilZ + 1.0) / spacing));
    const int k_hi = static_cast<int>(std::floor((7.5 - kVeilZ) / spacing));
    for (int k = k_lo; k <= k_hi; ++k)
        for (int j = 0; j < fy; ++j)
            for (int i = 0; i < fx; ++i) {
                Eigen::Vector3d pos(x0 + (x1 - x0) * i / (fx - 1), -3.0 + 6.0 * j / (fy - 1), kVeilZ + spacing * k);
                pos += 0.15 * spacing * Eigen::Vector3d(jit.next(), jit.next(), k == 0 ? 0.0 : jit.next());
                const double g = (pos.x() - x0) / (x1 - x0);
                add_splat(scene.cloud, pos, 0.45 * spacing, 0.01 + 0.3 * std::clamp(g, 0.0, 1.0),
                          {0.55, 0.55, 0.5});
            }
    scene.cloud.provenance = "fixture:corridor";

    const int w = s.width, h = s.height;
    for (int i = 0; i < ncam; ++i) {
        Eigen::Matrix4d c2w = Eigen::Matrix4d::Identity();
        c2w(0, 3) = 2.0 * i;
        scene.cameras.push_back(frame(i, Camera(w, h, w, w, 0.5 * w, 0.5 * h, c2w)));
        scene.test_ids.push_back(cam_id(i));
    }
    return scene;
}

Scene make_shell(const SceneSpec& s) {
    Scene scene;
    const int budget = s.splats > 0 ? s.splats : 12000;
    Jitter jit(s.seed, 3);
    const int cluster = budget / 3;
    for (int i = 0; i < cluster; ++i) {
        Eigen::Vector3d p(jit.next(), jit.next(), jit.next());
        while (p.squaredNorm() > 1.0) p = {jit.next(), jit.next(), jit.next()};
        const Eigen::Vector3d pos = 1.5 * p;
        add_splat(scene.cloud, pos, 0.12, 0.9, {0.5 + 0.3 * p.x(), 0.4 + 0.3 * p.y(), 0.5 + 0.3 * p.z()});
    }
    add_backdrop(scene.cloud, budget - cluster, 20.0, 0.8, s.seed);
    scene.cloud.provenance = "fixture:shell";

    const int w = s.width, h = s.height;
    const double f = 1.5 * w;
    const int innocents = s.cameras > 0 ? std::max(2, s.cameras - 1) : 8;
    // poisoned camera on the ring at angle 0, facing away from the center
    const Eigen::Vector3d p_eye(6.0, 0.0, 0.0);
    scene.cameras.push_back(
        frame(0, Camera(w, h, f, f, 0.5 * w, 0.5 * h, look_at(p_eye, Eigen::Vector3d(12.0, 0.0, 0.0), kUp))));
    scene.poisoned_id = cam_id(0);
    for (int k = 0; k < innocents; ++k) {
        const double a = M_PI / 3.0 + (4.0 * M_PI / 3.0) * k / std::max(1, innocents - 1);
        const Eigen::Vector3d eye(6.0 * std::cos(a), 0.0, 6.0 * std::sin(a));
        scene.cameras.push_back(
            frame(k + 1, Camera(w, h, f, f, 0.5 * w, 0.5 * h, look_at(eye, Eigen::Vector3d::Zero(), kUp))));
        scene.test_ids.push_back(cam_id(k + 1));
    }
    return scene;
}

Scene make_empty(const SceneSpec& s) {
    Scene scene;
    add_backdrop(scene.cloud, s.splats > 0 ? s.splats : 2000, 50.0, 0.08, s.seed);
    scene.cloud.provenance = "fixture:empty";
    const int w = s.width, h = s.height;
    const int ncam = s.cameras > 0 ? s.cameras : 3;
    for (int i = 0; i < ncam; ++i) {
        const double a = 2.0 * M_PI * i / ncam;
        const Eigen::Vector3d target(std::cos(a), 0.0, std::sin(a));
        scene.cameras.push_back(
            frame(i, Camera(w, h, w, w, 0.5 * w, 0.5 * h, look_at(Eigen::Vector3d::Zero(), target, kUp))));
        scene.test_ids.push_back(cam_id(i));
    }
    return scene;
}

} // namespace

Scene make_scene(const SceneSpec& spec) {
    if (spec.width < 16 || spec.height < 16) throw ContractError("fixture images must be at least 16x16");
    if (spec.splats < 0 || spec.cameras < 0) throw ContractError("fixture counts must be non-negative");
    switch (spec.kind) {
    case SceneKind::Wall: return make_wall(spec);
    case SceneKind::Corridor: return make_corridor(spec);
    case SceneKind::Shell: return make_shell(spec);
    case SceneKind::Empty: return make_empty(spec);
    }
    throw ContractError("unknown fixture kind");
}

Image8 make_sprite(int width, int height) {
    if (width < 1 || height < 1) throw ContractError("sprite size must be positive");
    Image8 img(width, height, 4);
    for (int j = 0; j < height; ++j)
        for (int i = 0; i < width; ++i) {
            const double a = width > 1 ? double(i) / (width - 1) : 0.0;
            const double b = height > 1 ? double(j) / (height - 1) : 0.0;
            img.at(i, j, 0) = static_cast<std::uint8_t>(std::lround(255.0 * (0.95 - 0.35 * a)));
            img.at(i, j, 1) = static_cast<std::uint8_t>(std::lround(255.0 * (0.10 + 0.15 * b)));
            img.at(i, j, 2) = static_cast<std::uint8_t>(std::lround(255.0 * (0.20 + 0.50 * a * b)));
            img.at(i, j, 3) = 255;
        }
    return img;
}

} // namespace gspoison
