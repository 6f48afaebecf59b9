// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gspoison/camera.hpp"
#include "gspoison/gaussian_model.hpp"
#include "gspoison/image.hpp"

namespace gspoison {

enum class SceneKind { Wall, Corridor, Shell, Empty };
SceneKind parse_scene_kind(std::string_view name);
const char* scene_kind_name(SceneKind k);

struct SceneSpec {
    SceneKind kind = SceneKind::Wall;
    int splats = 0;  // approximate Gaussian budget, 0 = kind default
    int cameras = 0; // 0 = kind default
    int width = 400;
    int height = 400;
    std::uint64_t seed = 0;
};

struct Scene {
    GaussianCloud cloud;
    std::vector<CameraFrame> cameras;
    std::string poisoned_id;           // empty when the kind has no designated target
    std::vector<std::string> test_ids; // innocent views
};

/// Deterministic in (kind, parameters, seed).
///
/// wall: a three-layer opaque slab at z in [4.8, 5.2]; poisoned camera at
/// the origin looking +z, four innocent cameras behind the slab at z = 11
/// looking back.
/// corridor: cameras at (2i, 0, 0) looking +z through fog whose opacity
/// grows with x, in front of a back wall at z = 8.
/// shell: innocent ring looking at a central cluster, one ring camera
/// looking outward at a far backdrop.
/// empty: a dim distant backdrop only.
Scene make_scene(const SceneSpec& spec);

/// Fully opaque smooth RGBA test pattern.
Image8 make_sprite(int width, int height);

/// Default sprite offset centering a sprite of the given size.
inline double centered_offset(int image_size, int sprite_size, double scale = 1.0) {
    return 0.5 * (image_size - sprite_size * scale);
}

} // namespace gspoison
