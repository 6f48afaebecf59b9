// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gspoison {

struct Ray {
    Eigen::Vector3d origin;
    Eigen::Vector3d direction; // unit length

    Eigen::Vector3d at(double t) const { return origin + t * direction; }
};

/// Integer pixel index; its center is at (u + 0.5, v + 0.5).
struct PixelIndex {
    int u = 0;
    int v = 0;
};

/// Pinhole camera. Camera space is +x right, +y down, +z forward
/// (COLMAP / 3DGS convention). Image coordinates are continuous with
/// pixel (u, v) covering [u, u+1) x [v, v+1).
class Camera {
public:
    Camera() = default;
    /// Throws ContractError if intrinsics or the pose rotation are invalid.
    Camera(int width, int height, double fx, double fy, double cx, double cy, const Eigen::Matrix4d& camera_to_world);

    static Camera from_fov(int width, int height, double fov_x, const Eigen::Matrix4d& camera_to_world);

    int width() const { return width_; }
    int height() const { return height_; }
    double fx() const { return fx_; }
    double fy() const { return fy_; }
    double cx() const { return cx_; }
    double cy() const { return cy_; }
    const Eigen::Matrix4d& camera_to_world() const { return c2w_; }

    Eigen::Matrix3d rotation() const { return c2w_.topLeftCorner<3, 3>(); }
    Eigen::Vector3d center() const { return c2w_.topRightCorner<3, 1>(); }

    Eigen::Vector3d world_to_camera(const Eigen::Vector3d& p) const;

    /// Continuous image coordinate of a camera-space point (z > 0).
    Eigen::Vector2d project_camera(const Eigen::Vector3d& pc) const;
    Eigen::Vector2d project(const Eigen::Vector3d& world) const { return project_camera(world_to_camera(world)); }

    /// Same camera with a different resolution at fixed field of view.
    Camera resized(int width, int height) const;

private:
    int width_ = 1;
    int height_ = 1;
    double fx_ = 1.0;
    double fy_ = 1.0;
    double cx_ = 0.0;
    double cy_ = 0.0;
    Eigen::Matrix4d c2w_ = Eigen::Matrix4d::Identity();
};

/// Ray through a continuous image coordinate. Throws ContractError when
/// the coordinate is outside [0,width) x [0,height).
Ray ray_through_pixel(const Camera& cam, const Eigen::Vector2d& uv);
/// Ray through the center of an integer pixel.
Ray ray_through_pixel(const Camera& cam, PixelIndex px);

struct CameraFrame {
    Camera camera;
    std::string image; // relative to the pose file's directory
    std::string id;
};

std::vector<CameraFrame> load_cameras(const std::filesystem::path& path);
std::vector<CameraFrame> parse_cameras(const std::string& json_text);
std::string cameras_to_json(const std::vector<CameraFrame>& frames);
void write_cameras(const std::vector<CameraFrame>& frames, const std::filesystem::path& path);

/// Builds a camera-to-world matrix looking from `eye` toward `target`
/// with camera -y aligned as close to `up` as possible.
Eigen::Matrix4d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up);

} // namespace gspoison
