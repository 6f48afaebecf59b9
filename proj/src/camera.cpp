// SPDX-License-Identifier: Apache-2.0
#include "gspoison/camera.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

#include "gspoison/error.hpp"

namespace gspoison {

namespace {

constexpr double kOrthoTol = 1e-6;

void check_pose(const Eigen::Matrix4d& c2w) {
    const Eigen::Matrix3d r = c2w.topLeftCorner<3, 3>();
    const double err = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (!(err <= kOrthoTol)) throw ContractError("camera pose rotation is not orthonormal (error " + std::to_string(err) + ")");
    if (r.determinant() < 0.0) throw ContractError("camera pose rotation is a reflection (determinant -1)");
    if (!c2w.allFinite()) throw ContractError("camera pose has non-finite entries");
}

} // namespace

Camera::Camera(int width, int height, double fx, double fy, double cx, double cy, const Eigen::Matrix4d& c2w)
    : width_(width), height_(height), fx_(fx), fy_(fy), cx_(cx), cy_(cy), c2w_(c2w) {
    if (width <= 0 || height <= 0) throw ContractError("camera resolution must be positive");
    if (!(fx > 0.0) || !(fy > 0.0)) throw ContractError("camera focal lengths must be positive");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
        throw ContractError("camera principal point outside the image");
    check_pose(c2w);
}

Camera Camera::from_fov(int width, int height, double fov_x, const Eigen::Matrix4d& c2w) {
    if (!(fov_x > 0.0 && fov_x < M_PI)) throw ContractError("fov_x must lie in (0, pi)");
    const double f = width / (2.0 * std::tan(fov_x / 2.0));
    return Camera(width, height, f, f, width / 2.0, height / 2.0, c2w);
}

Eigen::Vector3d Camera::world_to_camera(const Eigen::Vector3d& p) const {
    return rotation().transpose() * (p - center());
}

Eigen::Vector2d Camera::project_camera(const Eigen::Vector3d& pc) const {
    return {fx_ * pc.x() / pc.z() + cx_, fy_ * pc.y() / pc.z() + cy_};
}

Camera Camera::resized(int width, int height) const {
    const double sx = double(width) / width_;
    const double sy = double(height) / height_;
    return Camera(width, height, fx_ * sx, fy_ * sy, cx_ * sx, cy_ * sy, c2w_);
}

Ray ray_through_pixel(const Camera& cam, const Eigen::Vector2d& uv) {
    if (!(uv.x() >= 0.0 && uv.x() < cam.width() && uv.y() >= 0.0 && uv.y() < cam.height()))
        throw ContractError("pixel (" + std::to_string(uv.x()) + ", " + std::to_string(uv.y()) + ") is outside the image");
    const Eigen::Vector3d dir_cam((uv.x() - cam.cx()) / cam.fx(), (uv.y() - cam.cy()) / cam.fy(), 1.0);
    return Ray{cam.center(), (cam.rotation() * dir_cam).normalized()};
}

Ray ray_through_pixel(const Camera& cam, PixelIndex px) {
    if (px.u < 0 || px.u >= cam.width() || px.v < 0 || px.v >= cam.height())
        throw ContractError("pixel (" + std::to_string(px.u) + ", " + std::to_string(px.v) + ") is outside the image");
    return ray_through_pixel(cam, Eigen::Vector2d(px.u + 0.5, px.v + 0.5));
}

Eigen::Matrix4d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up) {
    const Eigen::Vector3d forward = (target - eye).normalized();
    Eigen::Vector3d right = forward.cross(up);
    if (right.norm() < 1e-12) right = forward.unitOrthogonal();
    right.normalize();
    const Eigen::Vector3d down = forward.cross(right);
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.block<3, 1>(0, 0) = right;
    m.block<3, 1>(0, 1) = down;
    m.block<3, 1>(0, 2) = forward;
    m.block<3, 1>(0, 3) = eye;
    return m;
}

std::vector<CameraFrame> parse_cameras(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("camera JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("frames") || !doc["frames"].is_array())
        throw FormatError("camera JSON: expected an object with a 'frames' array");

    std::vector<CameraFrame> frames;
    std::size_t index = 0;
    for (const auto& f : doc["frames"]) {
        const std::string where = "camera JSON frame " + std::to_string(index++);
        try {
            CameraFrame frame;
            frame.id = f.at("id").get<std::string>();
            const int width = f.at("width").get<int>();
            const int height = f.at("height").get<int>();
            const auto& m = f.at("camera_to_world");
            if (!m.is_array() || m.size() != 16) throw FormatError(where + ": camera_to_world must hold 16 numbers");
            Eigen::Matrix4d c2w;
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) c2w(r, c) = m[r * 4 + c].get<double>();
            if (f.contains("fx")) {
                const double fx = f.at("fx").get<double>();
                const double fy = f.contains("fy") ? f.at("fy").get<double>() : fx;
                const double cx = f.contains("cx") ? f.at("cx").get<double>() : width / 2.0;
                const double cy = f.contains("cy") ? f.at("cy").get<double>() : height / 2.0;
                frame.camera = Camera(width, height, fx, fy, cx, cy, c2w);
            } else if (f.contains("fov_x")) {
                frame.camera = Camera::from_fov(width, height, f.at("fov_x").get<double>(), c2w);
            } else {
                throw FormatError(where + ": needs either fx or fov_x");
            }
            frame.image = f.value("image", std::string{});
            frames.push_back(std::move(frame));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(where + ": " + e.what());
        } catch (const ContractError& e) {
            throw FormatError(where + ": " + e.what());
        }
    }
    return frames;
}

std::vector<CameraFrame> load_cameras(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open camera file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_cameras(ss.str());
}

std::string cameras_to_json(const std::vector<CameraFrame>& frames) {
    nlohmann::json doc;
    doc["frames"] = nlohmann::json::array();
    for (const auto& f : frames) {
        nlohmann::json j;
        j["id"] = f.id;
        j["width"] = f.camera.width();
        j["height"] = f.camera.height();
        j["fx"] = f.camera.fx();
        j["fy"] = f.camera.fy();
        j["cx"] = f.camera.cx();
        j["cy"] = f.camera.cy();
        std::vector<double> m;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) m.push_back(f.camera.camera_to_world()(r, c));
        j["camera_to_world"] = m;
        j["image"] = f.image;
        doc["frames"].push_back(j);
    }
    return doc.dump(2) + "\n";
}

void write_cameras(const std::vector<CameraFrame>& frames, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write camera file '" + path.string() + "'");
    out << cameras_to_json(frames);
}

} // namespace gspoison
