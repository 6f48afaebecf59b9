// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gspoison {

/// SH band-0 constant. Activated color is `dc * kShC0 + 0.5`.
inline constexpr double kShC0 = 0.28209479177387814;

/// One anisotropic Gaussian as stored in a 3DGS PLY file.
///
/// Opacity is kept as a logit and scale as a natural log so that real
/// trained scenes load and save without any conversion.
struct GaussianPoint {
    std::array<float, 3> position{};
    std::array<float, 4> rotation{1.0f, 0.0f, 0.0f, 0.0f}; // w, x, y, z
    std::array<float, 3> log_scale{};
    float opacity_logit = 0.0f;
    std::array<float, 3> color_dc{};

    Eigen::Vector3d mean() const { return {position[0], position[1], position[2]}; }
    double opacity() const;
    Eigen::Vector3d scale() const;
    Eigen::Vector3d color() const; // activated DC color, unclamped
};

double sigmoid(double x);
double logit(double p);

/// rgb in [0,1] -> SH DC coefficients whose activation reproduces rgb.
std::array<float, 3> color_to_dc(const Eigen::Vector3d& rgb);

/// Scalar PLY property types.
enum class PlyType : std::uint8_t { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::size_t ply_type_size(PlyType t);

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::Float32;
};

/// Per-vertex property layout. Core fields are always float32; anything
/// else (f_rest_*, normals, ...) is carried as opaque bytes in `extra`.
struct PlyLayout {
    std::vector<PlyProperty> properties;

    static PlyLayout standard();
    std::size_t stride() const;
    std::size_t extra_stride() const;
};

/// The explicit scene. Treated as immutable after construction; poison
/// insertion builds a new cloud.
struct GaussianCloud {
    std::vector<GaussianPoint> points;
    std::string provenance;
    PlyLayout layout = PlyLayout::standard();
    // extras.size() == points.size() * layout.extra_stride()
    std::vector<std::uint8_t> extras;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    /// Appends a point; its extra payload (if the layout has any) is zeroed.
    void push_back(const GaussianPoint& p);
};

GaussianCloud load_ply(const std::filesystem::path& path);
void write_ply(const GaussianCloud& cloud, const std::filesystem::path& path);

/// In-memory variants used by the file functions.
GaussianCloud parse_ply(const std::vector<std::uint8_t>& bytes, const std::string& provenance = {});
std::vector<std::uint8_t> serialize_ply(const GaussianCloud& cloud);

Eigen::Matrix3d rotation_matrix(const std::array<float, 4>& wxyz);

/// Sigma = R diag(exp(log_scale))^2 R^T.
Eigen::Matrix3d covariance_of(const GaussianPoint& p);

} // namespace gspoison
