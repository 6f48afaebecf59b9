// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gspoison/gaussian_model.hpp"
#include "gspoison/simd/kernels.hpp"

namespace gspoison {

struct Aabb {
    Eigen::Vector3d min;
    Eigen::Vector3d max;

    Eigen::Vector3d extent() const { return max - min; }
    double diagonal() const { return extent().norm(); }
    double longest_edge() const { return extent().maxCoeff(); }
    /// Closed-box containment.
    bool contains(const Eigen::Vector3d& p) const;
};

/// Componentwise min/max of all means; collapsed axes are widened by
/// 1e-6 on each side so cells keep positive volume.
Aabb compute_aabb(const GaussianCloud& cloud);

inline constexpr double kAabbEpsilon = 1e-6;

/// Uniform grid over an AABB holding rho(s), the summed activated opacity
/// of the Gaussians whose mean lies in cell s. Cell (i, j, k) lives at
/// index (i * ny + j) * nz + k.
class VoxelGrid {
public:
    VoxelGrid(const Aabb& box, std::array<int, 3> resolution);

    const Aabb& aabb() const { return box_; }
    const std::array<int, 3>& resolution() const { return res_; }
    std::size_t cell_count() const { return densities_.size(); }
    std::size_t index(int i, int j, int k) const { return (std::size_t(i) * res_[1] + j) * res_[2] + k; }
    std::array<int, 3> cell_of(const Eigen::Vector3d& p) const;
    Eigen::Vector3d centroid(int i, int j, int k) const;
    Eigen::Vector3d cell_size() const;

    std::span<const double> densities() const { return densities_; }
    double density(int i, int j, int k) const { return densities_[index(i, j, k)]; }
    double total_density() const;

    void add(const Eigen::Vector3d& p, double value);
    // Direct access for tests and fixtures.
    void set_density(int i, int j, int k, double value);

private:
    Aabb box_;
    std::array<int, 3> res_;
    std::vector<double> densities_;
};

VoxelGrid voxelize(const GaussianCloud& cloud, std::array<int, 3> resolution);

inline constexpr std::array<int, 3> kDefaultResolution = {64, 64, 64};
inline constexpr double kDefaultBandwidth = 7.5;
inline constexpr double kNormalizedSceneSize = 100.0;

/// Continuous density f(x) = (1/|S|) sum_s K_h(x - c(s)) rho(s) with an
/// isotropic Gaussian kernel. Distances and h are measured in the
/// normalized scene frame where the AABB's longest edge spans 100 units.
class KdeField {
public:
    /// `cutoff_sigmas` > 0 drops kernel terms farther than that many
    /// bandwidths from the query; 0 keeps the exact sum.
    KdeField(VoxelGrid grid, double bandwidth_h, double cutoff_sigmas = 0.0);

    const VoxelGrid& grid() const { return grid_; }
    double bandwidth() const { return h_; }
    double cutoff_sigmas() const { return cutoff_; }
    /// World length -> normalized-frame length.
    double world_to_normalized() const { return scale_; }

    double eval(const Eigen::Vector3d& x) const;
    std::vector<double> eval_batch(std::span<const Eigen::Vector3d> xs) const;

    /// Kernel peak 1 / (2 pi h^2)^(3/2).
    double kernel_peak() const { return norm_; }

private:
    VoxelGrid grid_;
    double h_;
    double cutoff_;
    double scale_;
    double norm_;
    std::vector<simd::KdeRow> rows_;
    std::vector<double> packed_;
};

double kde_eval(const KdeField& field, const Eigen::Vector3d& x);
std::vector<double> kde_eval_batch(const KdeField& field, std::span<const Eigen::Vector3d> xs);

/// Grid dump: 64-byte header (min 3 x f64, max 3 x f64, resolution
/// 3 x u32, 4 pad bytes) followed by the f64 densities in index order.
void write_grid_dump(const VoxelGrid& grid, const std::filesystem::path& path);

} // namespace gspoison
