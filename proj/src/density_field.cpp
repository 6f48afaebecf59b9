// SPDX-License-Identifier: Apache-2.0
#include "gspoison/density_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "gspoison/error.hpp"
#include "gspoison/parallel.hpp"

namespace gspoison {

bool Aabb::contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

Aabb compute_aabb(const GaussianCloud& cloud) {
    if (cloud.empty()) throw ContractError("compute_aabb: cloud is empty");
    Aabb box{cloud.points[0].mean(), cloud.points[0].mean()};
    for (const auto& p : cloud.points) {
        const Eigen::Vector3d m = p.mean();
        box.min = box.min.cwiseMin(m);
        box.max = box.max.cwiseMax(m);
    }
    for (int a = 0; a < 3; ++a) {
        if (box.max[a] - box.min[a] <= 0.0) {
            box.min[a] -= kAabbEpsilon;
            box.max[a] += kAabbEpsilon;
        }
    }
    return box;
}

VoxelGrid::VoxelGrid(const Aabb& box, std::array<int, 3> resolution) : box_(box), res_(resolution) {
    for (int r : res_)
        if (r < 1) throw ContractError("voxel resolution components must be >= 1");
    if (!((box.max.array() > box.min.array()).all())) throw ContractError("voxel grid AABB must have positive extent");
    densities_.assign(std::size_t(res_[0]) * res_[1] * res_[2], 0.0);
}

Eigen::Vector3d VoxelGrid::cell_size() const {
    return box_.extent().cwiseQuotient(Eigen::Vector3d(res_[0], res_[1], res_[2]));
}

std::array<int, 3> VoxelGrid::cell_of(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d size = cell_size();
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a) {
        const double f = std::floor((p[a] - box_.min[a]) / size[a]);
        c[a] = static_cast<int>(std::clamp(f, 0.0, double(res_[a] - 1)));
    }
    return c;
}

Eigen::Vector3d VoxelGrid::centroid(int i, int j, int k) const {
    const Eigen::Vector3d size = cell_size();
    return box_.min + Eigen::Vector3d((i + 0.5) * size.x(), (j + 0.5) * size.y(), (k + 0.5) * size.z());
}

double VoxelGrid::total_density() const {
    double s = 0.0;
    for (double d : densities_) s += d;
    return s;
}

void VoxelGrid::add(const Eigen::Vector3d& p, double value) {
    const auto c = cell_of(p);
    densities_[index(c[0], c[1], c[2])] += value;
}

void VoxelGrid::set_density(int i, int j, int k, double value) {
    if (!(value >= 0.0) || !std::isfinite(value)) throw ContractError("voxel density must be finite and >= 0");
    densities_.at(index(i, j, k)) = value;
}

VoxelGrid voxelize(const GaussianCloud& cloud, std::array<int, 3> resolution) {
    VoxelGrid grid(compute_aabb(cloud), resolution);
    for (const auto& p : cloud.points) grid.add(p.mean(), p.opacity());
    return grid;
}

KdeField::KdeField(VoxelGrid grid, double bandwidth_h, double cutoff_sigmas)
    : grid_(std::move(grid)), h_(bandwidth_h), cutoff_(cutoff_sigmas) {
    if (!(h_ > 0.0) || !std::isfinite(h_)) throw ContractError("KDE bandwidth must be positive");
    if (!(cutoff_ >= 0.0)) throw ContractError("KDE cutoff must be >= 0");
    scale_ = kNormalizedSceneSize / grid_.aabb().longest_edge();
    norm_ = 1.0 / std::pow(2.0 * M_PI * h_ * h_, 1.5);

    const auto& res = grid_.resolution();
    const auto rho = grid_.densities();
    for (int i = 0; i < res[0]; ++i) {
        for (int j = 0; j < res[1]; ++j) {
            const std::size_t base = grid_.index(i, j, 0);
            int k0 = 0, k1 = res[2];
            while (k0 < k1 && rho[base + k0] == 0.0) ++k0;
            while (k1 > k0 && rho[base + k1 - 1] == 0.0) --k1;
            if (k0 == k1) continue;
            rows_.push_back({i, j, k0, k1, packed_.size()});
            packed_.insert(packed_.end(), rho.begin() + base + k0, rho.begin() + base + k1);
        }
    }
}

double KdeField::eval(const Eigen::Vector3d& x) const {
    const auto& res = grid_.resolution();
    const Eigen::Vector3d q = (x - grid_.aabb().min) * scale_;
    const Eigen::Vector3d cell = grid_.cell_size() * scale_;
    const double inv_two_h2 = 1.0 / (2.0 * h_ * h_);
    const double cutoff = cutoff_ * h_;

    // Separable kernel: exp(-|d|^2 / 2h^2) = prod over axes.
    thread_local std::vector<double> g[3];
    for (int a = 0; a < 3; ++a) {
        g[a].resize(res[a]);
        for (int i = 0; i < res[a]; ++i) {
            const double d = q[a] - (i + 0.5) * cell[a];
            g[a][i] = (cutoff > 0.0 && std::abs(d) > cutoff) ? 0.0 : std::exp(-d * d * inv_two_h2);
        }
    }
    if (rows_.empty()) return 0.0;
    const double sum =
        simd::kernels().kde_contract(rows_.data(), rows_.size(), packed_.data(), g[0].data(), g[1].data(), g[2].data());
    return norm_ * sum / static_cast<double>(grid_.cell_count());
}

std::vector<double> KdeField::eval_batch(std::span<const Eigen::Vector3d> xs) const {
    std::vector<double> out(xs.size());
    parallel_for(xs.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = eval(xs[i]);
    });
    return out;
}

double kde_eval(const KdeField& field, const Eigen::Vector3d& x) { return field.eval(x); }

std::vector<double> kde_eval_batch(const KdeField& field, std::span<const Eigen::Vector3d> xs) {
    return field.eval_batch(xs);
}

void write_grid_dump(const VoxelGrid& grid, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write grid dump '" + path.string() + "'");
    auto put = [&](const void* p, std::size_t n) { out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); };
    for (int a = 0; a < 3; ++a) put(&grid.aabb().min[a], 8);
    for (int a = 0; a < 3; ++a) put(&grid.aabb().max[a], 8);
    for (int a = 0; a < 3; ++a) {
        const std::uint32_t r = static_cast<std::uint32_t>(grid.resolution()[a]);
        put(&r, 4);
    }
    const std::uint32_t pad = 0;
    put(&pad, 4);
    const auto d = grid.densities();
    put(d.data(), d.size() * sizeof(double));
    if (!out) throw IoError("failed writing grid dump '" + path.string() + "'");
}

} // namespace gspoison
