// SPDX-License-Identifier: Apache-2.0
#include "gspoison/gaussian_model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <Eigen/Geometry>

#include "gspoison/error.hpp"

static_assert(std::endian::native == std::endian::little, "PLY I/O assumes a little-endian host");

namespace gspoison {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

double GaussianPoint::opacity() const { return sigmoid(opacity_logit); }

Eigen::Vector3d GaussianPoint::scale() const {
    return {std::exp(double(log_scale[0])), std::exp(double(log_scale[1])), std::exp(double(log_scale[2]))};
}

Eigen::Vector3d GaussianPoint::color() const {
    return Eigen::Vector3d(color_dc[0], color_dc[1], color_dc[2]) * kShC0 + Eigen::Vector3d::Constant(0.5);
}

std::array<float, 3> color_to_dc(const Eigen::Vector3d& rgb) {
    std::array<float, 3> dc{};
    for (int c = 0; c < 3; ++c) dc[c] = static_cast<float>((rgb[c] - 0.5) / kShC0);
    return dc;
}

std::size_t ply_type_size(PlyType t) {
    switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
    }
    return 0;
}

namespace {

constexpr std::array<const char*, 14> kCoreNames = {
    "x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
    "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"};

std::optional<PlyType> parse_type(const std::string& s) {
    static const std::unordered_map<std::string, PlyType> table = {
        {"char", PlyType::Int8},     {"int8", PlyType::Int8},       {"uchar", PlyType::UInt8},
        {"uint8", PlyType::UInt8},   {"short", PlyType::Int16},     {"int16", PlyType::Int16},
        {"ushort", PlyType::UInt16}, {"uint16", PlyType::UInt16},   {"int", PlyType::Int32},
        {"int32", PlyType::Int32},   {"uint", PlyType::UInt32},     {"uint32", PlyType::UInt32},
        {"float", PlyType::Float32}, {"float32", PlyType::Float32}, {"double", PlyType::Float64},
        {"float64", PlyType::Float64}};
    auto it = table.find(s);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

const char* type_name(PlyType t) {
    switch (t) {
    case PlyType::Int8: return "char";
    case PlyType::UInt8: return "uchar";
    case PlyType::Int16: return "short";
    case PlyType::UInt16: return "ushort";
    case PlyType::Int32: return "int";
    case PlyType::UInt32: return "uint";
    case PlyType::Float32: return "float";
    case PlyType::Float64: return "double";
    }
    return "float";
}

bool is_core(const std::string& name) {
    for (const char* c : kCoreNames)
        if (name == c) return true;
    return false;
}

// Pointer to the core field of `p` named `name`.
float* core_field(GaussianPoint& p, const std::string& name) {
    if (name == "x") return &p.position[0];
    if (name == "y") return &p.position[1];
    if (name == "z") return &p.position[2];
    if (name == "f_dc_0") return &p.color_dc[0];
    if (name == "f_dc_1") return &p.color_dc[1];
    if (name == "f_dc_2") return &p.color_dc[2];
    if (name == "opacity") return &p.opacity_logit;
    if (name == "scale_0") return &p.log_scale[0];
    if (name == "scale_1") return &p.log_scale[1];
    if (name == "scale_2") return &p.log_scale[2];
    if (name == "rot_0") return &p.rotation[0];
    if (name == "rot_1") return &p.rotation[1];
    if (name == "rot_2") return &p.rotation[2];
    if (name == "rot_3") return &p.rotation[3];
    return nullptr;
}

std::string sanitize_comment(const std::string& s) {
    std::string out;
    for (char c : s) out += (c == '\n' || c == '\r') ? ' ' : c;
    return out;
}

} // namespace

PlyLayout PlyLayout::standard() {
    PlyLayout layout;
    for (const char* name : kCoreNames) layout.properties.push_back({name, PlyType::Float32});
    return layout;
}

std::size_t PlyLayout::stride() const {
    std::size_t s = 0;
    for (const auto& p : properties) s += ply_type_size(p.type);
    return s;
}

std::size_t PlyLayout::extra_stride() const {
    std::size_t s = 0;
    for (const auto& p : properties)
        if (!is_core(p.name)) s += ply_type_size(p.type);
    return s;
}

void GaussianCloud::push_back(const GaussianPoint& p) {
    points.push_back(p);
    extras.resize(extras.size() + layout.extra_stride(), 0);
}

GaussianCloud parse_ply(const std::vector<std::uint8_t>& bytes, const std::string& provenance) {
    static const std::string kEnd = "end_header";
    std::size_t pos = 0;
    auto next_line = [&]() -> std::optional<std::string> {
        if (pos >= bytes.size()) return std::nullopt;
        std::size_t start = pos;
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        std::string line(reinterpret_cast<const char*>(bytes.data()) + start, pos - start);
        if (pos < bytes.size()) ++pos;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };

    auto magic = next_line();
    if (!magic || *magic != "ply") throw FormatError("PLY: missing 'ply' magic");

    GaussianCloud cloud;
    cloud.provenance = provenance;
    cloud.layout.properties.clear();
    std::size_t vertex_count = 0;
    bool have_format = false, have_vertex = false, in_vertex = false, ended = false;

    while (auto line = next_line()) {
        std::istringstream ls(*line);
        std::string keyword;
        ls >> keyword;
        if (keyword.empty()) continue;
        if (keyword == kEnd) {
            ended = true;
            break;
        }
        if (keyword == "format") {
            std::string fmt, version;
            ls >> fmt >> version;
            if (fmt != "binary_little_endian")
                throw FormatError("PLY: unsupported format '" + fmt + "', only binary_little_endian is accepted");
            have_format = true;
        } else if (keyword == "comment") {
            std::string rest;
            std::getline(ls, rest);
            const std::string tag = " provenance: ";
            if (rest.rfind(tag, 0) == 0) cloud.provenance = rest.substr(tag.size());
        } else if (keyword == "obj_info") {
            continue;
        } else if (keyword == "element") {
            std::string name;
            long long count = -1;
            ls >> name >> count;
            if (count < 0) throw FormatError("PLY: bad element line '" + *line + "'");
            if (name == "vertex") {
                if (have_vertex) throw FormatError("PLY: duplicate vertex element");
                have_vertex = in_vertex = true;
                vertex_count = static_cast<std::size_t>(count);
            } else {
                if (count != 0) throw FormatError("PLY: unsupported element '" + name + "'");
                in_vertex = false;
            }
        } else if (keyword == "property") {
            std::string type, name;
            ls >> type;
            if (type == "list") throw FormatError("PLY: list properties are not supported");
            ls >> name;
            if (!in_vertex) continue;
            auto t = parse_type(type);
            if (!t) throw FormatError("PLY: unknown property type '" + type + "' for '" + name + "'");
            for (const auto& p : cloud.layout.properties)
                if (p.name == name) throw FormatError("PLY: duplicate property '" + name + "'");
            cloud.layout.properties.push_back({name, *t});
        } else {
            throw FormatError("PLY: unexpected header line '" + *line + "'");
        }
    }
    if (!ended) throw FormatError("PLY: header has no end_header");
    if (!have_format) throw FormatError("PLY: header has no format line");
    if (!have_vertex) throw FormatError("PLY: no vertex element");

    for (const char* req : kCoreNames) {
        bool found = false;
        for (const auto& p : cloud.layout.properties) {
            if (p.name != req) continue;
            if (p.type != PlyType::Float32)
                throw FormatError(std::string("PLY: property '") + req + "' must be float");
            found = true;
        }
        if (!found) throw FormatError(std::string("PLY: missing required property '") + req + "'");
    }

    const std::size_t stride = cloud.layout.stride();
    const std::size_t extra_stride = cloud.layout.extra_stride();
    if (bytes.size() - pos < vertex_count * stride)
        throw FormatError("PLY: vertex payload truncated (need " + std::to_string(vertex_count * stride) +
                          " bytes, have " + std::to_string(bytes.size() - pos) + ")");

    cloud.points.resize(vertex_count);
    cloud.extras.resize(vertex_count * extra_stride);
    const std::uint8_t* src = bytes.data() + pos;
    for (std::size_t i = 0; i < vertex_count; ++i) {
        GaussianPoint& p = cloud.points[i];
        std::uint8_t* extra = cloud.extras.data() + i * extra_stride;
        for (const auto& prop : cloud.layout.properties) {
            const std::size_t sz = ply_type_size(prop.type);
            if (float* f = core_field(p, prop.name)) {
                std::memcpy(f, src, sizeof(float));
            } else {
                std::memcpy(extra, src, sz);
                extra += sz;
            }
            src += sz;
        }
        for (float v : p.position)
            if (std::isnan(v)) throw FormatError("PLY: vertex " + std::to_string(i) + " has a NaN position");
        for (float v : p.log_scale)
            if (!std::isfinite(v)) throw FormatError("PLY: vertex " + std::to_string(i) + " has a non-finite scale");
        if (std::isnan(p.opacity_logit))
            throw FormatError("PLY: vertex " + std::to_string(i) + " has a NaN opacity");

        double norm2 = 0.0;
        for (float q : p.rotation) norm2 += double(q) * double(q);
        const double norm = std::sqrt(norm2);
        if (!std::isfinite(norm) || norm == 0.0)
            throw FormatError("PLY: vertex " + std::to_string(i) + " has a degenerate rotation");
        // Already-unit quaternions are kept bit-exact.
        if (std::abs(norm - 1.0) > 1e-7)
            for (float& q : p.rotation) q = static_cast<float>(q / norm);
    }
    return cloud;
}

std::vector<std::uint8_t> serialize_ply(const GaussianCloud& cloud) {
    if (cloud.empty()) throw ContractError("write_ply: cloud is empty");
    const std::size_t extra_stride = cloud.layout.extra_stride();
    if (cloud.extras.size() != cloud.size() * extra_stride)
        throw ContractError("write_ply: extra payload size does not match the layout");

    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\n";
    if (!cloud.provenance.empty()) header << "comment provenance: " << sanitize_comment(cloud.provenance) << "\n";
    header << "element vertex " << cloud.size() << "\n";
    for (const auto& p : cloud.layout.properties) header << "property " << type_name(p.type) << " " << p.name << "\n";
    header << "end_header\n";
    const std::string h = header.str();

    const std::size_t stride = cloud.layout.stride();
    std::vector<std::uint8_t> out(h.begin(), h.end());
    out.reserve(h.size() + stride * cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        GaussianPoint p = cloud.points[i];
        const std::uint8_t* extra = cloud.extras.data() + i * extra_stride;
        for (const auto& prop : cloud.layout.properties) {
            const std::size_t sz = ply_type_size(prop.type);
            if (const float* f = core_field(p, prop.name)) {
                const auto* b = reinterpret_cast<const std::uint8_t*>(f);
                out.insert(out.end(), b, b + sizeof(float));
            } else {
                out.insert(out.end(), extra, extra + sz);
                extra += sz;
            }
        }
    }
    return out;
}

GaussianCloud load_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open PLY file '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_ply(bytes, path.filename().string());
}

void write_ply(const GaussianCloud& cloud, const std::filesystem::path& path) {
    const auto bytes = serialize_ply(cloud);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write PLY file '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing PLY file '" + path.string() + "'");
}

Eigen::Matrix3d rotation_matrix(const std::array<float, 4>& wxyz) {
    Eigen::Quaterniond q(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
    return q.normalized().toRotationMatrix();
}

Eigen::Matrix3d covariance_of(const GaussianPoint& p) {
    const Eigen::Matrix3d r = rotation_matrix(p.rotation);
    const Eigen::Vector3d s = p.scale();
    const Eigen::Matrix3d m = r * s.asDiagonal();
    Eigen::Matrix3d cov = m * m.transpose();
    // exact symmetry
    return 0.5 * (cov + cov.transpose());
}

} // namespace gspoison
