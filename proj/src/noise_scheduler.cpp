// SPDX-License-Identifier: Apache-2.0
#include "gspoison/noise_scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "gspoison/error.hpp"
#include "gspoison/parallel.hpp"

namespace gspoison {

Decay parse_decay(std::string_view name) {
    if (name == "linear") return Decay::Linear;
    if (name == "cosine") return Decay::Cosine;
    if (name == "sqrt") return Decay::Sqrt;
    throw ContractError("unknown decay '" + std::string(name) + "' (expected linear, cosine or sqrt)");
}

const char* decay_name(Decay d) {
    switch (d) {
    case Decay::Linear: return "linear";
    case Decay::Cosine: return "cosine";
    case Decay::Sqrt: return "sqrt";
    }
    return "linear";
}

void NoiseSchedule::validate() const {
    if (!(sigma0 >= 0.0) || !std::isfinite(sigma0)) throw ContractError("sigma0 must be finite and >= 0");
    if (total_T < 1) throw ContractError("total_T must be >= 1");
}

double sigma_at(const NoiseSchedule& s, int t) {
    s.validate();
    if (t < 0 || t > s.total_T)
        throw ContractError("sigma_at: iteration " + std::to_string(t) + " outside [0, " + std::to_string(s.total_T) + "]");
    if (t == s.total_T) return 0.0;
    const double u = double(t) / s.total_T;
    switch (s.decay) {
    case Decay::Linear: return s.sigma0 * (1.0 - u);
    case Decay::Cosine: return s.sigma0 * std::cos(M_PI * t / (2.0 * s.total_T));
    case Decay::Sqrt: return s.sigma0 * std::sqrt(1.0 - u);
    }
    return 0.0;
}

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open '" + p.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

std::uint64_t KeyedRng::bits(std::uint64_t counter) const {
    return mix64(mix64(key_ + 0x9e3779b97f4a7c15ULL) ^ (counter * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

double KeyedRng::uniform(std::uint64_t counter) const {
    return (double(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
}

double KeyedRng::normal(std::uint64_t index) const {
    const std::uint64_t pair = index >> 1;
    const double u1 = uniform(2 * pair);
    const double u2 = uniform(2 * pair + 1);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    return (index & 1) ? radius * std::sin(angle) : radius * std::cos(angle);
}

std::uint64_t noise_key(std::uint64_t global_seed, std::string_view frame_id, int checkpoint) {
    std::uint64_t k = mix64(global_seed ^ 0x5eed5eed5eed5eedULL);
    k = mix64(k ^ fnv1a(frame_id));
    return mix64(k ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(checkpoint)));
}

Image8 perturb_view(const Image8& image, bool is_poisoned, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw ContractError("perturb_view: sigma must be >= 0");
    if (is_poisoned || sigma == 0.0) return image;
    Image8 out = image;
    const KeyedRng rng(seed);
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        if (image.channels == 4 && i % 4 == 3) continue; // alpha untouched
        const double v = image.data[i] + sigma * rng.normal(i);
        out.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
    return out;
}

void emit_perturbed_dataset(const PerturbRequest& req) {
    req.schedule.validate();
    if (req.checkpoints.empty()) throw ContractError("emit_perturbed_dataset: no checkpoints given");
    bool found = false;
    for (const auto& f : req.frames) found = found || f.id == req.poisoned_id;
    if (!found) throw ContractError("emit_perturbed_dataset: poisoned view '" + req.poisoned_id + "' not among frames");
    const std::filesystem::path root = req.cameras_file.parent_path();
    for (const auto& f : req.frames)
        if (f.image.empty() || !std::filesystem::exists(root / f.image))
            throw IoError("missing image for frame '" + f.id + "': '" + (root / f.image).string() + "'");

    nlohmann::json manifest;
    manifest["seed"] = req.seed;
    manifest["sigma0"] = req.schedule.sigma0;
    manifest["total_T"] = req.schedule.total_T;
    manifest["decay"] = decay_name(req.schedule.decay);
    manifest["poisoned_view"] = req.poisoned_id;
    if (!req.config_json.empty()) manifest["config"] = nlohmann::json::parse(req.config_json);
    manifest["snapshots"] = nlohmann::json::array();

    std::filesystem::create_directories(req.output_dir);
    const auto pose_bytes = read_bytes(req.cameras_file);
    for (int t : req.checkpoints) {
        const double sigma = sigma_at(req.schedule, t);
        const std::filesystem::path snap = req.output_dir / ("noisy_t" + std::to_string(t));
        std::filesystem::create_directories(snap);
        write_bytes(snap / req.cameras_file.filename(), pose_bytes);

        parallel_for(req.frames.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                const CameraFrame& f = req.frames[i];
                const std::filesystem::path dst = snap / f.image;
                std::filesystem::create_directories(dst.parent_path());
                const bool poisoned = f.id == req.poisoned_id;
                if (poisoned || sigma == 0.0) {
                    write_bytes(dst, read_bytes(root / f.image));
                    continue;
                }
                const Image8 img = read_png(root / f.image);
                write_png(perturb_view(img, false, sigma, noise_key(req.seed, f.id, t)), dst);
            }
        });

        nlohmann::json entry;
        entry["t"] = t;
        entry["sigma"] = sigma;
        entry["directory"] = snap.filename().string();
        manifest["snapshots"].push_back(entry);
    }
    std::ofstream out(req.output_dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write manifest in '" + req.output_dir.string() + "'");
    out << manifest.dump(2) << "\n";
}

} // namespace gspoison
