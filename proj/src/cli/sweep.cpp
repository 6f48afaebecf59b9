// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "commands.hpp"
#include "gspoison/error.hpp"
#include "gspoison/noise_scheduler.hpp"
#include "gspoison/renderer.hpp"

namespace gspoison::cli {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

struct Row {
    std::string table;
    double bandwidth = 0.0;
    std::string sigma0, decay;
    std::size_t inserted = 0;
    std::optional<AttackReport> report;
    std::string mean_sigma, noisy_test_psnr;
    std::string error;
};

const char* kHeader =
    "table,bandwidth,sigma0,decay,inserted,v_illusory_psnr,v_illusory_ssim,v_test_psnr,v_test_ssim,v_test_drop,"
    "success,mean_sigma,noisy_test_psnr,error";

std::string format_row(const Row& r) {
    std::string line = csv_field(r.table) + "," + num(r.bandwidth) + "," + r.sigma0 + "," + csv_field(r.decay) + ",";
    if (r.report) {
        const AttackReport& a = *r.report;
        line += std::to_string(r.inserted) + "," + num(a.v_illusory.psnr) + "," + num(a.v_illusory.ssim) + "," +
                num(a.v_test.psnr) + "," + num(a.v_test.ssim) + "," + num(a.v_test_drop) + "," +
                (a.success ? "true" : "false");
    } else {
        line += ",,,,,,";
    }
    return line + "," + r.mean_sigma + "," + r.noisy_test_psnr + "," + csv_field(r.error);
}

struct Bench {
    Scene scene;
    IllusorySprite sprite;
};

// Mean sigma over 101 evenly spaced iterations of the schedule.
double mean_sigma(const NoiseSchedule& s) {
    double sum = 0.0;
    for (int i = 0; i <= 100; ++i) sum += sigma_at(s, static_cast<int>(std::lround(double(s.total_T) * i / 100)));
    return sum / 101.0;
}

// Mean PSNR of innocent training images perturbed at mid-schedule against
// their clean versions.
double noisy_test_psnr(const Bench& b, const NoiseSchedule& s, const RunConfig& cfg) {
    const int t = s.total_T / 2;
    const double sigma = sigma_at(s, t);
    const Eigen::Vector3d bg(cfg.background[0], cfg.background[1], cfg.background[2]);
    double sum = 0.0;
    for (const auto& id : b.scene.test_ids) {
        const Image8 clean = to_8bit(render(b.scene.cloud, find_frame(b.scene.cameras, id).camera, bg).rgb);
        const Image8 noisy = perturb_view(clean, false, sigma, noise_key(cfg.seed, id, t));
        sum += psnr(to_float(clean), to_float(noisy));
    }
    return sum / double(b.scene.test_ids.size());
}

} // namespace

int cmd_sweep(const SweepArgs& a, const RunConfig& cfg) {
    if (a.bandwidths.empty() && (a.sigma0s.empty() || a.decays.empty()))
        throw ContractError("sweep: empty parameter grid (give --bandwidths and/or --sigma0s with --decays)");
    if (a.sigma0s.empty() != a.decays.empty())
        throw ContractError("sweep: --sigma0s and --decays must be given together");
    std::vector<Decay> decays;
    for (const auto& d : a.decays) decays.push_back(parse_decay(d));

    SceneSpec spec;
    spec.kind = parse_scene_kind(a.fixture);
    spec.width = spec.height = a.width;
    spec.splats = a.splats;
    spec.seed = cfg.seed;
    Bench bench{make_scene(spec), {}};
    if (bench.scene.poisoned_id.empty())
        throw ContractError("sweep: fixture '" + a.fixture + "' has no designated poisoned view");
    const Camera& cam_p = find_frame(bench.scene.cameras, bench.scene.poisoned_id).camera;
    bench.sprite = place_sprite(make_sprite(a.sprite_size, a.sprite_size), cam_p, cfg);

    auto attack_row = [&](Row& row, const RunConfig& c) {
        const InjectionResult res = run_density_attack(bench.scene.cloud, cam_p, bench.sprite, c);
        row.inserted = res.inserted_count;
        row.report = score_attack(bench.scene.cloud, res.poisoned_cloud, bench.scene.cameras, bench.scene.poisoned_id,
                                  bench.scene.test_ids, bench.sprite, c);
    };

    std::vector<Row> rows;
    for (double h : a.bandwidths) {
        Row row;
        row.table = "bandwidth";
        row.bandwidth = h;
        try {
            RunConfig c = cfg;
            c.poison.bandwidth_h = h;
            attack_row(row, c);
        } catch (const std::exception& e) {
            row.report.reset();
            row.error = e.what();
        }
        rows.push_back(row);
    }

    // noise does not touch the cloud, so every schedule row shares one attack
    std::optional<Row> base;
    std::string base_error;
    for (double s0 : a.sigma0s)
        for (Decay d : decays) {
            Row row;
            row.table = "noise";
            row.bandwidth = cfg.poison.bandwidth_h;
            row.sigma0 = num(s0);
            row.decay = decay_name(d);
            try {
                if (!base && base_error.empty()) {
                    try {
                        base.emplace();
                        attack_row(*base, cfg);
                    } catch (const std::exception& e) {
                        base.reset();
                        base_error = e.what();
                    }
                }
                if (!base) throw std::runtime_error(base_error);
                row.inserted = base->inserted;
                row.report = base->report;
                NoiseSchedule ns = cfg.noise;
                ns.sigma0 = s0;
                ns.decay = d;
                row.mean_sigma = num(mean_sigma(ns));
                row.noisy_test_psnr = num(noisy_test_psnr(bench, ns, cfg));
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            rows.push_back(row);
        }

    std::string text = std::string(kHeader) + "\r\n";
    for (const auto& r : rows) text += format_row(r) + "\r\n";

    if (a.out.empty()) {
        std::cout << text;
        return 0;
    }
    OutputGuard guard;
    guard.track(a.out);
    if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
    {
        std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + a.out.string() + "'");
        out << text;
        if (!out) throw IoError("write failed for '" + a.out.string() + "'");
    }
    guard.commit();
    std::cout << rows.size() << " rows -> " << a.out.string() << "\n";
    return 0;
}

} // namespace gspoison::cli
