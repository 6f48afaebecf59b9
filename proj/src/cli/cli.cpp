// SPDX-License-Identifier: Apache-2.0
#include "gspoison/cli.hpp"

#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "gspoison/error.hpp"
#include "gspoison/log.hpp"
#include "gspoison/parallel.hpp"
#include "gspoison/simd/kernels.hpp"

namespace gspoison {

namespace {

using cli::fs::path;

// Flags that override RunConfig fields only when given explicitly, so the
// precedence is defaults < TOML < command line.
class Overrides {
public:
    template <class T, class Fn>
    CLI::Option* add(CLI::App* app, const std::string& name, const std::string& desc, const std::string& shown,
                     Fn apply) {
        auto value = std::make_shared<T>();
        CLI::Option* opt = app->add_option(name, *value, desc);
        if (!shown.empty()) opt->default_str(shown);
        entries_.push_back({opt, [value, apply](RunConfig& c) { apply(c, *value); }});
        return opt;
    }

    void apply(RunConfig& cfg) const {
        for (const auto& e : entries_)
            if (e.opt->count() > 0) e.fn(cfg);
    }

private:
    struct Entry {
        CLI::Option* opt;
        std::function<void(RunConfig&)> fn;
    };
    std::vector<Entry> entries_;
};

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

void add_kde_flags(CLI::App* app, Overrides& ov) {
    const RunConfig d;
    ov.add<double>(app, "--bandwidth", "KDE bandwidth h in the normalized scene frame", fmt(d.poison.bandwidth_h),
                   [](RunConfig& c, double v) { c.poison.bandwidth_h = v; });
    ov.add<double>(app, "--kde-cutoff", "Drop kernel terms beyond this many bandwidths (0 = exact)",
                   fmt(d.kde_cutoff), [](RunConfig& c, double v) { c.kde_cutoff = v; });
    ov.add<std::vector<int>>(app, "--grid", "Voxel grid resolution nx ny nz", "64 64 64",
                             [](RunConfig& c, const std::vector<int>& v) {
                                 if (v.size() != 3) throw ContractError("--grid takes three integers");
                                 c.grid_resolution = {v[0], v[1], v[2]};
                             })
        ->expected(3);
}

void add_poison_flags(CLI::App* app, Overrides& ov) {
    const RunConfig d;
    add_kde_flags(app, ov);
    ov.add<double>(app, "--t-min", "Nearest ray distance for poison points", fmt(d.poison.t_min),
                   [](RunConfig& c, double v) { c.poison.t_min = v; });
    ov.add<int>(app, "--samples", "Uniform samples per ray", std::to_string(d.poison.samples_per_ray),
                [](RunConfig& c, int v) { c.poison.samples_per_ray = v; });
    ov.add<double>(app, "--poison-opacity", "Opacity of inserted Gaussians", fmt(d.poison.poison_opacity),
                   [](RunConfig& c, double v) { c.poison.poison_opacity = v; });
    ov.add<int>(app, "--stride", "Visit every n-th masked pixel in both axes",
                std::to_string(d.poison.pixel_stride), [](RunConfig& c, int v) { c.poison.pixel_stride = v; });
}

void add_sprite_flags(CLI::App* app, Overrides& ov) {
    const RunConfig d;
    ov.add<std::vector<double>>(app, "--sprite-offset", "Sprite top-left corner u v in poisoned-view pixels",
                                "centered",
                                [](RunConfig& c, const std::vector<double>& v) {
                                    if (v.size() != 2) throw ContractError("--sprite-offset takes two numbers");
                                    c.sprite_offset_u = v[0];
                                    c.sprite_offset_v = v[1];
                                })
        ->expected(2);
    ov.add<double>(app, "--sprite-scale", "Image pixels per sprite pixel", fmt(d.sprite_scale),
                   [](RunConfig& c, double v) { c.sprite_scale = v; });
    ov.add<int>(app, "--alpha-threshold", "Sprite pixels with alpha above this are masked",
                std::to_string(d.alpha_threshold), [](RunConfig& c, int v) { c.alpha_threshold = v; });
}

void add_noise_flags(CLI::App* app, Overrides& ov) {
    const RunConfig d;
    ov.add<double>(app, "--sigma0", "Initial noise std in 8-bit units", fmt(d.noise.sigma0),
                   [](RunConfig& c, double v) { c.noise.sigma0 = v; });
    ov.add<int>(app, "--total-T", "Iteration at which the noise reaches zero", std::to_string(d.noise.total_T),
                [](RunConfig& c, int v) { c.noise.total_T = v; });
    ov.add<std::string>(app, "--decay", "Noise decay: linear, cosine or sqrt", decay_name(d.noise.decay),
                        [](RunConfig& c, const std::string& v) { c.noise.decay = parse_decay(v); });
    ov.add<std::vector<int>>(app, "--checkpoints", "Iterations to snapshot", "0 7500 15000 22500 30000",
                             [](RunConfig& c, const std::vector<int>& v) { c.checkpoints = v; });
}

void add_render_flags(CLI::App* app, Overrides& ov) {
    ov.add<std::vector<double>>(app, "--background", "Background color r g b in [0,1]", "0 0 0",
                                [](RunConfig& c, const std::vector<double>& v) {
                                    if (v.size() != 3) throw ContractError("--background takes three numbers");
                                    c.background = {v[0], v[1], v[2]};
                                })
        ->expected(3);
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Density-guided poisoning toolkit for 3D Gaussian Splatting scenes", "gspoison"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", "0.1.0");

    Overrides ov;
    path config_path;
    std::string simd = "auto";
    bool quiet = false, verbose = false;
    app.add_option("--config", config_path, "TOML run configuration (flags take precedence)");
    ov.add<std::uint64_t>(&app, "--seed", "Global seed", "0", [](RunConfig& c, std::uint64_t v) { c.seed = v; });
    ov.add<int>(&app, "--threads", "Worker threads (0 = all cores)", "0",
                [](RunConfig& c, int v) { c.threads = v; });
    app.add_option("--simd", simd, "Kernel backend: auto, scalar or avx2")->capture_default_str();
    app.add_flag("-q,--quiet", quiet, "Suppress warnings");
    app.add_flag("-v,--verbose", verbose, "Print progress information");

    std::function<int(const RunConfig&)> action;

    // inject
    cli::InjectArgs inj;
    double naive_t = 0.0;
    auto* c_inject = app.add_subcommand("inject", "Insert density-guided poison Gaussians for one view");
    c_inject->add_option("--ply", inj.ply, "Clean scene PLY")->required();
    c_inject->add_option("--cameras", inj.cameras, "Camera JSON")->required();
    c_inject->add_option("--view", inj.view, "Poisoned view id")->required();
    c_inject->add_option("--sprite", inj.sprite, "Illusory object RGBA PNG")->required();
    c_inject->add_option("-o,--out", inj.out, "Poisoned PLY to write")->required();
    c_inject->add_option("--log", inj.log, "Injection log JSON (default: <out>.inject.json)");
    auto* o_naive = c_inject->add_option("--naive-t", naive_t, "Control: place every point at this ray distance");
    add_poison_flags(c_inject, ov);
    add_sprite_flags(c_inject, ov);
    add_render_flags(c_inject, ov);
    c_inject->callback([&] {
        action = [&](const RunConfig& c) {
            if (o_naive->count()) inj.naive_t = naive_t;
            return cli::cmd_inject(inj, c);
        };
    });

    // perturb
    cli::PerturbArgs per;
    auto* c_perturb = app.add_subcommand("perturb", "Write noise-perturbed training snapshots");
    c_perturb->add_option("--cameras", per.cameras, "Camera JSON; images resolve relative to it")->required();
    c_perturb->add_option("--poisoned", per.poisoned, "Poisoned view id (kept unperturbed)")->required();
    c_perturb->add_option("-o,--out", per.out, "Output directory")->required();
    add_noise_flags(c_perturb, ov);
    c_perturb->callback([&] { action = [&](const RunConfig& c) { return cli::cmd_perturb(per, c); }; });

    // rank-views
    cli::RankArgs rk;
    auto* c_rank = app.add_subcommand("rank-views", "Score views by in-frustum KDE density");
    c_rank->add_option("--ply", rk.ply, "Scene PLY")->required();
    c_rank->add_option("--cameras", rk.cameras, "Camera JSON")->required();
    c_rank->add_option("-o,--out", rk.out, "Ranking JSON");
    add_kde_flags(c_rank, ov);
    c_rank->callback([&] { action = [&](const RunConfig& c) { return cli::cmd_rank_views(rk, c); }; });

    // render
    cli::RenderArgs rd;
    auto* c_render = app.add_subcommand("render", "Render views of a scene to PNG");
    c_render->add_option("--ply", rd.ply, "Scene PLY")->required();
    c_render->add_option("--cameras", rd.cameras, "Camera JSON")->required();
    c_render->add_option("--view", rd.views, "View id (repeatable; default all)");
    c_render->add_option("-o,--out", rd.out, "Output directory")->required();
    c_render->add_flag("--depth", rd.depth, "Also write <id>_depth.pfm");
    add_render_flags(c_render, ov);
    c_render->callback([&] { action = [&](const RunConfig& c) { return cli::cmd_render(rd, c); }; });

    // evaluate
    cli::EvaluateArgs ev;
    auto* c_eval = app.add_subcommand("evaluate", "Score an attack: V-Illusory and V-Test metrics");
    c_eval->add_option("--clean", ev.clean, "Clean scene PLY")->required();
    c_eval->add_option("--poisoned", ev.poisoned, "Poisoned scene PLY")->required();
    c_eval->add_option("--cameras", ev.cameras, "Camera JSON")->required();
    c_eval->add_option("--view", ev.view, "Poisoned view id")->required();
    c_eval->add_option("--sprite", ev.sprite, "Illusory object RGBA PNG")->required();
    c_eval->add_option("--test-view", ev.test_views, "Held-out view id (repeatable; default all others)");
    c_eval->add_option("-o,--out", ev.out, "Report JSON");
    c_eval->add_flag("--require-success", ev.require_success,
                     "Exit 1 unless illusory PSNR > 25 and test PSNR drop <= 3");
    add_sprite_flags(c_eval, ov);
    add_render_flags(c_eval, ov);
    c_eval->callback([&] { action = [&](const RunConfig& c) { return cli::cmd_evaluate(ev, c); }; });

    // sweep
    cli::SweepArgs sw;
    auto* c_sweep = app.add_subcommand("sweep", "Scan bandwidth and/or noise schedules on a fixture, CSV out");
    c_sweep->add_option("--fixture", sw.fixture, "Fixture kind")->capture_default_str();
    c_sweep->add_option("--bandwidths", sw.bandwidths, "Bandwidth grid, e.g. 0.1 2.5 5 7.5 10");
    c_sweep->add_option("--sigma0s", sw.sigma0s, "Initial noise grid, e.g. 30 100");
    c_sweep->add_option("--decays", sw.decays, "Decay grid, e.g. linear cosine sqrt");
    c_sweep->add_option("--size", sw.width, "Fixture image size")->capture_default_str();
    c_sweep->add_option("--splats", sw.splats, "Fixture splat budget (0 = kind default)")->capture_default_str();
    c_sweep->add_option("--sprite-size", sw.sprite_size, "Generated sprite edge length")->capture_default_str();
    c_sweep->add_option("-o,--out", sw.out, "CSV to write (default stdout)");
    add_poison_flags(c_sweep, ov);
    add_sprite_flags(c_sweep, ov);
    add_noise_flags(c_sweep, ov);
    add_render_flags(c_sweep, ov);
    c_sweep->callback([&] { action = [&](const RunConfig& c) { return cli::cmd_sweep(sw, c); }; });

    // fixtures generate
    cli::FixtureArgs fx;
    auto* c_fix = app.add_subcommand("fixtures", "Synthetic scenes");
    c_fix->require_subcommand(1);
    auto* c_gen = c_fix->add_subcommand("generate", "Write scene.ply, cameras.json, images/ and sprite.png");
    c_gen->add_option("kind", fx.kind, "wall, corridor, shell or empty")->required();
    c_gen->add_option("-o,--out", fx.out, "Output directory")->required();
    c_gen->add_option("--splats", fx.splats, "Splat budget (0 = kind default)")->capture_default_str();
    c_gen->add_option("--cameras", fx.cameras, "Camera count (0 = kind default)")->capture_default_str();
    c_gen->add_option("--width", fx.width, "Image width")->capture_default_str();
    c_gen->add_option("--height", fx.height, "Image height")->capture_default_str();
    c_gen->add_option("--sprite-size", fx.sprite_size, "Sprite edge length")->capture_default_str();
    bool no_images = false;
    c_gen->add_flag("--no-images", no_images, "Skip rendering the training images");
    add_render_flags(c_gen, ov);
    c_gen->callback([&] {
        action = [&](const RunConfig& c) {
            fx.images = !no_images;
            return cli::cmd_fixtures_generate(fx, c);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        set_log_level(quiet ? LogLevel::Quiet : verbose ? LogLevel::Info : LogLevel::Warning);
        if (simd != "auto") simd::set_backend(simd::parse_backend(simd));
        RunConfig cfg;
        if (!config_path.empty()) apply_toml(cfg, config_path);
        ov.apply(cfg);
        cfg.validate();
        set_thread_count(cfg.threads);
        if (!action) throw ContractError("no subcommand given");
        return action(cfg);
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

} // namespace gspoison
