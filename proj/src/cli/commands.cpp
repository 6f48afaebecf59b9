// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "gspoison/density_field.hpp"
#include "gspoison/error.hpp"
#include "gspoison/log.hpp"
#include "gspoison/noise_scheduler.hpp"
#include "gspoison/renderer.hpp"

namespace gspoison::cli {

OutputGuard::~OutputGuard() {
    if (committed_) return;
    for (auto it = paths_.rbegin(); it != paths_.rend(); ++it) {
        std::error_code ec;
        fs::remove_all(*it, ec);
    }
}

void OutputGuard::track(const fs::path& p) {
    if (!fs::exists(p)) paths_.push_back(p);
}

const CameraFrame& find_frame(const std::vector<CameraFrame>& frames, const std::string& id) {
    for (const auto& f : frames)
        if (f.id == id) return f;
    throw ContractError("no camera with id '" + id + "'");
}

IllusorySprite place_sprite(Image8 rgba, const Camera& cam_p, const RunConfig& cfg) {
    IllusorySprite s;
    s.rgba = std::move(rgba);
    s.scale = cfg.sprite_scale;
    s.alpha_threshold = cfg.alpha_threshold;
    s.offset_u = std::isnan(cfg.sprite_offset_u) ? centered_offset(cam_p.width(), s.rgba.width, s.scale)
                                                 : cfg.sprite_offset_u;
    s.offset_v = std::isnan(cfg.sprite_offset_v) ? centered_offset(cam_p.height(), s.rgba.height, s.scale)
                                                 : cfg.sprite_offset_v;
    s.check_placement(cam_p);
    return s;
}

IllusorySprite load_sprite(const fs::path& path, const Camera& cam_p, const RunConfig& cfg) {
    if (!fs::is_regular_file(path)) throw IoError("sprite file not found: '" + path.string() + "'");
    return place_sprite(read_png(path, true), cam_p, cfg);
}

KdeField build_field(const GaussianCloud& cloud, const RunConfig& cfg) {
    return KdeField(voxelize(cloud, cfg.grid_resolution), cfg.poison.bandwidth_h, cfg.kde_cutoff);
}

InjectionResult run_density_attack(const GaussianCloud& cloud, const Camera& cam_p, const IllusorySprite& sprite,
                                   const RunConfig& cfg) {
    const KdeField field = build_field(cloud, cfg);
    const MapF depth = render_depth(cloud, cam_p);
    return inject(cloud, field, cam_p, sprite, cfg.poison, depth);
}

AttackReport score_attack(const GaussianCloud& clean, const GaussianCloud& poisoned,
                          const std::vector<CameraFrame>& frames, const std::string& view,
                          const std::vector<std::string>& test_ids, const IllusorySprite& sprite,
                          const RunConfig& cfg) {
    const Eigen::Vector3d bg(cfg.background[0], cfg.background[1], cfg.background[2]);
    AttackInputs in;
    const Camera& cam_p = find_frame(frames, view).camera;
    const auto raster = sprite.rasterize(cam_p);
    const RenderedImage clean_p = render(clean, cam_p, bg);
    in.target_composites[view] = composite_target(clean_p.rgb, raster);
    in.poisoned_renders[view] = render(poisoned, cam_p, bg).rgb;
    in.sprite_masks[view] = raster.mask;
    in.poisoned_ids = {view};
    for (const auto& id : test_ids) {
        const Camera& cam = find_frame(frames, id).camera;
        in.clean_renders[id] = render(clean, cam, bg).rgb;
        in.poisoned_renders[id] = render(poisoned, cam, bg).rgb;
    }
    in.test_ids = test_ids;
    return evaluate_attack(in);
}

nlohmann::json input_record(const fs::path& p) { return {{"path", p.string()}, {"sha256", file_sha256(p)}}; }

void write_json(const nlohmann::json& j, const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for '" + p.string() + "'");
}

int cmd_inject(const InjectArgs& a, const RunConfig& cfg) {
    const GaussianCloud cloud = load_ply(a.ply);
    const auto frames = load_cameras(a.cameras);
    const CameraFrame& fp = find_frame(frames, a.view);
    const IllusorySprite sprite = load_sprite(a.sprite, fp.camera, cfg);

    InjectionResult res = a.naive_t ? naive_backproject(cloud, fp.camera, sprite, *a.naive_t, cfg.poison)
                                    : run_density_attack(cloud, fp.camera, sprite, cfg);
    if (res.inserted_count == 0) throw ContractError("injection inserted no points (empty sprite mask?)");

    nlohmann::json log;
    log["command"] = "inject";
    log["method"] = a.naive_t ? "naive_backproject" : "density_guided";
    if (a.naive_t) log["fixed_t"] = *a.naive_t;
    log["config"] = cfg.to_json();
    log["inputs"] = {{"ply", input_record(a.ply)}, {"cameras", input_record(a.cameras)},
                     {"sprite", input_record(a.sprite)}};
    log["poisoned_view"] = a.view;
    log["sprite_placement"] = {{"offset", {sprite.offset_u, sprite.offset_v}}, {"scale", sprite.scale}};
    log["original_count"] = cloud.size();
    log["inserted_count"] = res.inserted_count;
    log["points"] = nlohmann::json::array();
    for (const auto& e : res.per_point_log)
        log["points"].push_back({{"u", e.pixel.u}, {"v", e.pixel.v}, {"t", e.t}, {"density", e.density}});
    log["skipped"] = nlohmann::json::array();
    for (const auto& s : res.skipped)
        log["skipped"].push_back({{"u", s.pixel.u}, {"v", s.pixel.v}, {"reason", s.reason}});

    const fs::path log_path = a.log.empty() ? fs::path(a.out).replace_extension(".inject.json") : a.log;
    OutputGuard guard;
    guard.track(a.out);
    guard.track(log_path);
    if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
    write_ply(res.poisoned_cloud, a.out);
    write_json(log, log_path);
    guard.commit();
    std::cout << "inserted " << res.inserted_count << " points (" << res.skipped.size() << " pixels skipped) -> "
              << a.out.string() << "\n";
    return 0;
}

int cmd_perturb(const PerturbArgs& a, const RunConfig& cfg) {
    PerturbRequest req;
    req.cameras_file = a.cameras;
    req.frames = load_cameras(a.cameras);
    req.poisoned_id = a.poisoned;
    req.schedule = cfg.noise;
    req.checkpoints = cfg.checkpoints;
    req.seed = cfg.seed;
    req.output_dir = a.out;
    nlohmann::json c = cfg.to_json();
    c["inputs"] = {{"cameras", input_record(a.cameras)}};
    req.config_json = c.dump();

    OutputGuard guard;
    guard.track(a.out);
    guard.track(a.out / "manifest.json");
    for (int t : req.checkpoints) guard.track(a.out / ("noisy_t" + std::to_string(t)));
    emit_perturbed_dataset(req);
    guard.commit();
    std::cout << "wrote " << req.checkpoints.size() << " snapshots to " << a.out.string() << "\n";
    return 0;
}

int cmd_rank_views(const RankArgs& a, const RunConfig& cfg) {
    const GaussianCloud cloud = load_ply(a.ply);
    const auto frames = load_cameras(a.cameras);
    const KdeField field = build_field(cloud, cfg);
    const auto ranked = rank_views(field, frames);

    std::cout << std::left << std::setw(16) << "view" << std::right << std::setw(16) << "score" << std::setw(6)
              << "rank" << "  class\n";
    nlohmann::json j;
    j["config"] = cfg.to_json();
    j["inputs"] = {{"ply", input_record(a.ply)}, {"cameras", input_record(a.cameras)}};
    j["views"] = nlohmann::json::array();
    for (const auto& v : ranked) {
        std::cout << std::left << std::setw(16) << v.view_id << std::right << std::setw(16) << std::setprecision(6)
                  << std::scientific << v.score << std::defaultfloat << std::setw(6) << v.rank << "  "
                  << difficulty_name(v.difficulty) << "\n";
        j["views"].push_back(
            {{"view_id", v.view_id}, {"score", v.score}, {"rank", v.rank}, {"class", difficulty_name(v.difficulty)}});
    }
    if (!a.out.empty()) {
        OutputGuard guard;
        guard.track(a.out);
        write_json(j, a.out);
        guard.commit();
    }
    return 0;
}

int cmd_render(const RenderArgs& a, const RunConfig& cfg) {
    const GaussianCloud cloud = load_ply(a.ply);
    const auto frames = load_cameras(a.cameras);
    std::vector<const CameraFrame*> todo;
    if (a.views.empty())
        for (const auto& f : frames) todo.push_back(&f);
    else
        for (const auto& id : a.views) todo.push_back(&find_frame(frames, id));

    const Eigen::Vector3d bg(cfg.background[0], cfg.background[1], cfg.background[2]);
    OutputGuard guard;
    guard.track(a.out);
    fs::create_directories(a.out);
    nlohmann::json manifest;
    manifest["command"] = "render";
    manifest["config"] = cfg.to_json();
    manifest["inputs"] = {{"ply", input_record(a.ply)}, {"cameras", input_record(a.cameras)}};
    manifest["views"] = nlohmann::json::array();
    for (const CameraFrame* f : todo) {
        const RenderedImage img = render(cloud, f->camera, bg);
        const fs::path png = a.out / (f->id + ".png");
        guard.track(png);
        write_png(to_8bit(img.rgb), png);
        nlohmann::json e{{"view_id", f->id}, {"image", png.filename().string()}};
        if (a.depth) {
            const fs::path pfm = a.out / (f->id + "_depth.pfm");
            guard.track(pfm);
            write_depth_pfm(img.depth, pfm);
            e["depth"] = pfm.filename().string();
        }
        manifest["views"].push_back(e);
    }
    guard.track(a.out / "render.json");
    write_json(manifest, a.out / "render.json");
    guard.commit();
    std::cout << "rendered " << todo.size() << " views -> " << a.out.string() << "\n";
    return 0;
}

int cmd_evaluate(const EvaluateArgs& a, const RunConfig& cfg) {
    const GaussianCloud clean = load_ply(a.clean);
    const GaussianCloud poisoned = load_ply(a.poisoned);
    const auto frames = load_cameras(a.cameras);
    const CameraFrame& fp = find_frame(frames, a.view);
    const IllusorySprite sprite = load_sprite(a.sprite, fp.camera, cfg);
    std::vector<std::string> test_ids = a.test_views;
    if (test_ids.empty())
        for (const auto& f : frames)
            if (f.id != a.view) test_ids.push_back(f.id);

    const AttackReport report = score_attack(clean, poisoned, frames, a.view, test_ids, sprite, cfg);
    std::cout << report.to_table();
    if (!a.out.empty()) {
        nlohmann::json j = nlohmann::json::parse(report.to_json());
        j["config"] = cfg.to_json();
        j["inputs"] = {{"clean", input_record(a.clean)},
                       {"poisoned", input_record(a.poisoned)},
                       {"cameras", input_record(a.cameras)},
                       {"sprite", input_record(a.sprite)}};
        OutputGuard guard;
        guard.track(a.out);
        write_json(j, a.out);
        guard.commit();
    }
    if (a.require_success && !report.success) {
        std::cerr << "attack did not meet the success criterion\n";
        return 1;
    }
    return 0;
}

int cmd_fixtures_generate(const FixtureArgs& a, const RunConfig& cfg) {
    SceneSpec spec;
    spec.kind = parse_scene_kind(a.kind);
    spec.splats = a.splats;
    spec.cameras = a.cameras;
    spec.width = a.width;
    spec.height = a.height;
    spec.seed = cfg.seed;
    const Scene scene = make_scene(spec);

    OutputGuard guard;
    guard.track(a.out);
    fs::create_directories(a.out);
    for (const char* name : {"scene.ply", "cameras.json", "sprite.png", "fixture.json", "images"})
        guard.track(a.out / name);
    write_ply(scene.cloud, a.out / "scene.ply");
    write_cameras(scene.cameras, a.out / "cameras.json");
    write_png(make_sprite(a.sprite_size, a.sprite_size), a.out / "sprite.png");
    if (a.images) {
        const Eigen::Vector3d bg(cfg.background[0], cfg.background[1], cfg.background[2]);
        for (const auto& f : scene.cameras) {
            const fs::path p = a.out / f.image;
            fs::create_directories(p.parent_path());
            write_png(to_8bit(render(scene.cloud, f.camera, bg).rgb), p);
        }
    }
    nlohmann::json j;
    j["kind"] = scene_kind_name(spec.kind);
    j["seed"] = spec.seed;
    j["splats"] = scene.cloud.size();
    j["width"] = spec.width;
    j["height"] = spec.height;
    j["poisoned_view"] = scene.poisoned_id;
    j["test_views"] = scene.test_ids;
    j["config"] = cfg.to_json();
    write_json(j, a.out / "fixture.json");
    guard.commit();
    std::cout << scene_kind_name(spec.kind) << ": " << scene.cloud.size() << " splats, " << scene.cameras.size()
              << " cameras -> " << a.out.string() << "\n";
    return 0;
}

} // namespace gspoison::cli
