// SPDX-License-Identifier: Apache-2.0
// End-to-end acceptance run: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "gspoison/cli.hpp"
#include "gspoison/density_field.hpp"
#include "gspoison/eval_protocol.hpp"
#include "gspoison/fixtures.hpp"
#include "gspoison/log.hpp"
#include "gspoison/noise_scheduler.hpp"
#include "gspoison/poison_injector.hpp"
#include "gspoison/renderer.hpp"
#include "gspoison/run_config.hpp"

using namespace gspoison;
namespace fs = std::filesystem;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) detail = what;
        ok = ok && cond;
    }
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
    Eigen::Vector3d vec(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }

private:
    std::mt19937_64 eng_;
};

std::string fmt(double v, int prec = 3) {
    std::ostringstream os;
    os.precision(prec);
    os << std::fixed << v;
    return os.str();
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "gspoison-cli");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    // command summaries are not part of the report
    std::ostringstream sink;
    std::streambuf* prev = std::cout.rdbuf(sink.rdbuf());
    const int code = run_cli(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(prev);
    return code;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

GaussianPoint point_at(const Eigen::Vector3d& pos, double sigma, double opacity, const Eigen::Vector3d& rgb) {
    GaussianPoint p;
    for (int a = 0; a < 3; ++a) p.position[a] = static_cast<float>(pos[a]);
    p.log_scale.fill(static_cast<float>(std::log(sigma)));
    p.opacity_logit = static_cast<float>(logit(opacity));
    p.color_dc = color_to_dc(rgb);
    return p;
}

// Direct double loop over every cell.
double naive_kde(const VoxelGrid& grid, double h, const Eigen::Vector3d& x) {
    const double scale = kNormalizedSceneSize / grid.aabb().longest_edge();
    const auto& r = grid.resolution();
    long double sum = 0.0L;
    for (int i = 0; i < r[0]; ++i)
        for (int j = 0; j < r[1]; ++j)
            for (int k = 0; k < r[2]; ++k) {
                const Eigen::Vector3d d = scale * (x - grid.centroid(i, j, k));
                const double kern = std::exp(-d.squaredNorm() / (2 * h * h)) / std::pow(2 * M_PI * h * h, 1.5);
                sum += static_cast<long double>(kern) * grid.density(i, j, k);
            }
    return static_cast<double>(sum / grid.cell_count());
}

// ---------------------------------------------------------------------------

Check kde_oracle() {
    Check c;
    Rng g(101);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Aabb box{g.vec(-5, 0), g.vec(1, 6)};
        VoxelGrid grid(box, {8, 8, 8});
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                for (int k = 0; k < 8; ++k)
                    if (g.uniform(0, 1) < 0.7) grid.set_density(i, j, k, g.uniform(0, 4));
        const double h = g.uniform(0.5, 15);
        const KdeField field(grid, h);
        for (int q = 0; q < 200; ++q) {
            const Eigen::Vector3d x = g.vec(-6, 7);
            const double ref = naive_kde(grid, h, x);
            const double got = kde_eval(field, x);
            const double rel = ref > 0 ? std::abs(got - ref) / ref : std::abs(got);
            worst = std::max(worst, rel);
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", worst);
    c.expect(worst <= 1e-9, std::string("max relative error ") + buf);
    if (c.ok) c.detail = std::string("4000 queries, max rel err ") + buf;
    return c;
}

Check argmin_oracle() {
    Check c;
    Rng g(102);
    int exact_cases = 0;
    for (int trial = 0; trial < 100; ++trial) {
        VoxelGrid grid(Aabb{{-5, -5, -5}, {5, 5, 5}}, {8, 8, 8});
        // odd trials: one occupied cell, so f along the ray rises then falls
        const int cells = trial % 2 ? 1 : g.integer(2, 12);
        for (int n = 0; n < cells; ++n)
            grid.set_density(g.integer(0, 7), g.integer(0, 7), g.integer(0, 7), g.uniform(0.2, 3));
        const KdeField field(grid, g.uniform(2, 15));
        const Ray ray{g.vec(-4, 4), g.vec(-1, 1).normalized()};
        const double t_min = 0.3, t_max = g.uniform(1, 12);
        const auto got = select_min_density(field, ray, t_min, t_max, 64);

        double dense_f = INFINITY, dense_t = t_min;
        for (int i = 0; i < 640; ++i) {
            const double t = i == 639 ? t_max : t_min + (t_max - t_min) / 639 * i;
            const double v = field.eval(ray.at(t));
            if (v < dense_f) dense_f = v, dense_t = t;
        }
        // field variation within one coarse step of the dense minimum
        const double step = (t_max - t_min) / 63;
        double variation = 0.0;
        for (int i = 0; i < 64; ++i) {
            const double t = i == 63 ? t_max : t_min + step * i;
            if (std::abs(t - dense_t) <= step) variation = std::max(variation, field.eval(ray.at(t)) - dense_f);
        }
        c.expect(got.density - dense_f <= variation + 1e-300,
                 "ray " + std::to_string(trial) + ": f(t*) exceeds dense minimum by more than one step's variation");
        if (cells == 1) {
            ++exact_cases;
            c.expect(got.density == dense_f, "ray " + std::to_string(trial) + ": single-bump field not exact");
        }
    }
    if (c.ok) c.detail = "100 rays, " + std::to_string(exact_cases) + " piecewise-monotone rays exact";
    return c;
}

Check schedule_conformance() {
    Check c;
    for (Decay d : {Decay::Linear, Decay::Cosine, Decay::Sqrt}) {
        NoiseSchedule s{100.0, 30000, d};
        c.expect(sigma_at(s, 0) == 100.0, std::string(decay_name(d)) + ": sigma(0) != sigma0");
        c.expect(sigma_at(s, 30000) == 0.0, std::string(decay_name(d)) + ": sigma(T) != 0");
    }
    const double lin = sigma_at({100.0, 30000, Decay::Linear}, 15000);
    const double cosv = sigma_at({100.0, 30000, Decay::Cosine}, 15000);
    const double sq = sigma_at({100.0, 30000, Decay::Sqrt}, 15000);
    c.expect(std::abs(lin - 50.0) <= 1e-9, "linear midpoint " + std::to_string(lin));
    c.expect(std::abs(cosv - 50.0 * std::sqrt(2.0)) <= 1e-9, "cosine midpoint " + std::to_string(cosv));
    c.expect(std::abs(sq - 50.0 * std::sqrt(2.0)) <= 1e-9, "sqrt midpoint " + std::to_string(sq));
    if (c.ok) c.detail = "midpoints " + fmt(lin, 5) + " / " + fmt(cosv, 5) + " / " + fmt(sq, 5);
    return c;
}

struct Workspace {
    fs::path root;
    Workspace() {
        root = fs::temp_directory_path() / ("gspoison_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Workspace() {
        std::error_code ec;
        fs::remove_all(root, ec);
    }
};

Check paper_constants(const fs::path& ws) {
    Check c;
    const fs::path scene = ws / "const_wall";
    c.expect(cli({"-q", "fixtures", "generate", "wall", "-o", scene.string(), "--splats", "2000", "--width", "64",
                  "--height", "64", "--sprite-size", "8"}) == 0,
             "fixture generation failed");
    c.expect(cli({"-q", "inject", "--ply", (scene / "scene.ply").string(), "--cameras",
                  (scene / "cameras.json").string(), "--view", "cam_000", "--sprite", (scene / "sprite.png").string(),
                  "-o", (ws / "const.ply").string()}) == 0,
             "inject failed");
    c.expect(cli({"-q", "perturb", "--cameras", (scene / "cameras.json").string(), "--poisoned", "cam_000", "-o",
                  (ws / "const_noise").string()}) == 0,
             "perturb failed");
    if (!c.ok) return c;
    const auto cfg = read_json(ws / "const.inject.json")["config"];
    c.expect(cfg["poison"]["t_min"].get<double>() == 0.3, "t_min default");
    c.expect(cfg["kde"]["bandwidth"].get<double>() == 7.5, "bandwidth default");
    c.expect(cfg["noise"]["sigma0"].get<double>() == 100.0, "sigma0 default");
    c.expect(cfg["noise"]["decay"].get<std::string>() == "linear", "decay default");
    const auto manifest = read_json(ws / "const_noise/manifest.json");
    c.expect(manifest["sigma0"].get<double>() == 100.0 && manifest["decay"] == "linear", "perturb manifest schedule");
    c.expect(manifest["snapshots"][0]["sigma"].get<double>() == 100.0, "sigma at t=0 in manifest");
    c.expect(cfg["success_rule"]["min_illusory_psnr_exclusive"].get<double>() == 25.0 &&
                 cfg["success_rule"]["max_test_drop"].get<double>() == 3.0,
             "success rule in manifest");
    c.expect(!attack_success(25.0, 0.0) && attack_success(25.0 + 1e-9, 3.0) && !attack_success(40.0, 3.0 + 1e-9),
             "report success logic");
    if (c.ok) c.detail = "t_min 0.3, h 7.5, sigma0 100 linear, PSNR > 25 and drop <= 3";
    return c;
}

Check wall_attack(const fs::path& ws) {
    Check c;
    const fs::path scene = ws / "wall";
    c.expect(cli({"-q", "fixtures", "generate", "wall", "-o", scene.string(), "--no-images"}) == 0,
             "fixture generation failed");
    if (!c.ok) return c;
    const auto n_splats = load_ply(scene / "scene.ply").size();
    c.expect(n_splats <= 50000, "fixture exceeds 5e4 splats");
    const std::vector<std::string> common = {"--cameras", (scene / "cameras.json").string(), "--view", "cam_000",
                                             "--sprite", (scene / "sprite.png").string()};
    auto with = [&](std::vector<std::string> head, std::vector<std::string> tail) {
        head.insert(head.end(), common.begin(), common.end());
        head.insert(head.end(), tail.begin(), tail.end());
        return head;
    };
    c.expect(cli(with({"-q", "inject", "--ply", (scene / "scene.ply").string()}, {"-o", (ws / "wall_p.ply").string()})) ==
                 0,
             "inject failed");
    c.expect(cli({"-q", "render", "--ply", (ws / "wall_p.ply").string(), "--cameras",
                  (scene / "cameras.json").string(), "-o", (ws / "wall_renders").string()}) == 0,
             "render failed");
    c.expect(fs::exists(ws / "wall_renders/cam_000.png"), "render output missing");
    const int code = cli(with({"-q", "evaluate", "--clean", (scene / "scene.ply").string(), "--poisoned",
                               (ws / "wall_p.ply").string()},
                              {"-o", (ws / "wall_report.json").string()}));
    c.expect(code == 0, "evaluate failed");
    if (!c.ok) return c;
    const auto report = read_json(ws / "wall_report.json");
    double illusory = 0.0, worst_innocent = 1e9;
    for (const auto& v : report["views"]) {
        if (v["poisoned"].get<bool>())
            illusory = v["masked_psnr"].get<double>();
        else
            worst_innocent = std::min(worst_innocent, v["psnr"].get<double>());
    }
    c.expect(illusory >= 25.0, "masked PSNR " + fmt(illusory) + " < 25");
    c.expect(worst_innocent >= 30.0, "innocent PSNR " + fmt(worst_innocent) + " < 30");
    c.expect(report["success"].get<bool>(), "report success=false");

    // control: every point at the slab's middle layer
    c.expect(cli(with({"-q", "inject", "--ply", (scene / "scene.ply").string()},
                      {"--naive-t", "5.0", "-o", (ws / "wall_naive.ply").string()})) == 0,
             "naive inject failed");
    c.expect(cli(with({"-q", "evaluate", "--clean", (scene / "scene.ply").string(), "--poisoned",
                       (ws / "wall_naive.ply").string()},
                      {"-o", (ws / "wall_naive.json").string()})) == 0,
             "naive evaluate failed");
    if (!c.ok) return c;
    const auto naive = read_json(ws / "wall_naive.json");
    c.expect(!naive["success"].get<bool>(), "naive control reported success");
    if (c.ok)
        c.detail = std::to_string(n_splats) + " splats, masked PSNR " + fmt(illusory) + " dB, innocent min " +
                   fmt(worst_innocent) + " dB; naive masked PSNR " + fmt(naive["v_illusory"]["psnr"].get<double>()) +
                   " dB -> success=false";
    return c;
}

double masked_attack_psnr(const Scene& scene, const KdeField& field, const std::string& id, const Image8& sprite_rgba) {
    const CameraFrame* frame = nullptr;
    for (const auto& f : scene.cameras)
        if (f.id == id) frame = &f;
    const Camera& cam = frame->camera;
    IllusorySprite sprite;
    sprite.rgba = sprite_rgba;
    sprite.offset_u = centered_offset(cam.width(), sprite_rgba.width);
    sprite.offset_v = centered_offset(cam.height(), sprite_rgba.height);
    const RenderedImage clean = render(scene.cloud, cam);
    const auto res = inject(scene.cloud, field, cam, sprite, PoisonConfig{}, clean.depth);
    const ImageF poisoned = render(res.poisoned_cloud, cam).rgb;
    const auto raster = sprite.rasterize(cam);
    return psnr(poisoned, composite_target(clean.rgb, raster), &raster.mask);
}

Check corridor_monotonicity() {
    Check c;
    SceneSpec spec;
    spec.kind = SceneKind::Corridor;
    const Scene scene = make_scene(spec);
    const KdeField field(voxelize(scene.cloud, kDefaultResolution), kDefaultBandwidth);
    const auto ranked = rank_views(field, scene.cameras);
    std::map<std::string, double> score;
    for (const auto& r : ranked) score[r.view_id] = r.score;
    for (std::size_t i = 1; i < scene.cameras.size(); ++i)
        c.expect(score[scene.cameras[i - 1].id] < score[scene.cameras[i].id],
                 "score not increasing at " + scene.cameras[i].id);
    std::string easy, hard;
    for (const auto& r : ranked) {
        if (r.difficulty == Difficulty::Easy) easy = r.view_id;
        if (r.difficulty == Difficulty::Hard) hard = r.view_id;
    }
    const Image8 sprite = make_sprite(32, 32);
    const double pe = masked_attack_psnr(scene, field, easy, sprite);
    const double ph = masked_attack_psnr(scene, field, hard, sprite);
    c.expect(pe - ph >= 3.0, "Easy " + fmt(pe) + " dB vs Hard " + fmt(ph) + " dB");
    if (c.ok)
        c.detail = "scores strictly increasing over " + std::to_string(scene.cameras.size()) + " views; Easy (" + easy +
                   ") " + fmt(pe) + " dB vs Hard (" + hard + ") " + fmt(ph) + " dB";
    return c;
}

Check renderer_sanity() {
    Check c;
    Rng g(107);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        // odd-sized image with the principal point on a pixel center
        const int w = 2 * g.integer(20, 60) + 1;
        const Camera cam(w, w, g.uniform(0.8, 1.5) * w, g.uniform(0.8, 1.5) * w, w / 2.0, w / 2.0,
                         Eigen::Matrix4d::Identity());
        const Eigen::Vector3d pos(g.uniform(-0.6, 0.6), g.uniform(-0.6, 0.6), g.uniform(3, 8));
        GaussianCloud cloud;
        cloud.push_back(point_at(pos, 0.05 * pos.z() / 5.0, 0.9, {1, 1, 1}));
        const ImageF img = render(cloud, cam).rgb;
        const Eigen::Vector2d analytic = cam.project(pos);
        // intensity-weighted centroid of the 3x3 neighbourhood around the brightest pixel
        int bu = 0, bv = 0;
        for (int v = 0; v < w; ++v)
            for (int u = 0; u < w; ++u)
                if (img.at(u, v, 0) > img.at(bu, bv, 0)) bu = u, bv = v;
        double su = 0, sv = 0, sw = 0;
        for (int dv = -1; dv <= 1; ++dv)
            for (int du = -1; du <= 1; ++du) {
                const int u = bu + du, v = bv + dv;
                if (u < 0 || v < 0 || u >= w || v >= w) continue;
                const double a = img.at(u, v, 0);
                su += a * (u + 0.5);
                sv += a * (v + 0.5);
                sw += a;
            }
        const double err = (Eigen::Vector2d(su / sw, sv / sw) - analytic).norm();
        worst = std::max(worst, err);
    }
    c.expect(worst <= 0.5, "peak off by " + fmt(worst) + " px");

    const Camera cam(64, 64, 64, 64, 32, 32, Eigen::Matrix4d::Identity());
    GaussianCloud pair;
    pair.push_back(point_at({0, 0, 5}, 0.6, 0.99, {0, 0, 1}));
    pair.push_back(point_at({0, 0, 2}, 0.15, 0.99, {1, 0, 0}));
    const RenderedImage r = render(pair, cam);
    c.expect(r.rgb.at(32, 32, 0) > 0.9 && r.rgb.at(32, 32, 2) < 0.05, "front Gaussian does not occlude");
    c.expect(std::abs(r.depth.at(32, 32) - 2.0) < 0.1, "occluded depth " + fmt(r.depth.at(32, 32)));
    c.expect(std::isinf(r.depth.at(0, 0)), "background depth is not +inf");

    // opaque plane at z = 5: median center-region depth
    GaussianCloud plane;
    for (int j = -30; j <= 30; ++j)
        for (int i = -30; i <= 30; ++i) plane.push_back(point_at({0.1 * i, 0.1 * j, 5.0}, 0.075, 0.95, {0.5, 0.5, 0.5}));
    const MapF d = render_depth(plane, cam);
    std::vector<double> center;
    for (int v = 16; v < 48; ++v)
        for (int u = 16; u < 48; ++u) center.push_back(d.at(u, v));
    std::sort(center.begin(), center.end());
    const double median = center[center.size() / 2];
    c.expect(median >= 4.9 && median <= 5.1, "plane median depth " + fmt(median));
    GaussianCloud occluded = plane;
    occluded.push_back(point_at({0, 0, 2}, 0.3, 0.99, {1, 1, 1}));
    const MapF d2 = render_depth(occluded, cam);
    bool monotone = true;
    for (std::size_t i = 0; i < d.data.size(); ++i) monotone = monotone && d2.data[i] <= d.data[i] + 1e-9;
    c.expect(monotone && d2.at(32, 32) < 3.0, "depth not monotone under occluder insertion");
    if (c.ok) c.detail = "peak error " + fmt(worst) + " px, plane median depth " + fmt(median);
    return c;
}

std::map<std::string, std::string> tree_checksums(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = file_sha256(e.path());
    return out;
}

Check determinism(const fs::path& ws) {
    Check c;
    const fs::path scene = ws / "det_corridor";
    c.expect(cli({"-q", "fixtures", "generate", "corridor", "-o", scene.string(), "--splats", "4000", "--cameras", "4",
                  "--width", "128", "--height", "128"}) == 0,
             "fixture generation failed");
    for (const char* run : {"run1", "run2"}) {
        const fs::path out = ws / "det" / run;
        c.expect(cli({"-q", "--seed", "7", "inject", "--ply", (scene / "scene.ply").string(), "--cameras",
                      (scene / "cameras.json").string(), "--view", "cam_001", "--sprite",
                      (scene / "sprite.png").string(), "-o", (out / "poisoned.ply").string()}) == 0,
                 "inject failed");
        c.expect(cli({"-q", "--seed", "7", "perturb", "--cameras", (scene / "cameras.json").string(), "--poisoned",
                      "cam_001", "-o", (out / "noisy").string()}) == 0,
                 "perturb failed");
    }
    if (!c.ok) return c;
    const auto a = tree_checksums(ws / "det/run1"), b = tree_checksums(ws / "det/run2");
    c.expect(!a.empty() && a == b, "checksums differ between runs");
    c.expect(a.count("poisoned.ply") && a.count("noisy/manifest.json"), "expected artifacts missing");
    if (c.ok) c.detail = std::to_string(a.size()) + " artifacts byte-identical (SHA-256)";
    return c;
}

Check metric_examples() {
    Check c;
    const double hand = psnr(ImageF(16, 16, 0.0), ImageF(16, 16, 0.1));
    c.expect(std::abs(hand - 20.0) <= 1e-6, "20 dB hand case gave " + std::to_string(hand));
    Rng g(109);
    ImageF a(24, 20);
    for (double& v : a.data) v = g.uniform(0, 1);
    const double id = ssim(a, a);
    c.expect(std::abs(id - 1.0) <= 1e-6, "SSIM identity " + std::to_string(id));
    const double x = 0.25, y = 0.6, c1 = 1e-4;
    const double closed = (2 * x * y + c1) / (x * x + y * y + c1);
    const double got = ssim(ImageF(15, 15, x), ImageF(15, 15, y));
    c.expect(std::abs(got - closed) <= 1e-6, "constant-image SSIM " + std::to_string(got));
    if (c.ok) c.detail = "PSNR " + fmt(hand, 6) + ", SSIM(I,I) " + fmt(id, 6) + ", constant " + fmt(got, 6);
    return c;
}

} // namespace

int main() {
    set_log_level(LogLevel::Quiet);
    Workspace ws;
    struct Criterion {
        int id;
        const char* name;
        double limit_s; // 0 = no runtime bound
        std::function<Check()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "KDE oracle equivalence", 5, kde_oracle},
        {2, "argmin oracle", 10, argmin_oracle},
        {3, "noise schedule conformance", 0, schedule_conformance},
        {4, "default constants", 0, [&] { return paper_constants(ws.root); }},
        {5, "wall occlusion attack end to end", 120, [&] { return wall_attack(ws.root); }},
        {6, "corridor difficulty monotonicity", 180, corridor_monotonicity},
        {7, "renderer sanity", 10, renderer_sanity},
        {8, "determinism", 0, [&] { return determinism(ws.root); }},
        {9, "metric correctness", 0, metric_examples},
    };
    int failures = 0;
    for (const auto& cr : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Check result;
        try {
            result = cr.run();
        } catch (const std::exception& e) {
            result.ok = false;
            result.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (cr.limit_s > 0 && secs > cr.limit_s) {
            result.ok = false;
            result.detail += " (runtime " + fmt(secs, 1) + " s exceeds " + fmt(cr.limit_s, 0) + " s)";
        }
        if (!result.ok) ++failures;
        std::printf("%s criterion %d: %s [%.1f s] %s\n", result.ok ? "PASS" : "FAIL", cr.id, cr.name, secs,
                    result.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
