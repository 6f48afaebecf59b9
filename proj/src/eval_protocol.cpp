// SPDX-License-Identifier: Apache-2.0
#include "gspoison/eval_protocol.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gspoison/error.hpp"
#include "gspoison/log.hpp"

namespace gspoison {

const char* difficulty_name(Difficulty d) {
    switch (d) {
    case Difficulty::Easy: return "Easy";
    case Difficulty::Median: return "Median";
    case Difficulty::Hard: return "Hard";
    case Difficulty::Other: return "Other";
    }
    return "Other";
}

namespace {

double radical_inverse(std::uint32_t index, std::uint32_t base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (index > 0) {
        r += f * (index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

void check_same_shape(const ImageF& a, const ImageF& b, const Mask* mask) {
    if (a.width != b.width || a.height != b.height) throw ContractError("image metrics: shape mismatch");
    if (mask) {
        if (mask->width != a.width || mask->height != a.height) throw ContractError("image metrics: mask shape mismatch");
        if (mask->count() == 0) throw ContractError("image metrics: mask is empty");
    }
}

} // namespace

double view_density(const KdeField& field, const Camera& cam, double scene_diag, int samples) {
    if (samples < 1) throw ContractError("view_density: need at least one sample");
    const double radius = kViewDensityRadius * scene_diag;
    const Aabb& box = field.grid().aabb();
    double sum = 0.0;
    int inside = 0;
    for (int s = 0; s < samples; ++s) {
        const auto idx = static_cast<std::uint32_t>(s + 1);
        // image-plane position as a fraction of the frame: depends on FOV only
        const double u = radical_inverse(idx, 2) * cam.width();
        const double v = radical_inverse(idx, 3) * cam.height();
        const double r = radius * std::cbrt(radical_inverse(idx, 5));
        const Eigen::Vector3d x = ray_through_pixel(cam, Eigen::Vector2d(u, v)).at(r);
        if (box.contains(x)) ++inside;
        sum += field.eval(x);
    }
    if (inside == 0) {
        log_warning("view_density: no frustum samples inside the scene bounding box; score set to 0");
        return 0.0;
    }
    return sum / samples;
}

std::vector<ViewDifficulty> rank_scores(std::vector<std::pair<std::string, double>> scores) {
    if (scores.size() < 3) throw ContractError("rank_views: need at least 3 cameras");
    std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        return a.first < b.first;
    });
    const int n = static_cast<int>(scores.size());
    std::vector<ViewDifficulty> out;
    for (int r = 0; r < n; ++r) {
        ViewDifficulty d{scores[r].first, scores[r].second, r, Difficulty::Other};
        if (r == 0)
            d.difficulty = Difficulty::Easy;
        else if (r == n - 1)
            d.difficulty = Difficulty::Hard;
        else if (r == (n - 1) / 2)
            d.difficulty = Difficulty::Median;
        out.push_back(d);
    }
    return out;
}

std::vector<ViewDifficulty> rank_views(const KdeField& field, const std::vector<CameraFrame>& cameras) {
    if (cameras.size() < 3) throw ContractError("rank_views: need at least 3 cameras");
    const double diag = field.grid().aabb().diagonal();
    std::vector<std::pair<std::string, double>> scores;
    for (const auto& f : cameras) scores.emplace_back(f.id, view_density(field, f.camera, diag));
    return rank_scores(std::move(scores));
}

double psnr(const ImageF& a, const ImageF& b, const Mask* mask) {
    check_same_shape(a, b, mask);
    double se = 0.0;
    std::size_t n = 0;
    const std::size_t npx = std::size_t(a.width) * a.height;
    for (std::size_t i = 0; i < npx; ++i) {
        if (mask && !mask->data[i]) continue;
        for (int c = 0; c < 3; ++c) {
            const double d = a.data[3 * i + c] - b.data[3 * i + c];
            se += d * d;
        }
        n += 3;
    }
    if (n == 0) throw ContractError("psnr: no pixels to compare");
    const double mse = se / n;
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const ImageF& a, const ImageF& b, const Mask* mask) {
    check_same_shape(a, b, mask);
    constexpr int kWin = 11, kHalf = 5;
    constexpr double kSigma = 1.5, kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;
    if (a.width < kWin || a.height < kWin) throw ContractError("ssim: images must be at least 11x11");

    double window[kWin];
    double wsum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = i - kHalf;
        window[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        wsum += window[i];
    }
    for (double& w : window) w /= wsum;

    const int ow = a.width - 2 * kHalf, oh = a.height - 2 * kHalf;
    // valid-region separable filter of an a.width x a.height plane
    auto filter = [&](const std::vector<double>& plane) {
        std::vector<double> tmp(std::size_t(ow) * a.height), out(std::size_t(ow) * oh);
        for (int y = 0; y < a.height; ++y)
            for (int x = 0; x < ow; ++x) {
                double s = 0.0;
                for (int k = 0; k < kWin; ++k) s += window[k] * plane[std::size_t(y) * a.width + x + k];
                tmp[std::size_t(y) * ow + x] = s;
            }
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                double s = 0.0;
                for (int k = 0; k < kWin; ++k) s += window[k] * tmp[std::size_t(y + k) * ow + x];
                out[std::size_t(y) * ow + x] = s;
            }
        return out;
    };

    std::size_t centers = 0;
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            if (!mask || mask->at(x + kHalf, y + kHalf)) ++centers;
    if (centers == 0) throw ContractError("ssim: mask has no pixels at least 5 px from the border");

    const std::size_t npx = std::size_t(a.width) * a.height;
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> pa(npx), pb(npx), paa(npx), pbb(npx), pab(npx);
        for (std::size_t i = 0; i < npx; ++i) {
            pa[i] = a.data[3 * i + c];
            pb[i] = b.data[3 * i + c];
            paa[i] = pa[i] * pa[i];
            pbb[i] = pb[i] * pb[i];
            pab[i] = pa[i] * pb[i];
        }
        const auto ma = filter(pa), mb = filter(pb), maa = filter(paa), mbb = filter(pbb), mab = filter(pab);
        double sum = 0.0;
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                if (mask && !mask->at(x + kHalf, y + kHalf)) continue;
                const std::size_t i = std::size_t(y) * ow + x;
                const double mu_a = ma[i], mu_b = mb[i];
                const double var_a = maa[i] - mu_a * mu_a;
                const double var_b = mbb[i] - mu_b * mu_b;
                const double cov = mab[i] - mu_a * mu_b;
                sum += ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
                       ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
            }
        total += sum / centers;
    }
    return total / 3.0;
}

bool attack_success(double illusory_psnr, double test_drop) {
    return illusory_psnr > kSuccessPsnr && test_drop <= kMaxTestDrop;
}

AttackReport evaluate_attack(const AttackInputs& in) {
    std::vector<std::string> missing;
    auto need = [&](const auto& map, const std::string& id, const char* what) {
        if (!map.count(id)) missing.push_back(std::string(what) + ":" + id);
    };
    if (in.poisoned_ids.empty()) throw ContractError("evaluate_attack: no poisoned views");
    for (const auto& id : in.poisoned_ids) {
        need(in.poisoned_renders, id, "poisoned_render");
        need(in.target_composites, id, "target");
        need(in.sprite_masks, id, "mask");
    }
    for (const auto& id : in.test_ids) {
        need(in.clean_renders, id, "clean_render");
        need(in.poisoned_renders, id, "poisoned_render");
    }
    std::set<std::string> poisoned(in.poisoned_ids.begin(), in.poisoned_ids.end());
    for (const auto& id : in.test_ids)
        if (poisoned.count(id)) missing.push_back("test id also poisoned:" + id);
    if (!missing.empty()) {
        std::string msg = "evaluate_attack: inconsistent view ids:";
        for (const auto& m : missing) msg += " " + m;
        throw ContractError(msg);
    }

    AttackReport report;
    for (const auto& id : in.poisoned_ids) {
        const ImageF& render = in.poisoned_renders.at(id);
        const ImageF& target = in.target_composites.at(id);
        const Mask& mask = in.sprite_masks.at(id);
        ViewMetrics m{id, true, psnr(render, target), ssim(render, target), psnr(render, target, &mask),
                      ssim(render, target, &mask)};
        report.v_illusory.psnr += m.masked_psnr;
        report.v_illusory.ssim += m.masked_ssim;
        report.views.push_back(m);
    }
    report.v_illusory.psnr /= double(in.poisoned_ids.size());
    report.v_illusory.ssim /= double(in.poisoned_ids.size());

    for (const auto& id : in.test_ids) {
        const ImageF& render = in.poisoned_renders.at(id);
        const ImageF& clean = in.clean_renders.at(id);
        ViewMetrics m{id, false, psnr(render, clean), ssim(render, clean), 0.0, 0.0};
        report.v_test.psnr += m.psnr;
        report.v_test.ssim += m.ssim;
        report.v_test_clean_baseline.psnr += psnr(clean, clean);
        report.v_test_clean_baseline.ssim += ssim(clean, clean);
        report.views.push_back(m);
    }
    if (!in.test_ids.empty()) {
        const double n = double(in.test_ids.size());
        report.v_test.psnr /= n;
        report.v_test.ssim /= n;
        report.v_test_clean_baseline.psnr /= n;
        report.v_test_clean_baseline.ssim /= n;
    } else {
        report.v_test = report.v_test_clean_baseline = {kPsnrCap, 1.0};
    }
    report.v_test_drop = report.v_test_clean_baseline.psnr - report.v_test.psnr;
    report.success = attack_success(report.v_illusory.psnr, report.v_test_drop);
    return report;
}

std::string AttackReport::to_json() const {
    nlohmann::json j;
    j["views"] = nlohmann::json::array();
    for (const auto& v : views) {
        nlohmann::json e{{"view_id", v.view_id}, {"poisoned", v.poisoned}, {"psnr", v.psnr}, {"ssim", v.ssim},
                         {"lpips", nullptr}};
        if (v.poisoned) {
            e["masked_psnr"] = v.masked_psnr;
            e["masked_ssim"] = v.masked_ssim;
        }
        j["views"].push_back(e);
    }
    j["v_illusory"] = {{"psnr", v_illusory.psnr}, {"ssim", v_illusory.ssim}, {"lpips", nullptr}};
    j["v_test"] = {{"psnr", v_test.psnr}, {"ssim", v_test.ssim}, {"lpips", nullptr}};
    j["v_test_clean_baseline"] = {{"psnr", v_test_clean_baseline.psnr}, {"ssim", v_test_clean_baseline.ssim}};
    j["v_test_drop"] = v_test_drop;
    j["success_rule"] = {{"min_illusory_psnr_exclusive", kSuccessPsnr}, {"max_test_drop", kMaxTestDrop}};
    j["success"] = success;
    return j.dump(2) + "\n";
}

std::string AttackReport::to_table() const {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    os << std::left << std::setw(14) << "" << std::right << std::setw(10) << "PSNR" << std::setw(10) << "SSIM"
       << std::setw(10) << "LPIPS" << "\n";
    auto row = [&](const std::string& name, const SetMetrics& m) {
        os << std::left << std::setw(14) << name << std::right << std::setw(10) << m.psnr << std::setw(10) << m.ssim
           << std::setw(10) << "n/a" << "\n";
    };
    row("V-Illusory", v_illusory);
    row("V-Test", v_test);
    row("V-Test clean", v_test_clean_baseline);
    os << "V-Test drop   " << std::setw(10) << v_test_drop << "\n";
    os << "success       " << std::setw(10) << (success ? "yes" : "no") << "\n";
    return os.str();
}

} // namespace gspoison
