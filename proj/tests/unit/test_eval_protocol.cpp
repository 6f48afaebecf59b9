// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <json.hpp>

#include "gspoison/error.hpp"
#include "gspoison/eval_protocol.hpp"
#include "test_util.hpp"

using namespace gspoison;
using testutil::Gen;

namespace {

ImageF random_image(Gen& g, int w, int h) {
    ImageF img(w, h);
    for (double& v : img.data) v = g.uniform(0, 1);
    return img;
}

ImageF checkerboard(int w, int h, bool invert) {
    ImageF img(w, h);
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u)
            for (int c = 0; c < 3; ++c) img.at(u, v, c) = ((u + v) % 2 == 0) != invert ? 1.0 : 0.0;
    return img;
}

} // namespace

TEST(Psnr, HandComputedTwentyDecibels) {
    const ImageF a(8, 8, 0.0), b(8, 8, 0.1);
    EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
}

TEST(Psnr, IdenticalImagesHitCap) {
    Gen g(31);
    const ImageF a = random_image(g, 10, 10);
    EXPECT_EQ(psnr(a, a), 99.0);
    ImageF b = a;
    b.data[0] += 1e-8;
    EXPECT_EQ(psnr(a, b), 99.0);
}

TEST(Psnr, MaskSelectsRegion) {
    ImageF a(10, 10, 0.5), b(10, 10, 0.5);
    Mask m(10, 10);
    for (int v = 0; v < 5; ++v)
        for (int u = 0; u < 10; ++u) m.set(u, v, true);
    for (int v = 5; v < 10; ++v)
        for (int u = 0; u < 10; ++u) b.at(u, v, 1) = 0.0;
    EXPECT_EQ(psnr(a, b, &m), 99.0);
    EXPECT_LT(psnr(a, b), 99.0);
    const Mask none(10, 10);
    EXPECT_THROW(psnr(a, b, &none), ContractError);
    EXPECT_THROW(psnr(a, ImageF(9, 10)), ContractError);
}

TEST(PsnrProperty, SymmetricAndFullMaskEqualsUnmasked) {
    Gen g(32);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = g.integer(1, 30), h = g.integer(1, 30);
        const ImageF a = random_image(g, w, h), b = random_image(g, w, h);
        const Mask all(w, h, true);
        EXPECT_DOUBLE_EQ(psnr(a, b), psnr(b, a));
        EXPECT_DOUBLE_EQ(psnr(a, b), psnr(a, b, &all));
    }
}

TEST(Ssim, IdentityIsOne) {
    Gen g(33);
    const ImageF a = random_image(g, 20, 17);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, InvertedCheckerboardIsNegative) {
    EXPECT_LT(ssim(checkerboard(16, 16, false), checkerboard(16, 16, true)), 0.0);
}

TEST(Ssim, ConstantImagesClosedForm) {
    const double x = 0.3, y = 0.7, c1 = 1e-4;
    const double expect = (2 * x * y + c1) / (x * x + y * y + c1);
    EXPECT_NEAR(ssim(ImageF(13, 12, x), ImageF(13, 12, y)), expect, 1e-9);
}

TEST(Ssim, SizeAndMaskContracts) {
    EXPECT_THROW(ssim(ImageF(10, 20), ImageF(10, 20)), ContractError);
    Mask border(20, 20);
    border.set(2, 2, true); // closer than 5 px to the edge: no window centered there
    EXPECT_THROW(ssim(ImageF(20, 20), ImageF(20, 20), &border), ContractError);
}

TEST(SsimProperty, SymmetricBoundedAndMaskedRegion) {
    Gen g(34);
    for (int trial = 0; trial < 10; ++trial) {
        const int w = g.integer(11, 30), h = g.integer(11, 30);
        const ImageF a = random_image(g, w, h), b = random_image(g, w, h);
        const double s = ssim(a, b);
        EXPECT_NEAR(s, ssim(b, a), 1e-12);
        EXPECT_LE(s, 1.0 + 1e-12);
        EXPECT_GE(s, -1.0 - 1e-12);
        const Mask all(w, h, true);
        EXPECT_NEAR(s, ssim(a, b, &all), 1e-12);
    }
    // differences far from the masked centre do not count
    ImageF a(40, 40, 0.5), b(40, 40, 0.5);
    for (int v = 0; v < 40; ++v) b.at(39, v, 0) = 0.0;
    Mask m(40, 40);
    m.set(10, 10, true);
    EXPECT_NEAR(ssim(a, b, &m), 1.0, 1e-12);
    EXPECT_LT(ssim(a, b), 1.0);
}

TEST(RankScores, OrderTiesAndLabels) {
    const auto r = rank_scores({{"c", 0.3}, {"a", 0.1}, {"b", 0.3}, {"d", 0.9}, {"e", 0.2}});
    ASSERT_EQ(r.size(), 5u);
    EXPECT_EQ(r[0].view_id, "a");
    EXPECT_EQ(r[1].view_id, "e");
    EXPECT_EQ(r[2].view_id, "b");
    EXPECT_EQ(r[3].view_id, "c");
    EXPECT_EQ(r[4].view_id, "d");
    EXPECT_EQ(r[0].difficulty, Difficulty::Easy);
    EXPECT_EQ(r[2].difficulty, Difficulty::Median);
    EXPECT_EQ(r[4].difficulty, Difficulty::Hard);
    EXPECT_EQ(r[1].difficulty, Difficulty::Other);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(r[i].rank, i);

    const auto four = rank_scores({{"w", 4}, {"x", 3}, {"y", 2}, {"z", 1}});
    EXPECT_EQ(four[1].difficulty, Difficulty::Median); // (4 - 1) / 2 = 1
    EXPECT_EQ(four[1].view_id, "y");
    EXPECT_THROW(rank_scores({{"a", 1}, {"b", 2}}), ContractError);
}

TEST(RankScoresProperty, InvariantToPositiveScaling) {
    Gen g(35);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::pair<std::string, double>> s;
        const int n = g.integer(3, 12);
        for (int i = 0; i < n; ++i) s.emplace_back("v" + std::to_string(i), g.uniform(0, 1));
        auto scaled = s;
        const double k = g.uniform(0.1, 1000);
        for (auto& e : scaled) e.second *= k;
        const auto a = rank_scores(s), b = rank_scores(scaled);
        for (int i = 0; i < n; ++i) EXPECT_EQ(a[i].view_id, b[i].view_id);
    }
}

namespace {

KdeField cluster_field() {
    Gen g(36);
    GaussianCloud c;
    for (int i = 0; i < 2000; ++i) c.push_back(testutil::point_at(g.vec(-1, 1) + Eigen::Vector3d(0, 0, 3), 0.1, 0.9));
    c.push_back(testutil::point_at({-10, -10, -10}));
    c.push_back(testutil::point_at({10, 10, 10}));
    return KdeField(voxelize(c, {32, 32, 32}), 7.5);
}

} // namespace

TEST(ViewDensity, ClusterBeatsVoidAndAwayFacingIsZero) {
    const KdeField f = cluster_field();
    const double diag = f.grid().aabb().diagonal();
    const Camera toward(64, 64, 64, 64, 32, 32, look_at({0, 0, -4}, {0, 0, 3}, {0, -1, 0}));
    const Camera sideways(64, 64, 64, 64, 32, 32, look_at({0, 0, -4}, {-10, 0, -4}, {0, -1, 0}));
    const Camera outside(64, 64, 64, 64, 32, 32, look_at({30, 30, 30}, {60, 60, 60}, {0, -1, 0}));
    const double a = view_density(f, toward, diag), b = view_density(f, sideways, diag);
    EXPECT_GT(a, 2.0 * b);
    EXPECT_EQ(view_density(f, outside, diag), 0.0);
}

TEST(ViewDensity, InvariantToImageResolution) {
    const KdeField f = cluster_field();
    const double diag = f.grid().aabb().diagonal();
    const Camera cam(64, 48, 60, 60, 32, 24, look_at({0, 0, -3}, {0.3, 0, 3}, {0, -1, 0}));
    const double a = view_density(f, cam, diag);
    const double b = view_density(f, cam.resized(640, 480), diag);
    EXPECT_NEAR(a, b, 1e-9 * a);
}

TEST(RankViews, OrdersBySceneContent) {
    const KdeField f = cluster_field();
    std::vector<CameraFrame> cams;
    const Eigen::Vector3d targets[] = {{0, 0, 3}, {-10, 0, -4}, {0.8, 0, 3}};
    const char* ids[] = {"center", "away", "offset"};
    for (int i = 0; i < 3; ++i) {
        CameraFrame fr;
        fr.id = ids[i];
        fr.camera = Camera(64, 64, 64, 64, 32, 32, look_at({0, 0, -4}, targets[i], {0, -1, 0}));
        cams.push_back(fr);
    }
    const auto r = rank_views(f, cams);
    EXPECT_EQ(r[0].view_id, "away");
    EXPECT_EQ(r[0].difficulty, Difficulty::Easy);
    EXPECT_EQ(r[2].difficulty, Difficulty::Hard);
}

namespace {

AttackInputs perfect_inputs() {
    Gen g(37);
    AttackInputs in;
    const ImageF base = random_image(g, 16, 16);
    Mask m(16, 16);
    for (int v = 4; v < 12; ++v)
        for (int u = 4; u < 12; ++u) m.set(u, v, true);
    in.poisoned_ids = {"p"};
    in.test_ids = {"t1", "t2"};
    in.poisoned_renders["p"] = base;
    in.target_composites["p"] = base;
    in.sprite_masks["p"] = m;
    for (const char* id : {"t1", "t2"}) {
        const ImageF img = random_image(g, 16, 16);
        in.clean_renders[id] = img;
        in.poisoned_renders[id] = img;
    }
    return in;
}

} // namespace

TEST(EvaluateAttack, PerfectAttackSucceeds) {
    const AttackReport r = evaluate_attack(perfect_inputs());
    EXPECT_EQ(r.v_illusory.psnr, 99.0);
    EXPECT_NEAR(r.v_illusory.ssim, 1.0, 1e-12);
    EXPECT_EQ(r.v_test.psnr, 99.0);
    EXPECT_EQ(r.v_test_clean_baseline.psnr, 99.0);
    EXPECT_EQ(r.v_test_drop, 0.0);
    EXPECT_TRUE(r.success);
    const auto j = nlohmann::json::parse(r.to_json());
    EXPECT_TRUE(j["v_illusory"]["lpips"].is_null());
    EXPECT_EQ(j["views"].size(), 3u);
    EXPECT_NE(r.to_table().find("V-Illusory"), std::string::npos);
}

TEST(EvaluateAttack, NullAttackFailsOnIllusion) {
    AttackInputs in = perfect_inputs();
    ImageF target = in.poisoned_renders["p"];
    for (int v = 4; v < 12; ++v)
        for (int u = 4; u < 12; ++u) target.at(u, v, 0) = 1.0 - target.at(u, v, 0);
    in.target_composites["p"] = target;
    const AttackReport r = evaluate_attack(in);
    EXPECT_LT(r.v_illusory.psnr, 25.0);
    EXPECT_EQ(r.v_test_drop, 0.0);
    EXPECT_FALSE(r.success);
}

TEST(EvaluateAttack, DamagedInnocentViewsFail) {
    AttackInputs in = perfect_inputs();
    for (double& v : in.poisoned_renders["t1"].data) v = 0.0;
    const AttackReport r = evaluate_attack(in);
    EXPECT_GT(r.v_test_drop, 3.0);
    EXPECT_FALSE(r.success);
}

TEST(EvaluateAttack, MissingIdsAreListed) {
    AttackInputs in = perfect_inputs();
    in.clean_renders.erase("t2");
    in.sprite_masks.clear();
    try {
        evaluate_attack(in);
        FAIL();
    } catch (const ContractError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("clean_render:t2"), std::string::npos);
        EXPECT_NE(msg.find("mask:p"), std::string::npos);
    }
    AttackInputs overlap = perfect_inputs();
    overlap.test_ids.push_back("p");
    overlap.clean_renders["p"] = overlap.poisoned_renders["p"];
    EXPECT_THROW(evaluate_attack(overlap), ContractError);
}

TEST(AttackSuccessProperty, ThresholdsAndMonotonicity) {
    EXPECT_FALSE(attack_success(25.0, 0.0));
    EXPECT_TRUE(attack_success(25.0001, 3.0));
    EXPECT_FALSE(attack_success(40.0, 3.0001));
    Gen g(38);
    for (int i = 0; i < 1000; ++i) {
        const double p = g.uniform(0, 99), d = g.uniform(-5, 20);
        if (attack_success(p, d)) {
            EXPECT_TRUE(attack_success(p + g.uniform(0, 10), d));
            EXPECT_TRUE(attack_success(p, d - g.uniform(0, 10)));
        }
    }
}
