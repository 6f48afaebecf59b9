// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "gspoison/error.hpp"
#include "gspoison/image.hpp"
#include "test_util.hpp"

using namespace gspoison;
using testutil::Gen;

TEST(Png, RoundTripRgbAndRgba) {
    testutil::TempDir tmp;
    Gen g(41);
    for (int c : {3, 4}) {
        Image8 img(13, 7, c);
        for (auto& v : img.data) v = static_cast<std::uint8_t>(g.integer(0, 255));
        const auto p = tmp / ("img" + std::to_string(c) + ".png");
        write_png(img, p);
        EXPECT_EQ(read_png(p), img);
    }
}

TEST(Png, ForceAlphaAddsOpaqueChannel) {
    testutil::TempDir tmp;
    Image8 img(4, 4, 3, 77);
    write_png(img, tmp / "a.png");
    const Image8 rgba = read_png(tmp / "a.png", true);
    ASSERT_EQ(rgba.channels, 4);
    EXPECT_EQ(rgba.at(2, 3, 0), 77);
    EXPECT_EQ(rgba.at(2, 3, 3), 255);
}

TEST(Png, MissingAndCorruptFiles) {
    testutil::TempDir tmp;
    EXPECT_THROW(read_png(tmp / "none.png"), IoError);
    {
        std::ofstream out(tmp / "bad.png", std::ios::binary);
        out << "not a png at all";
    }
    EXPECT_THROW(read_png(tmp / "bad.png"), FormatError);
}

TEST(Convert, FloatAnd8BitRoundTrip) {
    Image8 img(3, 2, 3);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(i * 40);
    const ImageF f = to_float(img);
    EXPECT_DOUBLE_EQ(f.at(0, 0, 1), 40.0 / 255.0);
    EXPECT_EQ(to_8bit(f), img);
    ImageF out(1, 1);
    out.data = {-0.5, 1.7, 0.5};
    const Image8 q = to_8bit(out);
    EXPECT_EQ(q.data[0], 0);
    EXPECT_EQ(q.data[1], 255);
    EXPECT_EQ(q.data[2], 128);
}

TEST(DepthRaw, RoundTripIncludingInfinity) {
    testutil::TempDir tmp;
    MapF d(5, 3, 2.5);
    d.at(1, 2) = std::numeric_limits<double>::infinity();
    d.at(4, 0) = 0.125;
    write_depth_raw(d, tmp / "d.bin");
    const auto bytes = testutil::read_file(tmp / "d.bin");
    ASSERT_EQ(bytes.size(), 12u + 15u * 4u);
    std::uint32_t hdr[3];
    std::memcpy(hdr, bytes.data(), 12);
    EXPECT_EQ(hdr[0], 5u);
    EXPECT_EQ(hdr[1], 3u);
    EXPECT_EQ(hdr[2], kDepthMagic);
    const MapF back = read_depth_raw(tmp / "d.bin");
    EXPECT_EQ(back.width, 5);
    EXPECT_TRUE(std::isinf(back.at(1, 2)));
    EXPECT_EQ(back.at(4, 0), 0.125);
    EXPECT_EQ(back.at(0, 0), 2.5);
}

TEST(DepthPfm, HeaderAndBottomUpRows) {
    testutil::TempDir tmp;
    MapF d(2, 2);
    d.at(0, 0) = 1.0;
    d.at(0, 1) = 3.0;
    write_depth_pfm(d, tmp / "d.pfm");
    const auto bytes = testutil::read_file(tmp / "d.pfm");
    const std::string text(bytes.begin(), bytes.end());
    ASSERT_EQ(text.rfind("Pf\n2 2\n-1", 0), 0u);
    const std::size_t payload = bytes.size() - 16;
    float first;
    std::memcpy(&first, bytes.data() + payload, 4);
    EXPECT_EQ(first, 3.0f); // bottom row first
}
