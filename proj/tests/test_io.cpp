#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "disprefine/errors.hpp"
#include "disprefine/io.hpp"
#include "support.hpp"

using namespace disprefine;
using testsupport::ScratchDir;

namespace {

// Literal bytes, embedded NULs included.
template <std::size_t N>
std::vector<std::byte> bytes_of(const char (&s)[N]) {
    std::vector<std::byte> out(N - 1);
    std::memcpy(out.data(), s, N - 1);
    return out;
}

void push_f32(std::vector<std::byte>& out, float f) {
    const auto u = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((u >> (8 * i)) & 0xFF));
}

void push_i32(std::vector<std::byte>& out, std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((u >> (8 * i)) & 0xFF));
}

// Hand-built .flo bytes, written without the library encoder.
std::vector<std::byte> scratch_flo(int w, int h, const std::vector<float>& uv) {
    std::vector<std::byte> out;
    push_f32(out, 202021.25f);
    push_i32(out, w);
    push_i32(out, h);
    for (float f : uv) push_f32(out, f);
    return out;
}

template <typename F>
std::string error_message(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("pfm: 3x2 round trip keeps values and dimensions") {
    ScalarMap m(3, 2);
    for (int i = 0; i < 6; ++i) m.values()[static_cast<std::size_t>(i)] = i;
    const ScalarMap r = parse_pfm(encode_pfm(m));
    REQUIRE(r.width() == 3);
    REQUIRE(r.height() == 2);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(r.values()[i] == static_cast<double>(i));
        CHECK(r.validity()[i] == 1);
    }
}

TEST_CASE("pfm: rows are stored bottom-up, little endian") {
    ScalarMap m(1, 2);
    m.set(0, 0, 1.0);
    m.set(0, 1, 2.0);
    const auto b = encode_pfm(m);
    const std::string header = "Pf\n1 2\n-1\n";
    REQUIRE(b.size() == header.size() + 8);
    float first = 0.0f;
    std::memcpy(&first, b.data() + header.size(), 4);
    CHECK(first == 2.0f);
}

TEST_CASE("pfm: big-endian payload is accepted") {
    auto b = bytes_of("Pf\n1 1\n1.0\n");
    for (std::uint32_t u = std::bit_cast<std::uint32_t>(3.5f), i = 0; i < 4; ++i)
        b.push_back(static_cast<std::byte>((u >> (8 * (3 - i))) & 0xFF));
    const ScalarMap m = parse_pfm(b);
    CHECK(m.value(0, 0) == 3.5);
}

TEST_CASE("pfm: random round trips are bit-exact") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 20; ++i) {
        ScalarMap m = testsupport::random_float_map(rng, 1 + i, 2 + i % 5, -100, 100);
        if (i % 3 == 0) m.invalidate(0, 0);
        ScratchDir dir("pfm");
        write_pfm(m, dir / "m.pfm");
        const ScalarMap r = read_pfm(dir / "m.pfm");
        REQUIRE(r.same_shape(m));
        for (std::size_t j = 0; j < m.size(); ++j) {
            CHECK(r.validity()[j] == m.validity()[j]);
            if (m.validity()[j]) CHECK(std::bit_cast<std::uint64_t>(r.values()[j]) == std::bit_cast<std::uint64_t>(m.values()[j]));
        }
    }
}

TEST_CASE("pfm: non-finite pixel is read as invalid") {
    ScalarMap m(2, 2, 1.0);
    m.set(1, 0, std::numeric_limits<double>::infinity());
    const ScalarMap r = parse_pfm(encode_pfm(m));
    CHECK_FALSE(r.valid(1, 0));
    CHECK(r.valid(0, 0));
    CHECK(r.valid_count() == 3);
}

TEST_CASE("pfm: malformed inputs raise FormatError") {
    CHECK(error_message([] { parse_pfm(bytes_of("PF\n1 1\n-1\n\0\0\0\0")); }).find("unsupported channel count") != std::string::npos);
    CHECK_THROWS_AS(parse_pfm(bytes_of("P5\n1 1\n-1\n")), FormatError);
    CHECK_THROWS_AS(parse_pfm(bytes_of("")), FormatError);
    CHECK_THROWS_AS(parse_pfm(bytes_of("Pf\n")), FormatError);
    CHECK_THROWS_AS(parse_pfm(bytes_of("Pf\nx 1\n-1\n")), FormatError);
    CHECK_THROWS_AS(parse_pfm(bytes_of("Pf\n0 1\n-1\n")), FormatError);
    CHECK(error_message([] { parse_pfm(bytes_of("Pf\n1 1\n0\n\0\0\0\0")); }).find("scale") != std::string::npos);
    CHECK(error_message([] { parse_pfm(bytes_of("Pf\n2 2\n-1\n\0\0\0\0")); }).find("truncated payload") != std::string::npos);
}

TEST_CASE("pfm: every truncation of a valid file is a typed error") {
    std::mt19937_64 rng(12);
    const auto full = encode_pfm(testsupport::random_float_map(rng, 3, 3, 0, 1));
    for (std::size_t n = 0; n < full.size(); ++n) {
        const std::span<const std::byte> cut(full.data(), n);
        CHECK_THROWS_AS(parse_pfm(cut), FormatError);
    }
}

TEST_CASE("pfm: empty map cannot be written") {
    CHECK_THROWS_AS(encode_pfm(ScalarMap{}), DomainError);
}

TEST_CASE("flo: decodes hand-built bytes") {
    const auto b = scratch_flo(2, 1, {1.5f, -2.0f, 1e10f, 1e10f});
    const FlowMap f = parse_flo(b);
    REQUIRE(f.width() == 2);
    CHECK(f.valid(0, 0));
    CHECK(f.value(0, 0).x == 1.5);
    CHECK(f.value(0, 0).y == -2.0);
    CHECK_FALSE(f.valid(1, 0));
    CHECK(encode_flo(f) == b);
}

TEST_CASE("flo: zero flow and random round trips") {
    const FlowMap zero(4, 3);
    const FlowMap z = parse_flo(encode_flo(zero));
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) {
            CHECK(z.valid(x, y));
            CHECK(z.value(x, y).x == 0.0);
        }

    std::mt19937_64 rng(13);
    for (int i = 0; i < 20; ++i) {
        FlowMap f = testsupport::random_flow(rng, 2 + i, 1 + i % 4, 20.0);
        for (int y = 0; y < f.height(); ++y)
            for (int x = 0; x < f.width(); ++x) {
                const Vec2 v = f.value(x, y);
                f.set(x, y, {static_cast<float>(v.x), static_cast<float>(v.y)});
            }
        ScratchDir dir("flo");
        write_flo(f, dir / "f.flo");
        const FlowMap r = read_flo(dir / "f.flo");
        REQUIRE(r.same_shape(f));
        for (int y = 0; y < f.height(); ++y)
            for (int x = 0; x < f.width(); ++x) {
                CHECK(r.value(x, y).x == f.value(x, y).x);
                CHECK(r.value(x, y).y == f.value(x, y).y);
            }
    }
}

TEST_CASE("flo: malformed inputs") {
    auto bad = scratch_flo(1, 1, {0.0f, 0.0f});
    bad[0] = bad[1] = bad[2] = bad[3] = std::byte{0};
    CHECK(error_message([&] { parse_flo(bad); }).find("bad magic") != std::string::npos);
    auto shortb = scratch_flo(2, 2, {0.0f, 0.0f});
    CHECK(error_message([&] { parse_flo(shortb); }).find("size mismatch") != std::string::npos);
    CHECK_THROWS_AS(parse_flo(scratch_flo(-1, 2, {})), FormatError);
    CHECK_THROWS_AS(parse_flo(bytes_of("PIEH")), FormatError);
}

TEST_CASE("png mask: values map to v/255") {
    std::vector<std::uint8_t> px(6, 255);
    px[1] = 128;
    px[2] = 0;
    const OcclusionMask m = parse_mask_png(encode_gray_png(px, 3, 2));
    CHECK(m.value(0, 0) == 1.0);
    CHECK(m.value(1, 0) == 128.0 / 255.0);
    CHECK(m.value(2, 0) == 0.0);
}

TEST_CASE("png mask: random round trips are bit-exact") {
    std::mt19937_64 rng(14);
    std::uniform_int_distribution<int> level(0, 255);
    for (int i = 0; i < 20; ++i) {
        ScalarMap s(3 + i, 2 + i % 3);
        for (auto& v : s.values()) v = (i % 2 == 0) ? double(level(rng) > 127) : level(rng) / 255.0;
        const OcclusionMask m(s);
        ScratchDir dir("png");
        write_mask_png(m, dir / "m.png");
        const OcclusionMask r = read_mask_png(dir / "m.png");
        REQUIRE(r.map().same_shape(s));
        for (std::size_t j = 0; j < s.size(); ++j) CHECK(r.map().values()[j] == s.values()[j]);
    }
}

TEST_CASE("png mask: wrong bit depth, color type, or signature") {
    const std::vector<std::uint8_t> px(4, 7);
    const auto good = encode_gray_png(px, 2, 2);
    auto deep = good;
    deep[24] = std::byte{16};
    CHECK_THROWS_AS(parse_mask_png(deep), FormatError);
    auto rgb = good;
    rgb[25] = std::byte{2};
    CHECK_THROWS_AS(parse_mask_png(rgb), FormatError);
    auto sig = good;
    sig[1] = std::byte{'X'};
    CHECK_THROWS_AS(parse_mask_png(sig), FormatError);
    CHECK_THROWS_AS(parse_mask_png(std::span<const std::byte>(good.data(), 20)), FormatError);
    // Cuts anywhere before the trailing IEND chunk (12 bytes) lose image data.
    for (std::size_t n = 0; n + 12 < good.size(); ++n) {
        CHECK_THROWS_AS(parse_mask_png(std::span<const std::byte>(good.data(), n)), FormatError);
    }
}

TEST_CASE("calibration: parse, format, round trip") {
    const auto c = parse_calibration("focal_px = 1000\nbaseline_mm = 4.0\n# note\nmin_valid_disparity_px = 0.1\n");
    CHECK(c.focal_px == 1000.0);
    CHECK(c.baseline_mm == 4.0);
    CHECK(c.min_valid_disparity_px == 0.1);

    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(0.01, 5000.0);
    for (int i = 0; i < 20; ++i) {
        const CalibrationFile in{u(rng), u(rng), u(rng) / 1000.0};
        ScratchDir dir("calib");
        write_calibration(in, dir / "calib.txt");
        const CalibrationFile out = read_calibration(dir / "calib.txt");
        CHECK(out.focal_px == in.focal_px);
        CHECK(out.baseline_mm == in.baseline_mm);
        CHECK(out.min_valid_disparity_px == in.min_valid_disparity_px);
    }
}

TEST_CASE("calibration: contract errors") {
    CHECK(error_message([] { parse_calibration("focal_px = 1000\nbaseline_mm = -1\n"); }).find("non-positive baseline") != std::string::npos);
    CHECK(error_message([] { parse_calibration("baseline_mm = 4\n"); }).find("missing key focal_px") != std::string::npos);
    CHECK_THROWS_AS(parse_calibration("focal_px = 1000\nbaseline_mm = 4\nfoo = 1\n"), FormatError);
    CHECK_THROWS_AS(parse_calibration("focal_px = 1000\nfocal_px = 2\nbaseline_mm = 4\n"), FormatError);
    CHECK_THROWS_AS(parse_calibration("focal_px = abc\nbaseline_mm = 4\n"), FormatError);
    CHECK_THROWS_AS(parse_calibration("focal_px 1000\n"), FormatError);
}

TEST_CASE("files: missing input is an IoError") {
    CHECK_THROWS_AS(read_pfm("/nonexistent/dir/x.pfm"), IoError);
    CHECK_THROWS_AS(write_pfm(ScalarMap(1, 1), "/nonexistent/dir/x.pfm"), IoError);
}

}  // TEST_SUITE
