#include <doctest.h>

#include <cmath>
#include <random>

#include "disprefine/errors.hpp"
#include "disprefine/grid.hpp"
#include "support.hpp"

using namespace disprefine;

TEST_SUITE("grid") {

TEST_CASE("bilinear_sample: midpoint of a 2x2 map is the corner mean") {
    ScalarMap m(2, 2);
    m.set(0, 0, 0.0);
    m.set(1, 0, 1.0);
    m.set(0, 1, 2.0);
    m.set(1, 1, 3.0);
    const auto v = bilinear_sample(m, {0.5, 0.5});
    REQUIRE(v);
    CHECK(*v == 1.5);
}

TEST_CASE("bilinear_sample: integer coordinates reproduce stored values") {
    std::mt19937_64 rng(1);
    ScalarMap m = testsupport::random_map(rng, 7, 5, -10, 10, 0.2);
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            const auto v = bilinear_sample(m, {double(x), double(y)});
            CHECK(v.has_value() == m.valid(x, y));
            if (v) CHECK(*v == m.value(x, y));
        }
    }
}

TEST_CASE("bilinear_sample: matches explicit four-weight oracle") {
    std::mt19937_64 rng(2);
    ScalarMap m = testsupport::random_map(rng, 8, 8, -5, 5);
    std::uniform_real_distribution<double> p(0.0, 7.0);
    for (int i = 0; i < 100; ++i) {
        const double x = p(rng), y = p(rng);
        double expected = 0.0;
        REQUIRE(testsupport::oracle_bilinear(m, x, y, expected));
        const auto v = bilinear_sample(m, {x, y});
        REQUIRE(v);
        CHECK(std::fabs(*v - expected) <= 1e-12);
    }
}

TEST_CASE("bilinear_sample: outside the raster or touching an invalid neighbor") {
    ScalarMap m(4, 4, 1.0);
    CHECK_FALSE(bilinear_sample(m, {-0.01, 1.0}));
    CHECK_FALSE(bilinear_sample(m, {3.01, 1.0}));
    CHECK_FALSE(bilinear_sample(m, {1.0, 3.5}));
    CHECK_FALSE(bilinear_sample(m, {std::nan(""), 1.0}));
    CHECK(bilinear_sample(m, {3.0, 3.0}));
    m.invalidate(2, 1);
    CHECK_FALSE(bilinear_sample(m, {1.5, 1.0}));
    // Zero-weight neighbors do not participate.
    CHECK(bilinear_sample(m, {1.0, 1.0}));
    CHECK(bilinear_sample(m, {1.0, 1.5}));
}

TEST_CASE("bilinear_sample is linear in the map values") {
    std::mt19937_64 rng(3);
    const ScalarMap a = testsupport::random_map(rng, 6, 6, -3, 3);
    const ScalarMap b = testsupport::random_map(rng, 6, 6, -3, 3);
    const double ca = 1.7, cb = -0.4;
    ScalarMap c(6, 6);
    for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] = ca * a.values()[i] + cb * b.values()[i];
    std::uniform_real_distribution<double> p(0.0, 5.0);
    for (int i = 0; i < 50; ++i) {
        const PixelPoint q{p(rng), p(rng)};
        CHECK(*bilinear_sample(c, q) == doctest::Approx(ca * *bilinear_sample(a, q) + cb * *bilinear_sample(b, q)).epsilon(1e-12));
    }
}

TEST_CASE("bilinear_sample on flow maps blends both channels") {
    FlowMap f(2, 1);
    f.set(0, 0, {0.0, 2.0});
    f.set(1, 0, {4.0, -2.0});
    const auto v = bilinear_sample(f, {0.25, 0.0});
    REQUIRE(v);
    CHECK(v->x == 1.0);
    CHECK(v->y == 1.0);
}

TEST_CASE("bilinear_sample_grad: linear ramp and constant map") {
    ScalarMap ramp(6, 5);
    ScalarMap flat(6, 5, 3.25);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 6; ++x) ramp.set(x, y, 2.0 * x + 7.0);
    for (double x : {0.5, 1.0, 2.3, 4.5}) {
        for (double y : {0.5, 1.7, 3.5}) {
            const auto g = bilinear_sample_grad(ramp, {x, y});
            REQUIRE(g);
            CHECK(g->d_dx == doctest::Approx(2.0).epsilon(1e-14));
            CHECK(g->d_dy == doctest::Approx(0.0));
            const auto z = bilinear_sample_grad(flat, {x, y});
            REQUIRE(z);
            CHECK(z->d_dx == 0.0);
            CHECK(z->d_dy == 0.0);
        }
    }
}

TEST_CASE("bilinear_sample_grad: rejects points within half a pixel of the border") {
    ScalarMap m(6, 6, 1.0);
    CHECK_FALSE(bilinear_sample_grad(m, {0.49, 2.0}));
    CHECK_FALSE(bilinear_sample_grad(m, {4.51, 2.0}));
    CHECK_FALSE(bilinear_sample_grad(m, {2.0, 0.2}));
    CHECK_FALSE(bilinear_sample_grad(m, {2.0, 4.9}));
    CHECK(bilinear_sample_grad(m, {0.5, 4.5}));
}

TEST_CASE("bilinear_sample_grad: central finite differences") {
    std::mt19937_64 rng(4);
    const ScalarMap m = testsupport::random_map(rng, 9, 9, -4, 4);
    std::uniform_real_distribution<double> p(0.6, 7.4);
    const double h = 1e-5;
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
        const double x = p(rng), y = p(rng);
        // Finite differences straddling a cell edge see a kink; skip those.
        if (std::fabs(x - std::round(x)) < 2 * h || std::fabs(y - std::round(y)) < 2 * h) continue;
        const auto g = bilinear_sample_grad(m, {x, y});
        REQUIRE(g);
        const double fx = (*bilinear_sample(m, {x + h, y}) - *bilinear_sample(m, {x - h, y})) / (2 * h);
        const double fy = (*bilinear_sample(m, {x, y + h}) - *bilinear_sample(m, {x, y - h})) / (2 * h);
        CHECK(std::fabs(g->d_dx - fx) <= 1e-6 * std::max(1.0, std::fabs(fx)));
        CHECK(std::fabs(g->d_dy - fy) <= 1e-6 * std::max(1.0, std::fabs(fy)));
        ++checked;
    }
    CHECK(checked > 150);
}

TEST_CASE("forward_warp_left_to_right: identity and pure shift") {
    std::mt19937_64 rng(5);
    ScalarMap zero(9, 3, 0.0);
    const ScalarMap w0 = forward_warp_left_to_right(zero);
    for (std::size_t i = 0; i < w0.size(); ++i) {
        CHECK(w0.validity()[i] == 1);
        CHECK(w0.values()[i] == 0.0);
    }

    ScalarMap row(16, 1, 5.0);
    const ScalarMap shifted = forward_warp_left_to_right(row);
    for (int x = 0; x < 16; ++x) {
        CHECK(shifted.valid(x, 0) == (x <= 10));
        if (x <= 10) CHECK(shifted.value(x, 0) == 5.0);
    }
}

TEST_CASE("forward_warp_left_to_right: z-buffer keeps the nearer layer") {
    // Brute-force splat oracle over a two-layer row.
    ScalarMap left(32, 2, 2.0);
    for (int y = 0; y < 2; ++y)
        for (int x = 12; x < 20; ++x) left.set(x, y, 8.0);
    const ScalarMap warped = forward_warp_left_to_right(left);

    for (int y = 0; y < 2; ++y) {
        for (int xt = 0; xt < 32; ++xt) {
            bool any = false;
            double best = 0.0;
            for (int xs = 0; xs < 32; ++xs) {
                const double d = left.value(xs, y);
                if (std::lround(xs - d) != xt) continue;
                best = any ? std::max(best, d) : d;
                any = true;
            }
            CHECK(warped.valid(xt, y) == any);
            if (any) CHECK(warped.value(xt, y) == best);
        }
    }
    // Columns 4..11 receive both layers; the foreground wins.
    for (int x = 4; x < 12; ++x) CHECK(warped.value(x, 0) == 8.0);
}

TEST_CASE("ScalarMap: shape checks") {
    ScalarMap a(3, 2), b(2, 3);
    CHECK_THROWS_AS(require_same_shape(a, b, "t"), DimensionError);
    CHECK_NOTHROW(require_same_shape(a, a, "t"));
    CHECK_THROWS_AS(ScalarMap(-1, 2), DomainError);
    CHECK(a.valid_count() == 6);
}

}  // TEST_SUITE
