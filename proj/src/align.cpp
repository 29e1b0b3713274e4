#include "disprefine/align.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "disprefine/errors.hpp"

namespace disprefine {

namespace {

struct Sample {
    double x;  // inverse depth
    double y;  // disparity
};

struct PixelRect {
    int x0, y0, x1, y1;
};

std::vector<Sample> collect_candidates(const ScalarMap& d_inv, const ScalarMap& disp,
                                       const OcclusionMask& confidence, PixelRect r) {
    std::vector<Sample> out;
    for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) {
            if (!d_inv.valid(x, y) || !disp.valid(x, y) || !confidence.valid(x, y)) continue;
            if (!(confidence.value(x, y) < kFitConfidenceThreshold)) continue;
            const double xi = d_inv.value(x, y);
            const double yi = disp.value(x, y);
            if (!std::isfinite(xi) || !std::isfinite(yi)) continue;
            out.push_back({xi, yi});
        }
    }
    return out;
}

// Centered normal equations over samples[idx].
AffineFit least_squares(const std::vector<Sample>& samples, const std::vector<std::size_t>& idx) {
    const std::size_t n = idx.size();
    if (n < 2) {
        throw DegenerateFitError("degenerate fit: " + std::to_string(n) + " inlier(s), need at least 2");
    }
    double sx = 0.0, sy = 0.0;
    double xmin = samples[idx.front()].x, xmax = xmin;
    for (auto i : idx) {
        sx += samples[i].x;
        sy += samples[i].y;
        xmin = std::min(xmin, samples[i].x);
        xmax = std::max(xmax, samples[i].x);
    }
    if (xmin == xmax) {
        throw DegenerateFitError("degenerate fit: inverse depth is constant over the fit pixels");
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (auto i : idx) {
        const double dx = samples[i].x - mx;
        sxx += dx * dx;
        sxy += dx * (samples[i].y - my);
    }
    if (!(sxx > 0.0)) {
        throw DegenerateFitError("degenerate fit: zero variance in inverse depth");
    }
    AffineFit fit;
    fit.k = sxy / sxx;
    fit.b = my - fit.k * mx;
    fit.inlier_count = n;
    double ss = 0.0;
    for (auto i : idx) {
        const double r = fit.k * samples[i].x + fit.b - samples[i].y;
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / static_cast<double>(n));
    return fit;
}

AffineFit trimmed_fit(const std::vector<Sample>& samples, double trim_fraction) {
    std::vector<std::size_t> all(samples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    AffineFit fit = least_squares(samples, all);
    if (trim_fraction == 0.0) return fit;

    const std::size_t n = samples.size();
    const auto drop = static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(n)));
    std::vector<double> abs_res(n);
    for (int round = 0; round < kTrimRounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            abs_res[i] = std::fabs(fit.k * samples[i].x + fit.b - samples[i].y);
        }
        std::vector<std::size_t> order = all;
        // Ties broken by pixel order so the kept set is reproducible.
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return abs_res[a] < abs_res[b]; });
        order.resize(n - drop);
        std::sort(order.begin(), order.end());
        fit = least_squares(samples, order);
    }
    return fit;
}

void check_trim(double trim_fraction) {
    if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
        throw DomainError("trim_fraction must lie in [0, 0.5)");
    }
}

void check_inputs(const ScalarMap& d_inv, const ScalarMap& disp, const OcclusionMask& confidence,
                  const char* what) {
    require_same_shape(d_inv, disp, what);
    require_same_shape(d_inv, confidence.map(), what);
}

// Position of v between sorted tile centers as (lower index, weight of upper).
std::pair<std::size_t, double> locate(const std::vector<double>& centers, double v) {
    if (centers.size() == 1 || v <= centers.front()) return {0, 0.0};
    if (v >= centers.back()) return {centers.size() - 1, 0.0};
    std::size_t i = 0;
    while (i + 1 < centers.size() && centers[i + 1] <= v) ++i;
    if (i + 1 == centers.size()) return {i, 0.0};
    return {i, (v - centers[i]) / (centers[i + 1] - centers[i])};
}

}  // namespace

AffineFit fit_affine_global(const ScalarMap& d_inv, const ScalarMap& disp,
                            const OcclusionMask& confidence, double trim_fraction) {
    check_inputs(d_inv, disp, confidence, "fit_affine_global");
    check_trim(trim_fraction);
    const auto samples =
        collect_candidates(d_inv, disp, confidence, {0, 0, d_inv.width(), d_inv.height()});
    return trimmed_fit(samples, trim_fraction);
}

TiledAffineFit fit_affine_tiled(const ScalarMap& d_inv, const ScalarMap& disp,
                                const OcclusionMask& confidence, int tiles_x, int tiles_y,
                                double trim_fraction) {
    check_inputs(d_inv, disp, confidence, "fit_affine_tiled");
    check_trim(trim_fraction);
    if (tiles_x < 1 || tiles_y < 1) {
        throw DomainError("fit_affine_tiled: tile counts must be >= 1");
    }
    const int w = d_inv.width();
    const int h = d_inv.height();
    if (tiles_x > w || tiles_y > h) {
        throw DomainError("fit_affine_tiled: more tiles than pixels along an axis");
    }

    TiledAffineFit out;
    out.tiles_x = tiles_x;
    out.tiles_y = tiles_y;

    std::optional<DegenerateFitError> global_error;
    try {
        out.global = fit_affine_global(d_inv, disp, confidence, trim_fraction);
    } catch (const DegenerateFitError& e) {
        global_error = e;
    }

    std::vector<double> cx(static_cast<std::size_t>(tiles_x));
    std::vector<double> cy(static_cast<std::size_t>(tiles_y));
    for (int ty = 0; ty < tiles_y; ++ty) {
        for (int tx = 0; tx < tiles_x; ++tx) {
            TileFit t;
            t.tile_x = tx;
            t.tile_y = ty;
            t.x0 = tx * w / tiles_x;
            t.x1 = (tx + 1) * w / tiles_x;
            t.y0 = ty * h / tiles_y;
            t.y1 = (ty + 1) * h / tiles_y;
            t.center_x = 0.5 * (t.x0 + t.x1 - 1);
            t.center_y = 0.5 * (t.y0 + t.y1 - 1);
            cx[static_cast<std::size_t>(tx)] = t.center_x;
            cy[static_cast<std::size_t>(ty)] = t.center_y;
            try {
                t.fit = trimmed_fit(collect_candidates(d_inv, disp, confidence, {t.x0, t.y0, t.x1, t.y1}),
                                    trim_fraction);
            } catch (const DegenerateFitError&) {
                if (!out.global) throw *global_error;
                t.fit = *out.global;
                t.inherited_global = true;
            }
            out.tiles.push_back(t);
        }
    }

    out.K = ScalarMap(w, h);
    out.B = ScalarMap(w, h);
    auto tile_at = [&](std::size_t i, std::size_t j) -> const AffineFit& {
        return out.tiles[j * static_cast<std::size_t>(tiles_x) + i].fit;
    };
    for (int y = 0; y < h; ++y) {
        const auto [j, fy] = locate(cy, y);
        const std::size_t j1 = fy > 0.0 ? j + 1 : j;
        for (int x = 0; x < w; ++x) {
            const auto [i, fx] = locate(cx, x);
            const std::size_t i1 = fx > 0.0 ? i + 1 : i;
            const AffineFit& f00 = tile_at(i, j);
            const AffineFit& f10 = tile_at(i1, j);
            const AffineFit& f01 = tile_at(i, j1);
            const AffineFit& f11 = tile_at(i1, j1);
            if (fx == 0.0 && fy == 0.0) {
                out.K.set(x, y, f00.k);
                out.B.set(x, y, f00.b);
                continue;
            }
            const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy);
            const double w01 = (1 - fx) * fy, w11 = fx * fy;
            out.K.set(x, y, w00 * f00.k + w10 * f10.k + w01 * f01.k + w11 * f11.k);
            out.B.set(x, y, w00 * f00.b + w10 * f10.b + w01 * f01.b + w11 * f11.b);
        }
    }
    return out;
}

TiledAffineFit constant_fit_maps(int width, int height, const AffineFit& fit) {
    TiledAffineFit out;
    out.K = ScalarMap(width, height, fit.k);
    out.B = ScalarMap(width, height, fit.b);
    out.global = fit;
    TileFit t;
    t.x1 = width;
    t.y1 = height;
    t.center_x = 0.5 * (width - 1);
    t.center_y = 0.5 * (height - 1);
    t.fit = fit;
    out.tiles.push_back(t);
    return out;
}

ScalarMap refine_inverse_depth(const ScalarMap& d_inv, const ScalarMap& K, const ScalarMap& B) {
    require_same_shape(d_inv, K, "refine_inverse_depth");
    require_same_shape(d_inv, B, "refine_inverse_depth");
    ScalarMap out(d_inv.width(), d_inv.height(), 0.0, false);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!d_inv.validity()[i] || !K.validity()[i] || !B.validity()[i]) continue;
        out.values()[i] = K.values()[i] * d_inv.values()[i] + B.values()[i];
        out.validity()[i] = 1;
    }
    return out;
}

ScalarMap fuse(const ScalarMap& coarse, const ScalarMap& refined_inv_depth, const OcclusionMask& mask,
               FusionMode mode) {
    require_same_shape(coarse, refined_inv_depth, "fuse");
    require_same_shape(coarse, mask.map(), "fuse");
    ScalarMap out(coarse.width(), coarse.height(), 0.0, false);
    const auto& m = mask.map();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!coarse.validity()[i] || !refined_inv_depth.validity()[i] || !m.validity()[i]) continue;
        const double s = coarse.values()[i];
        const double d = refined_inv_depth.values()[i];
        const double mi = m.values()[i];
        const double w_s = mode == FusionMode::AsWritten ? mi : 1.0 - mi;
        const double w_d = mode == FusionMode::AsWritten ? 1.0 - mi : mi;
        double v;
        if (w_s == 1.0) {
            v = s;
        } else if (w_d == 1.0) {
            v = d;
        } else {
            // The clamp only absorbs last-bit rounding of the blend.
            v = std::clamp(w_s * s + w_d * d, std::min(s, d), std::max(s, d));
        }
        out.values()[i] = v;
        out.validity()[i] = 1;
    }
    return out;
}

}  // namespace disprefine
