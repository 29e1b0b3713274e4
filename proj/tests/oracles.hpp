#pragma once

// Scratch re-derivations shared by the unit suite and the acceptance binary.
// None of these call the library routine they are compared against.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "disprefine/grid.hpp"
#include "disprefine/io.hpp"
#include "disprefine/mask.hpp"
#include "support.hpp"

namespace testsupport {

using disprefine::CalibrationFile;
using disprefine::Vec2;

struct Line {
    double k, b;
};

// Uncentered normal equations solved by Cramer's rule over the listed pixels.
inline Line oracle_fit(const std::vector<double>& x, const std::vector<double>& y) {
    long double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        n += 1;
        sx += x[i];
        sy += y[i];
        sxx += static_cast<long double>(x[i]) * x[i];
        sxy += static_cast<long double>(x[i]) * y[i];
    }
    const long double det = n * sxx - sx * sx;
    return {static_cast<double>((n * sxy - sx * sy) / det), static_cast<double>((sxx * sy - sx * sxy) / det)};
}

inline ScalarMap oracle_lrc(const ScalarMap& dl, const ScalarMap& dr, double tau) {
    ScalarMap m(dl.width(), dl.height(), 0.0, false);
    for (int y = 0; y < dl.height(); ++y) {
        for (int x = 0; x < dl.width(); ++x) {
            if (!dl.valid(x, y)) continue;
            const double d = dl.value(x, y);
            double s = 0.0;
            const bool ok = oracle_bilinear(dr, x - d, y, s);
            m.set(x, y, (!ok || std::fabs(d - s) > tau) ? 1.0 : 0.0);
        }
    }
    return m;
}

// 16x16 left-right pair where the right view is a jittered copy of the left.
inline void random_lrc_pair(std::mt19937_64& rng, ScalarMap& dl, ScalarMap& dr) {
    dl = random_map(rng, 16, 16, 0.0, 6.0, 0.05);
    dr = ScalarMap(16, 16);
    std::normal_distribution<double> jitter(0.0, 0.8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            dr.set(x, y, dl.value(x, y) + jitter(rng));
            if (u(rng) < 0.05) dr.invalidate(x, y);
        }
    }
}

inline bool both_valid(const ScalarMap& a, const ScalarMap& b, std::size_t i) {
    return a.validity()[i] && b.validity()[i];
}

inline double oracle_mae(const ScalarMap& p, const ScalarMap& g) {
    long double s = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (both_valid(p, g, i)) {
            s += std::fabs(p.values()[i] - g.values()[i]);
            ++n;
        }
    return n ? static_cast<double>(s / n) : 0.0;
}

inline double oracle_bad(const ScalarMap& p, const ScalarMap& g, double t) {
    std::size_t n = 0, bad = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (both_valid(p, g, i)) {
            ++n;
            bad += std::fabs(p.values()[i] - g.values()[i]) > t;
        }
    return 100.0 * double(bad) / double(n);
}

inline double oracle_rmse(const ScalarMap& p, const ScalarMap& g, const CalibrationFile& c) {
    long double s = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!both_valid(p, g, i)) continue;
        const double dp = p.values()[i], dg = g.values()[i];
        if (dp <= c.min_valid_disparity_px || dg <= c.min_valid_disparity_px) continue;
        const long double e = c.focal_px * c.baseline_mm / dp - c.focal_px * c.baseline_mm / dg;
        s += e * e;
        ++n;
    }
    return static_cast<double>(std::sqrt(s / n));
}

inline double oracle_dice(const OcclusionMask& a, const OcclusionMask& b, double eps) {
    long double inter = 0, sa = 0, sb = 0;
    for (std::size_t i = 0; i < a.map().size(); ++i) {
        if (!both_valid(a.map(), b.map(), i)) continue;
        inter += a.map().values()[i] * b.map().values()[i];
        sa += a.map().values()[i];
        sb += b.map().values()[i];
    }
    return static_cast<double>(1 - (2 * inter + eps) / (sa + sb + eps));
}

inline double oracle_wbce(const OcclusionMask& a, const OcclusionMask& b, double eps) {
    double n = 0, pos = 0;
    for (std::size_t i = 0; i < a.map().size(); ++i) {
        if (!both_valid(a.map(), b.map(), i)) continue;
        n += 1;
        pos += b.map().values()[i] >= 0.5;
    }
    const double wp = pos > 0 ? n / (2 * pos) : 0, wn = n - pos > 0 ? n / (2 * (n - pos)) : 0;
    long double s = 0;
    for (std::size_t i = 0; i < a.map().size(); ++i) {
        if (!both_valid(a.map(), b.map(), i)) continue;
        double m = a.map().values()[i];
        m = m < eps ? eps : (m > 1 - eps ? 1 - eps : m);
        const double t = b.map().values()[i];
        s += -(wp * t * std::log(m) + wn * (1 - t) * std::log(1 - m));
    }
    return static_cast<double>(s / n);
}

inline bool rel_close(double a, double b, double tol) { return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(b)); }

struct OfdTerm {
    double r;
    double dy;
};

// Per-pixel temporal residual from four-tap lookups, or nullopt when excluded.
inline std::optional<OfdTerm> oracle_ofd_term(const ScalarMap& prev, const FlowMap& fl_map, const FlowMap& fr_map,
                                              const ScalarMap& disp, int x, int y, double s) {
    if (!disp.valid(x, y) || !fl_map.valid(x, y) || !(s > 0.0)) return std::nullopt;
    const double qx = x - s;
    double frx = 0, fry = 0;
    const ScalarMap rdx = fr_map.dx_map(), rdy = fr_map.dy_map();
    if (!oracle_bilinear(rdx, qx, y, frx) || !oracle_bilinear(rdy, qx, y, fry)) return std::nullopt;
    const Vec2 fl = fl_map.value(x, y);
    double sp = 0;
    if (!oracle_bilinear(prev, x + fl.x, y + fl.y, sp)) return std::nullopt;
    return OfdTerm{(-fl.x + frx) - (s - sp), -fl.y + fry};
}

inline double oracle_flow_weight(double dy) { return std::min(1.0, std::max(0.0, 1.0 - dy * dy)); }

}  // namespace testsupport
