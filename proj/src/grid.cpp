#include "disprefine/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "disprefine/errors.hpp"

namespace disprefine {

ScalarMap::ScalarMap(int width, int height, double fill, bool valid)
    : width_(width), height_(height) {
    if (width < 0 || height < 0) {
        throw DomainError("ScalarMap: negative dimensions");
    }
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    values_.assign(n, fill);
    valid_.assign(n, valid ? 1 : 0);
}

std::size_t ScalarMap::valid_count() const {
    std::size_t n = 0;
    for (auto v : valid_) n += v;
    return n;
}

FlowMap::FlowMap(int width, int height, Vec2 fill, bool valid)
    : width_(width), height_(height) {
    if (width < 0 || height < 0) {
        throw DomainError("FlowMap: negative dimensions");
    }
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    dx_.assign(n, fill.x);
    dy_.assign(n, fill.y);
    valid_.assign(n, valid ? 1 : 0);
}

ScalarMap FlowMap::dx_map() const {
    ScalarMap m(width_, height_);
    for (std::size_t i = 0; i < dx_.size(); ++i) {
        m.values()[i] = dx_[i];
        m.validity()[i] = valid_[i];
    }
    return m;
}

ScalarMap FlowMap::dy_map() const {
    ScalarMap m(width_, height_);
    for (std::size_t i = 0; i < dy_.size(); ++i) {
        m.values()[i] = dy_[i];
        m.validity()[i] = valid_[i];
    }
    return m;
}

void require_same_shape(const ScalarMap& a, const ScalarMap& b, const char* what) {
    if (!a.same_shape(b)) {
        std::ostringstream os;
        os << what << ": dimension mismatch (" << a.width() << "x" << a.height() << " vs "
           << b.width() << "x" << b.height() << ")";
        throw DimensionError(os.str());
    }
}

namespace {

struct Stencil {
    int x0;
    int y0;
    double fx;
    double fy;
};

std::optional<Stencil> make_stencil(int w, int h, PixelPoint p) {
    // Written so that NaN coordinates fail the test.
    if (!(p.x >= 0.0 && p.x <= w - 1 && p.y >= 0.0 && p.y <= h - 1)) {
        return std::nullopt;
    }
    const int x0 = static_cast<int>(std::floor(p.x));
    const int y0 = static_cast<int>(std::floor(p.y));
    return Stencil{x0, y0, p.x - x0, p.y - y0};
}

// Visits the taps of the stencil that carry nonzero weight. tap(x, y, weight)
// returns false to reject an invalid neighbor.
template <typename Tap>
bool blend(const Stencil& s, Tap&& tap) {
    const double wx[2] = {1.0 - s.fx, s.fx};
    const double wy[2] = {1.0 - s.fy, s.fy};
    for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
            const double w = wx[i] * wy[j];
            if (w == 0.0) continue;
            if (!tap(s.x0 + i, s.y0 + j, w)) return false;
        }
    }
    return true;
}

}  // namespace

std::optional<double> bilinear_sample(const ScalarMap& map, PixelPoint p) {
    const auto s = make_stencil(map.width(), map.height(), p);
    if (!s) return std::nullopt;
    double acc = 0.0;
    const bool ok = blend(*s, [&](int x, int y, double w) {
        if (!map.valid(x, y)) return false;
        acc += w * map.value(x, y);
        return true;
    });
    if (!ok) return std::nullopt;
    return acc;
}

std::optional<Vec2> bilinear_sample(const FlowMap& flow, PixelPoint p) {
    const auto s = make_stencil(flow.width(), flow.height(), p);
    if (!s) return std::nullopt;
    Vec2 acc;
    const bool ok = blend(*s, [&](int x, int y, double w) {
        if (!flow.valid(x, y)) return false;
        const Vec2 v = flow.value(x, y);
        acc.x += w * v.x;
        acc.y += w * v.y;
        return true;
    });
    if (!ok) return std::nullopt;
    return acc;
}

std::optional<SampleGradient> cell_gradient(const ScalarMap& map, PixelPoint p) {
    const int w = map.width();
    const int h = map.height();
    if (w < 2 || !(p.x >= 0.0 && p.x <= w - 1 && p.y >= 0.0 && p.y <= h - 1)) {
        return std::nullopt;
    }
    const int x0 = std::min(static_cast<int>(std::floor(p.x)), w - 2);
    const double fx = p.x - x0;
    if (h == 1) {
        if (!map.valid(x0, 0) || !map.valid(x0 + 1, 0)) return std::nullopt;
        return SampleGradient{map.value(x0 + 1, 0) - map.value(x0, 0), 0.0};
    }
    const int y0 = std::min(static_cast<int>(std::floor(p.y)), h - 2);
    const double fy = p.y - y0;
    if (!map.valid(x0, y0) || !map.valid(x0 + 1, y0) || !map.valid(x0, y0 + 1) ||
        !map.valid(x0 + 1, y0 + 1)) {
        return std::nullopt;
    }
    const double v00 = map.value(x0, y0);
    const double v10 = map.value(x0 + 1, y0);
    const double v01 = map.value(x0, y0 + 1);
    const double v11 = map.value(x0 + 1, y0 + 1);
    return SampleGradient{(1.0 - fy) * (v10 - v00) + fy * (v11 - v01),
                          (1.0 - fx) * (v01 - v00) + fx * (v11 - v10)};
}

std::optional<SampleGradient> bilinear_sample_grad(const ScalarMap& map, PixelPoint p) {
    const double xmax = map.width() - 1.5;
    const double ymax = map.height() - 1.5;
    if (!(p.x >= 0.5 && p.x <= xmax && p.y >= 0.5 && p.y <= ymax)) {
        return std::nullopt;
    }
    return cell_gradient(map, p);
}

ScalarMap forward_warp_left_to_right(const ScalarMap& d_left) {
    const int w = d_left.width();
    const int h = d_left.height();
    ScalarMap out(w, h, 0.0, false);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!d_left.valid(x, y)) continue;
            const double d = d_left.value(x, y);
            if (!std::isfinite(d)) continue;
            const double target = std::round(static_cast<double>(x) - d);
            if (target < 0.0 || target > w - 1) continue;
            const int xt = static_cast<int>(target);
            if (!out.valid(xt, y) || d > out.value(xt, y)) {
                out.set(xt, y, d);
            }
        }
    }
    return out;
}

}  // namespace disprefine
