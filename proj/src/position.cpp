#include "disprefine/position.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "disprefine/errors.hpp"

namespace disprefine {

PositionEmbedding::PositionEmbedding(int width, int height, const PositionEmbeddingOptions& opts)
    : width_(width), height_(height), n_freq_(opts.n_freq) {
    if (width < 1 || height < 1) {
        throw DomainError("position_maps: width and height must be >= 1");
    }
    if (opts.n_freq < 1) {
        throw DomainError("position_maps: n_freq must be >= 1");
    }
    if (!(opts.base > 1.0) || !std::isfinite(opts.base)) {
        throw DomainError("position_maps: base must be > 1");
    }
    omega_.resize(static_cast<std::size_t>(n_freq_));
    for (int i = 0; i < n_freq_; ++i) {
        omega_[static_cast<std::size_t>(i)] =
            1.0 / std::pow(opts.base, static_cast<double>(i) / static_cast<double>(n_freq_));
    }

    channels_.assign(static_cast<std::size_t>(4 * n_freq_), ScalarMap(width, height));
    for (int i = 0; i < n_freq_; ++i) {
        const double w = omega_[static_cast<std::size_t>(i)];
        auto& sx = channels_[static_cast<std::size_t>(4 * i + 0)];
        auto& cx = channels_[static_cast<std::size_t>(4 * i + 1)];
        auto& sy = channels_[static_cast<std::size_t>(4 * i + 2)];
        auto& cy = channels_[static_cast<std::size_t>(4 * i + 3)];
        for (int y = 0; y < height; ++y) {
            const double v = opts.normalize ? static_cast<double>(y) / height : static_cast<double>(y);
            for (int x = 0; x < width; ++x) {
                const double u = opts.normalize ? static_cast<double>(x) / width : static_cast<double>(x);
                sx.set(x, y, std::sin(u * w));
                cx.set(x, y, std::cos(u * w));
                sy.set(x, y, std::sin(v * w));
                cy.set(x, y, std::cos(v * w));
            }
        }
    }
}

std::string PositionEmbedding::channel_name(std::size_t c) {
    static constexpr const char* kKinds[4] = {"sinx", "cosx", "siny", "cosy"};
    return "pe_f" + std::to_string(c / 4) + "_" + kKinds[c % 4];
}

PositionEmbedding position_maps(int width, int height, const PositionEmbeddingOptions& opts) {
    return PositionEmbedding(width, height, opts);
}

ScalarMap error_heatmap(std::span<const ScalarMap> preds, std::span<const ScalarMap> gts) {
    if (preds.empty()) {
        throw DomainError("error_heatmap: empty input list");
    }
    if (preds.size() != gts.size()) {
        throw DimensionError("error_heatmap: prediction and ground-truth lists differ in length");
    }
    const int w = preds.front().width();
    const int h = preds.front().height();
    for (std::size_t i = 0; i < preds.size(); ++i) {
        require_same_shape(preds.front(), preds[i], "error_heatmap");
        require_same_shape(preds.front(), gts[i], "error_heatmap");
    }
    ScalarMap out(w, h, 0.0, false);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sum = 0.0;
            int n = 0;
            for (std::size_t i = 0; i < preds.size(); ++i) {
                if (!preds[i].valid(x, y) || !gts[i].valid(x, y)) continue;
                sum += std::fabs(preds[i].value(x, y) - gts[i].value(x, y));
                ++n;
            }
            if (n > 0) out.set(x, y, sum / n);
        }
    }
    return out;
}

std::vector<std::uint8_t> to_gray_minmax(const ScalarMap& map) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (!map.validity()[i]) continue;
        lo = std::min(lo, map.values()[i]);
        hi = std::max(hi, map.values()[i]);
    }
    std::vector<std::uint8_t> px(map.size(), 0);
    if (!(hi > lo)) return px;
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (!map.validity()[i]) continue;
        px[i] = static_cast<std::uint8_t>(std::lround(255.0 * (map.values()[i] - lo) / (hi - lo)));
    }
    return px;
}

}  // namespace disprefine
