#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "disprefine/grid.hpp"

namespace disprefine {

struct PositionEmbeddingOptions {
    int n_freq = 4;
    double base = 10000.0;
    // Divide x by width and y by height before applying the frequencies.
    bool normalize = false;
};

enum class PositionChannel { SinX = 0, CosX = 1, SinY = 2, CosY = 3 };

/**
 * Sinusoidal position maps over an image grid.
 *
 * Channel 4*i + c holds frequency index i with c = sin(x w_i), cos(x w_i),
 * sin(y w_i), cos(y w_i), where w_i = base^(-i / n_freq) and (x, y) are the
 * integer pixel coordinates (or x / width, y / height when normalized).
 */
class PositionEmbedding {
public:
    PositionEmbedding(int width, int height, const PositionEmbeddingOptions& opts = {});

    int width() const { return width_; }
    int height() const { return height_; }
    int n_freq() const { return n_freq_; }
    std::size_t channel_count() const { return channels_.size(); }

    const ScalarMap& channel(std::size_t c) const { return channels_.at(c); }
    const ScalarMap& channel(int freq, PositionChannel kind) const {
        return channels_.at(static_cast<std::size_t>(4 * freq + static_cast<int>(kind)));
    }
    double frequency(int i) const { return omega_.at(static_cast<std::size_t>(i)); }

    // File stem for channel c, e.g. "pe_f0_sinx".
    static std::string channel_name(std::size_t c);

private:
    int width_;
    int height_;
    int n_freq_;
    std::vector<double> omega_;
    std::vector<ScalarMap> channels_;
};

PositionEmbedding position_maps(int width, int height, const PositionEmbeddingOptions& opts = {});

// Per-pixel mean of |pred - gt| over the pairs in which both pixels are valid.
// A pixel that is never jointly valid is invalid in the result.
ScalarMap error_heatmap(std::span<const ScalarMap> preds, std::span<const ScalarMap> gts);

// Min-max normalization of the valid pixels to 0..255 for viewing. Invalid pixels map to 0.
std::vector<std::uint8_t> to_gray_minmax(const ScalarMap& map);

}  // namespace disprefine
