#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace disprefine {

// Subpixel location. x is the column (rightward), y the row (downward).
struct PixelPoint {
    double x = 0.0;
    double y = 0.0;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/**
 * Single-channel H x W raster with a per-pixel validity flag.
 *
 * Used for disparities, inverse depth, scale/shift maps, weights and residuals.
 * Storage is row-major. Operations in this library propagate validity
 * conjunctively: a result pixel is valid only if every contributing operand
 * pixel is valid.
 */
class ScalarMap {
public:
    ScalarMap() = default;
    ScalarMap(int width, int height, double fill = 0.0, bool valid = true);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    double value(int x, int y) const { return values_[index(x, y)]; }
    bool valid(int x, int y) const { return valid_[index(x, y)] != 0; }

    // Stores v and marks the pixel valid.
    void set(int x, int y, double v) {
        values_[index(x, y)] = v;
        valid_[index(x, y)] = 1;
    }
    void invalidate(int x, int y) { valid_[index(x, y)] = 0; }
    void set_valid(int x, int y, bool v) { valid_[index(x, y)] = v ? 1 : 0; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::span<std::uint8_t> validity() { return valid_; }
    std::span<const std::uint8_t> validity() const { return valid_; }

    std::size_t valid_count() const;
    bool same_shape(const ScalarMap& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
    std::vector<std::uint8_t> valid_;
};

// Two-channel displacement raster (dx, dy) with validity.
class FlowMap {
public:
    FlowMap() = default;
    FlowMap(int width, int height, Vec2 fill = {}, bool valid = true);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return dx_.size(); }
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    Vec2 value(int x, int y) const { return {dx_[index(x, y)], dy_[index(x, y)]}; }
    bool valid(int x, int y) const { return valid_[index(x, y)] != 0; }
    void set(int x, int y, Vec2 v) {
        dx_[index(x, y)] = v.x;
        dy_[index(x, y)] = v.y;
        valid_[index(x, y)] = 1;
    }
    void invalidate(int x, int y) { valid_[index(x, y)] = 0; }

    // Channel views as standalone maps (copies).
    ScalarMap dx_map() const;
    ScalarMap dy_map() const;

    bool same_shape(const ScalarMap& m) const {
        return width_ == m.width() && height_ == m.height();
    }
    bool same_shape(const FlowMap& f) const {
        return width_ == f.width_ && height_ == f.height_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> dx_;
    std::vector<double> dy_;
    std::vector<std::uint8_t> valid_;
};

// Throws DimensionError naming `what` when the two rasters differ in size.
void require_same_shape(const ScalarMap& a, const ScalarMap& b, const char* what);

/**
 * Bilinear interpolation of the four pixels surrounding `p`.
 *
 * Returns nullopt when `p` lies outside [0, W-1] x [0, H-1] or when a
 * neighbor carrying nonzero weight is invalid. Neighbors with zero weight
 * (p exactly on a pixel row or column) do not participate, so sampling at an
 * integer coordinate returns the stored value whenever that pixel is valid.
 */
std::optional<double> bilinear_sample(const ScalarMap& map, PixelPoint p);

// Same rule as bilinear_sample, applied to both flow channels.
std::optional<Vec2> bilinear_sample(const FlowMap& flow, PixelPoint p);

// d/dx and d/dy of the bilinear interpolant.
struct SampleGradient {
    double d_dx = 0.0;
    double d_dy = 0.0;
};

/**
 * Partial derivatives of bilinear_sample(map, p) with respect to p.
 *
 * Only defined strictly inside the raster: nullopt when p is within half a
 * pixel of the border, i.e. outside [0.5, W-1.5] x [0.5, H-1.5], or when any
 * of the four cell corners is invalid. On a cell edge the derivative of the
 * cell to the lower-right (floor) is used.
 */
std::optional<SampleGradient> bilinear_sample_grad(const ScalarMap& map, PixelPoint p);

// Derivative of the interpolating cell anywhere in [0, W-1] x [0, H-1] (no interior
// requirement). The last row/column reuse the preceding cell. Requires W, H >= 2.
std::optional<SampleGradient> cell_gradient(const ScalarMap& map, PixelPoint p);

/**
 * Synthesizes a right-view disparity by splatting each valid left pixel to
 * column round(x - d) on the same row. Collisions keep the larger disparity
 * (the nearer surface); target pixels that receive nothing are invalid.
 */
ScalarMap forward_warp_left_to_right(const ScalarMap& d_left);

}  // namespace disprefine
