#pragma once

#include "disprefine/grid.hpp"

namespace disprefine {

/**
 * Per-pixel occlusion weight in [0, 1]: 1 means occluded, 0 occlusion-free.
 *
 * Wraps a ScalarMap and enforces the range on construction. Masks produced by
 * the left-right check are binary; soft masks read from disk are accepted
 * anywhere a mask is consumed.
 */
class OcclusionMask {
public:
    OcclusionMask() = default;
    // Throws DomainError if a valid pixel lies outside [0, 1] or is not finite.
    explicit OcclusionMask(ScalarMap m);

    static OcclusionMask filled(int width, int height, double value);

    int width() const { return map_.width(); }
    int height() const { return map_.height(); }
    double value(int x, int y) const { return map_.value(x, y); }
    bool valid(int x, int y) const { return map_.valid(x, y); }
    bool occluded(int x, int y) const { return map_.valid(x, y) && map_.value(x, y) >= 0.5; }

    const ScalarMap& map() const { return map_; }

private:
    ScalarMap map_;
};

}  // namespace disprefine
