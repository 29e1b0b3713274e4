#include "disprefine/mask.hpp"

#include <cmath>
#include <string>

#include "disprefine/errors.hpp"

namespace disprefine {

OcclusionMask::OcclusionMask(ScalarMap m) : map_(std::move(m)) {
    for (int y = 0; y < map_.height(); ++y) {
        for (int x = 0; x < map_.width(); ++x) {
            if (!map_.valid(x, y)) continue;
            const double v = map_.value(x, y);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw DomainError("mask value " + std::to_string(v) + " outside [0,1] at (" +
                                  std::to_string(x) + "," + std::to_string(y) + ")");
            }
        }
    }
}

OcclusionMask OcclusionMask::filled(int width, int height, double value) {
    return OcclusionMask(ScalarMap(width, height, value));
}

}  // namespace disprefine
