#include "disprefine/occlusion.hpp"

#include <cmath>

#include "disprefine/errors.hpp"

namespace disprefine {

OcclusionMask lrc_mask(const ScalarMap& d_left, const ScalarMap& d_right, double tau) {
    require_same_shape(d_left, d_right, "lrc_mask");
    if (!(tau > 0.0)) {
        throw DomainError("lrc_mask: tau must be positive");
    }
    ScalarMap m(d_left.width(), d_left.height(), 0.0, false);
    for (int y = 0; y < d_left.height(); ++y) {
        for (int x = 0; x < d_left.width(); ++x) {
            if (!d_left.valid(x, y)) continue;
            const double d = d_left.value(x, y);
            const auto other = bilinear_sample(d_right, {x - d, static_cast<double>(y)});
            const bool consistent = other && std::fabs(d - *other) <= tau;
            m.set(x, y, consistent ? 0.0 : 1.0);
        }
    }
    return OcclusionMask(std::move(m));
}

OcclusionMask lrc_mask_single(const ScalarMap& d_left, double tau) {
    return lrc_mask(d_left, forward_warp_left_to_right(d_left), tau);
}

}  // namespace disprefine
