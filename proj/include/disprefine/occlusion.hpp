#pragma once

#include "disprefine/grid.hpp"
#include "disprefine/mask.hpp"

namespace disprefine {

inline constexpr double kDefaultLrcTau = 1.0;

/**
 * Left-right consistency check.
 *
 * For every valid left pixel (x, y) the right disparity is sampled bilinearly
 * at (x - d_left(x, y), y). The pixel is occluded (m = 1) when that sample is
 * unavailable or differs from d_left by more than `tau`, otherwise m = 0.
 * Pixels invalid in d_left are invalid in the mask. The comparison uses
 * magnitudes only, so it does not depend on the sign convention of d_right.
 *
 * Throws DimensionError on size mismatch and DomainError unless tau > 0.
 */
OcclusionMask lrc_mask(const ScalarMap& d_left, const ScalarMap& d_right, double tau = kDefaultLrcTau);

// lrc_mask against a right view synthesized by forward_warp_left_to_right(d_left).
OcclusionMask lrc_mask_single(const ScalarMap& d_left, double tau = kDefaultLrcTau);

}  // namespace disprefine
