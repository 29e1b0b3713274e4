#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "disprefine/grid.hpp"
#include "disprefine/mask.hpp"

namespace disprefine {

inline constexpr double kDefaultTrimFraction = 0.1;
inline constexpr int kTrimRounds = 2;
// Pixels with mask value below this drive the fit.
inline constexpr double kFitConfidenceThreshold = 0.5;

// disp ~= k * d_inv + b over the final inlier set.
struct AffineFit {
    double k = 1.0;
    double b = 0.0;
    std::size_t inlier_count = 0;
    double rms_residual = 0.0;
};

/**
 * Trimmed least-squares fit of disparity against inverse depth.
 *
 * Candidates are pixels valid in both maps whose mask value is valid and
 * below 0.5. With trim_fraction == 0 a single ordinary least-squares fit is
 * returned. Otherwise kTrimRounds rounds follow the initial fit: residuals are
 * recomputed over all candidates, the floor(trim_fraction * n) largest are
 * dropped, and the fit is redone on the rest.
 *
 * Throws DegenerateFitError when fewer than 2 pixels remain or d_inv is
 * constant over them; DomainError unless 0 <= trim_fraction < 0.5.
 */
AffineFit fit_affine_global(const ScalarMap& d_inv, const ScalarMap& disp,
                            const OcclusionMask& confidence,
                            double trim_fraction = kDefaultTrimFraction);

struct TileFit {
    int tile_x = 0;
    int tile_y = 0;
    // Pixel bounds, half-open.
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double center_x = 0.0;
    double center_y = 0.0;
    AffineFit fit;
    // Tile was degenerate and took the global fit instead.
    bool inherited_global = false;
};

struct TiledAffineFit {
    ScalarMap K;
    ScalarMap B;
    int tiles_x = 1;
    int tiles_y = 1;
    std::vector<TileFit> tiles;  // row-major over (tile_y, tile_x)
    // Present whenever it could be computed; needed only as a fallback.
    std::optional<AffineFit> global;
};

/**
 * fit_affine_global per tile, then dense K and B maps by bilinear
 * interpolation between tile centers (clamped outside the outermost centers).
 * Tile (i, j) covers columns [i*W/tiles_x, (i+1)*W/tiles_x) and likewise rows.
 */
TiledAffineFit fit_affine_tiled(const ScalarMap& d_inv, const ScalarMap& disp,
                                const OcclusionMask& confidence, int tiles_x, int tiles_y,
                                double trim_fraction = kDefaultTrimFraction);

// Constant K and B maps carrying a single fit.
TiledAffineFit constant_fit_maps(int width, int height, const AffineFit& fit);

// Per-pixel K * d_inv + B, valid where all three inputs are valid.
ScalarMap refine_inverse_depth(const ScalarMap& d_inv, const ScalarMap& K, const ScalarMap& B);

enum class FusionMode {
    // S_hat = M * S + (1 - M) * D_hat: coarse disparity kept where M -> 1.
    AsWritten,
    // S_hat = (1 - M) * S + M * D_hat: depth guidance replaces occluded pixels.
    InvertMask,
};

// Mask-weighted blend of coarse disparity and refined inverse depth.
// The result always lies between the two inputs at each pixel.
ScalarMap fuse(const ScalarMap& coarse, const ScalarMap& refined_inv_depth, const OcclusionMask& mask,
               FusionMode mode = FusionMode::AsWritten);

}  // namespace disprefine
