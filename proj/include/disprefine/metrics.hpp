#pragma once

#include <cmath>
#include <cstddef>

#include "disprefine/grid.hpp"
#include "disprefine/io.hpp"
#include "disprefine/mask.hpp"

namespace disprefine {

inline constexpr double kBadThresholdPx = 3.0;
inline constexpr double kDiceEps = 1e-6;
inline constexpr double kBceEps = 1e-7;

// Compensated (Neumaier) summation; keeps reductions reproducible to well below 1e-10 relative.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Mean |pred - gt| over jointly valid pixels; 0 when there are none.
double l1_loss(const ScalarMap& pred, const ScalarMap& gt);
// End-point error. Defined as the mean absolute disparity error, i.e. identical to l1_loss.
double epe(const ScalarMap& pred, const ScalarMap& gt);
// EPE over the jointly valid pixels that `region` marks occluded (m >= 0.5); 0 when there are none.
double masked_epe(const ScalarMap& pred, const ScalarMap& gt, const OcclusionMask& region);

// Percentage of jointly valid pixels with |pred - gt| strictly above `threshold`.
// Throws EmptyDomainError when no pixel is jointly valid.
double bad3(const ScalarMap& pred, const ScalarMap& gt, double threshold = kBadThresholdPx);

// 1 - (2 sum(m m_ref) + eps) / (sum(m) + sum(m_ref) + eps) over jointly valid pixels.
double dice_loss(const OcclusionMask& m, const OcclusionMask& m_ref, double eps = kDiceEps);

/**
 * Class-balanced binary cross-entropy.
 *
 * Mean over jointly valid pixels of
 *   -[w_pos m_ref log(m) + w_neg (1 - m_ref) log(1 - m)],
 * with m clamped to [eps, 1 - eps]. With N valid pixels of which N_pos have
 * m_ref >= 0.5, w_pos = N / (2 N_pos) and w_neg = N / (2 (N - N_pos)); an
 * empty class gets weight 0.
 */
double weighted_bce(const OcclusionMask& m, const OcclusionMask& m_ref, double eps = kBceEps);

struct CompositeLossReport {
    double l1_refined = 0.0;
    double l1_invdepth = 0.0;
    double ofd = 0.0;
    double dice = 0.0;
    double wbce = 0.0;
    double total = 0.0;
};

// Weighted sum l1_refined + l1_invdepth + 0.5 ofd + 0.25 dice + 0.25 wbce.
double composite_total(double l1_refined, double l1_invdepth, double ofd, double dice, double wbce);

CompositeLossReport composite_loss(const ScalarMap& refined, const ScalarMap& refined_inv_depth,
                                   const ScalarMap& gt, const OcclusionMask& mask,
                                   const OcclusionMask& mask_lrc, double ofd_loss);

struct DepthConversion {
    ScalarMap depth_mm;
    // Valid disparities at or below calib.min_valid_disparity_px.
    std::size_t excluded = 0;
};

// Z = focal_px * baseline_mm / d; d <= min_valid_disparity_px becomes invalid.
DepthConversion disparity_to_depth(const ScalarMap& disparity, const CalibrationFile& calib);

// Depth RMSE in mm over pixels valid after conversion of both maps.
// Throws EmptyDomainError when no pixel qualifies.
double rmse_depth(const ScalarMap& pred, const ScalarMap& gt, const CalibrationFile& calib);

struct MetricReport {
    double epe_px = 0.0;
    double bad3_percent = 0.0;
    double rmse_mm = 0.0;
    std::size_t valid_pixels = 0;
    // Jointly valid disparity pixels left out of the depth RMSE because either side was too small.
    std::size_t excluded_nonpositive = 0;
};

MetricReport evaluate(const ScalarMap& pred, const ScalarMap& gt, const CalibrationFile& calib);

}  // namespace disprefine
