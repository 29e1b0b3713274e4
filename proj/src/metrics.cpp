#include "disprefine/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "disprefine/errors.hpp"

namespace disprefine {

namespace {

bool joint(const ScalarMap& a, const ScalarMap& b, std::size_t i) {
    return a.validity()[i] != 0 && b.validity()[i] != 0;
}

}  // namespace

double l1_loss(const ScalarMap& pred, const ScalarMap& gt) {
    require_same_shape(pred, gt, "l1_loss");
    CompensatedSum sum;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!joint(pred, gt, i)) continue;
        sum.add(std::fabs(pred.values()[i] - gt.values()[i]));
        ++n;
    }
    return n > 0 ? sum.value() / static_cast<double>(n) : 0.0;
}

double epe(const ScalarMap& pred, const ScalarMap& gt) { return l1_loss(pred, gt); }

double masked_epe(const ScalarMap& pred, const ScalarMap& gt, const OcclusionMask& region) {
    require_same_shape(pred, gt, "masked_epe");
    require_same_shape(pred, region.map(), "masked_epe");
    CompensatedSum sum;
    std::size_t n = 0;
    for (int y = 0; y < pred.height(); ++y) {
        for (int x = 0; x < pred.width(); ++x) {
            if (!pred.valid(x, y) || !gt.valid(x, y) || !region.occluded(x, y)) continue;
            sum.add(std::fabs(pred.value(x, y) - gt.value(x, y)));
            ++n;
        }
    }
    return n > 0 ? sum.value() / static_cast<double>(n) : 0.0;
}

double bad3(const ScalarMap& pred, const ScalarMap& gt, double threshold) {
    require_same_shape(pred, gt, "bad3");
    std::size_t n = 0;
    std::size_t bad = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!joint(pred, gt, i)) continue;
        ++n;
        if (std::fabs(pred.values()[i] - gt.values()[i]) > threshold) ++bad;
    }
    if (n == 0) {
        throw EmptyDomainError("bad3: no jointly valid pixels");
    }
    return 100.0 * static_cast<double>(bad) / static_cast<double>(n);
}

double dice_loss(const OcclusionMask& m, const OcclusionMask& m_ref, double eps) {
    require_same_shape(m.map(), m_ref.map(), "dice_loss");
    if (!(eps > 0.0)) {
        throw DomainError("dice_loss: eps must be positive");
    }
    const auto& a = m.map();
    const auto& b = m_ref.map();
    CompensatedSum inter, sa, sb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!joint(a, b, i)) continue;
        inter.add(a.values()[i] * b.values()[i]);
        sa.add(a.values()[i]);
        sb.add(b.values()[i]);
    }
    return 1.0 - (2.0 * inter.value() + eps) / (sa.value() + sb.value() + eps);
}

double weighted_bce(const OcclusionMask& m, const OcclusionMask& m_ref, double eps) {
    require_same_shape(m.map(), m_ref.map(), "weighted_bce");
    if (!(eps > 0.0 && eps < 0.5)) {
        throw DomainError("weighted_bce: eps must lie in (0, 0.5)");
    }
    const auto& a = m.map();
    const auto& b = m_ref.map();
    std::size_t n = 0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!joint(a, b, i)) continue;
        ++n;
        if (b.values()[i] >= 0.5) ++n_pos;
    }
    if (n == 0) return 0.0;
    const std::size_t n_neg = n - n_pos;
    const double nd = static_cast<double>(n);
    const double w_pos = n_pos > 0 ? nd / (2.0 * static_cast<double>(n_pos)) : 0.0;
    const double w_neg = n_neg > 0 ? nd / (2.0 * static_cast<double>(n_neg)) : 0.0;

    CompensatedSum sum;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!joint(a, b, i)) continue;
        const double p = std::clamp(a.values()[i], eps, 1.0 - eps);
        const double t = b.values()[i];
        sum.add(-(w_pos * t * std::log(p) + w_neg * (1.0 - t) * std::log(1.0 - p)));
    }
    return sum.value() / nd;
}

double composite_total(double l1_refined, double l1_invdepth, double ofd, double dice, double wbce) {
    return l1_refined + l1_invdepth + 0.5 * ofd + 0.25 * dice + 0.25 * wbce;
}

CompositeLossReport composite_loss(const ScalarMap& refined, const ScalarMap& refined_inv_depth,
                                   const ScalarMap& gt, const OcclusionMask& mask,
                                   const OcclusionMask& mask_lrc, double ofd_loss) {
    CompositeLossReport r;
    r.l1_refined = l1_loss(refined, gt);
    r.l1_invdepth = l1_loss(refined_inv_depth, gt);
    r.ofd = ofd_loss;
    r.dice = dice_loss(mask, mask_lrc);
    r.wbce = weighted_bce(mask, mask_lrc);
    r.total = composite_total(r.l1_refined, r.l1_invdepth, r.ofd, r.dice, r.wbce);
    return r;
}

DepthConversion disparity_to_depth(const ScalarMap& disparity, const CalibrationFile& calib) {
    validate(calib);
    DepthConversion out{ScalarMap(disparity.width(), disparity.height(), 0.0, false), 0};
    const double fb = calib.focal_px * calib.baseline_mm;
    for (std::size_t i = 0; i < disparity.size(); ++i) {
        if (!disparity.validity()[i]) continue;
        const double d = disparity.values()[i];
        if (!(d > calib.min_valid_disparity_px)) {
            ++out.excluded;
            continue;
        }
        out.depth_mm.values()[i] = fb / d;
        out.depth_mm.validity()[i] = 1;
    }
    return out;
}

namespace {

struct DepthErrorStats {
    double rmse = 0.0;
    std::size_t n = 0;
};

DepthErrorStats depth_error(const ScalarMap& pred, const ScalarMap& gt, const CalibrationFile& calib) {
    const auto zp = disparity_to_depth(pred, calib);
    const auto zg = disparity_to_depth(gt, calib);
    CompensatedSum sum;
    DepthErrorStats s;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!joint(zp.depth_mm, zg.depth_mm, i)) continue;
        const double e = zp.depth_mm.values()[i] - zg.depth_mm.values()[i];
        sum.add(e * e);
        ++s.n;
    }
    if (s.n > 0) s.rmse = std::sqrt(sum.value() / static_cast<double>(s.n));
    return s;
}

}  // namespace

double rmse_depth(const ScalarMap& pred, const ScalarMap& gt, const CalibrationFile& calib) {
    require_same_shape(pred, gt, "rmse_depth");
    const auto s = depth_error(pred, gt, calib);
    if (s.n == 0) {
        throw EmptyDomainError("rmse_depth: no jointly valid pixels after depth conversion");
    }
    return s.rmse;
}

MetricReport evaluate(const ScalarMap& pred, const ScalarMap& gt, const CalibrationFile& calib) {
    require_same_shape(pred, gt, "evaluate");
    MetricReport r;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (joint(pred, gt, i)) ++r.valid_pixels;
    }
    r.epe_px = epe(pred, gt);
    r.bad3_percent = bad3(pred, gt);
    const auto depth = depth_error(pred, gt, calib);
    if (depth.n == 0) {
        throw EmptyDomainError("evaluate: no jointly valid pixels after depth conversion");
    }
    r.rmse_mm = depth.rmse;
    r.excluded_nonpositive = r.valid_pixels - depth.n;
    return r;
}

}  // namespace disprefine
