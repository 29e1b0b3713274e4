#pragma once

#include <cstddef>
#include <string_view>

#include "disprefine/grid.hpp"

namespace disprefine {

/**
 * Inputs for the temporal stereo consistency term between frames k-1 and k.
 *
 * Flows are backward (frame k -> frame k-1): a pixel p of frame k was at
 * p + flow(p) in frame k-1. Both disparities are left-view.
 */
struct OfdInputs {
    ScalarMap disparity;           // frame k
    ScalarMap previous_disparity;  // frame k-1
    FlowMap flow_left;
    FlowMap flow_right;
};

struct OfdResidual {
    ScalarMap residual;  // x-component mismatch, signed
    ScalarMap dy_flow;   // y-component flow difference
};

enum class Penalty { Abs, Square };

std::string_view to_string(Penalty p);
// Accepts "abs" and "square"; throws DomainError otherwise.
Penalty parse_penalty(std::string_view s);

struct OfdResult {
    double loss = 0.0;
    ScalarMap residual;
    ScalarMap weight;
    std::size_t count = 0;
};

/**
 * Per-pixel flow-difference residual.
 *
 * For a left pixel p with disparity s > 0 the right correspondent is
 * q = (x - s, y). Its frame k-1 positions are p + F_L(p) and q + F_R(q), with
 * F_R sampled bilinearly. The x-difference of the two displacements is
 * compared with the change in disparity, s - S_{k-1}(p + F_L(p)):
 *
 *   r   = [(p - P_L').x - (q - P_R').x] - [s - S_{k-1}(P_L')]
 *   dyF =  (p - P_L').y - (q - P_R').y
 *
 * Pixels where any lookup is invalid or out of frame, or s <= 0, are invalid.
 */
OfdResidual ofd_residual(const OfdInputs& in);

// clamp(1 - dyF^2, 0, 1).
double adaptive_weight(double dy_flow);
ScalarMap adaptive_weight(const ScalarMap& dy_flow);

// Mean of weight * penalty(residual) over contributing pixels; 0 when none contribute.
OfdResult ofd_loss(const OfdInputs& in, Penalty penalty = Penalty::Abs);

/**
 * d(ofd_loss)/d(disparity) per pixel.
 *
 * The weight and the contributing set are held fixed. The derivative of a
 * residual with respect to its own disparity is -(1 + dF_R.x/dx at q); for
 * the absolute penalty the subgradient sign(r) is used (0 at r == 0).
 * Non-contributing pixels get 0.
 */
ScalarMap ofd_loss_grad(const OfdInputs& in, Penalty penalty = Penalty::Abs);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
};

/**
 * Central finite differences of ofd_loss against ofd_loss_grad.
 *
 * Weights stay at their unperturbed values on both sides of the difference.
 * Checks at most `max_pixels` contributing pixels (evenly strided). A pixel is
 * skipped when the perturbation changes the contributing set or when its
 * right correspondent lies within `step` of a column of F_R, where the
 * bilinear interpolant has a kink. Relative error is
 * |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
 */
GradCheckReport ofd_grad_check(const OfdInputs& in, Penalty penalty, double step = 1e-4,
                               std::size_t max_pixels = 256);

// Flips a forward flow (k-1 -> k) into an approximate backward flow by negation.
// Valid only for small motion; the exact inverse needs flow inversion.
FlowMap negate_flow(const FlowMap& flow);

}  // namespace disprefine
