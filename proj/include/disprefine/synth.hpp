#pragma once

#include <cstdint>
#include <vector>

#include "disprefine/grid.hpp"
#include "disprefine/io.hpp"
#include "disprefine/mask.hpp"

namespace disprefine {

// Axis-aligned rectangle in pixel coordinates; contains x0 <= x < x1, y0 <= y < y1.
struct Rect {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    bool contains(double x, double y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

/**
 * Two-layer rectified stereo sequence: a fronto-parallel background plane and
 * a nearer rectangle that translates by `translation` every frame.
 */
struct SceneSpec {
    int width = 64;
    int height = 48;
    double background_disparity = 4.0;
    double foreground_disparity = 12.0;
    Rect foreground_rect{24.0, 14.0, 44.0, 32.0};
    Vec2 translation{1.0, 0.5};
    int frames = 3;
    double noise_sigma = 0.25;
    double occlusion_corruption = 5.0;
    std::uint64_t seed = 42;
    CalibrationFile calib{1000.0, 4.0, 0.1};
};

// Throws DomainError when the spec is inconsistent.
void validate(const SceneSpec& spec);

struct HiddenAffine {
    double k = 1.0;
    double b = 0.0;
};

// Scale and shift relating inverse depth to disparity: disparity = k * inverse_depth + b.
// Deterministic in spec.seed; k in [0.5, 4], b in [-5, 5].
HiddenAffine hidden_affine(const SceneSpec& spec);

struct SceneFramePair {
    int index = 0;
    ScalarMap disparity_gt;        // left view
    ScalarMap disparity_right_gt;  // right view
    ScalarMap inverse_depth;       // (disparity_gt - b) / k
    ScalarMap coarse_disparity;    // gt + noise, plus corruption in the occlusion band
    ScalarMap coarse_disparity_right;
    FlowMap flow_left_bwd;   // frame index -> index - 1
    FlowMap flow_right_bwd;
    OcclusionMask occlusion_gt;
    CalibrationFile calib;
};

// Foreground rectangle of frame t.
Rect foreground_at(const SceneSpec& spec, int frame);

/**
 * Renders every frame of the scene.
 *
 * Noise is Gaussian with sigma noise_sigma on both coarse views; the left
 * coarse view additionally receives uniform noise in [-c, c] (c =
 * occlusion_corruption) on pixels of the occlusion band. Frame 0's backward
 * flows describe the motion from the (unrendered) frame -1.
 */
std::vector<SceneFramePair> generate_scene(const SceneSpec& spec);

}  // namespace disprefine
