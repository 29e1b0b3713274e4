#include "disprefine/synth.hpp"

#include <cmath>
#include <random>
#include <string>

#include "disprefine/errors.hpp"

namespace disprefine {

namespace {

// Independent RNG streams per (seed, frame, purpose).
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t frame, std::uint64_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(purpose)};
    return std::mt19937_64(seq);
}

constexpr std::uint64_t kAffineStream = 0xAFF1;
constexpr std::uint64_t kLeftNoiseStream = 1;
constexpr std::uint64_t kRightNoiseStream = 2;
constexpr std::uint64_t kCorruptionStream = 3;

}  // namespace

void validate(const SceneSpec& spec) {
    if (spec.width < 2 || spec.height < 2) {
        throw DomainError("scene: width and height must be >= 2");
    }
    if (spec.frames < 2) {
        throw DomainError("scene: frames must be >= 2");
    }
    if (!(spec.background_disparity > 0.0)) {
        throw DomainError("scene: background disparity must be positive");
    }
    if (!(spec.foreground_disparity > spec.background_disparity)) {
        throw DomainError("scene: foreground disparity must exceed background disparity");
    }
    if (!(spec.noise_sigma >= 0.0) || !(spec.occlusion_corruption >= 0.0)) {
        throw DomainError("scene: noise levels must be non-negative");
    }
    validate(spec.calib);
    for (int t = 0; t < spec.frames; ++t) {
        const Rect r = foreground_at(spec, t);
        if (!(r.x0 >= 0.0 && r.y0 >= 0.0 && r.x1 <= spec.width && r.y1 <= spec.height && r.x0 < r.x1 &&
              r.y0 < r.y1)) {
            throw DomainError("scene: foreground rectangle leaves the image at frame " + std::to_string(t));
        }
    }
}

HiddenAffine hidden_affine(const SceneSpec& spec) {
    auto rng = stream(spec.seed, 0, kAffineStream);
    std::uniform_real_distribution<double> k_dist(0.5, 4.0);
    std::uniform_real_distribution<double> b_dist(-5.0, 5.0);
    HiddenAffine a;
    a.k = k_dist(rng);
    a.b = b_dist(rng);
    return a;
}

Rect foreground_at(const SceneSpec& spec, int frame) {
    const Rect& r = spec.foreground_rect;
    const double dx = frame * spec.translation.x;
    const double dy = frame * spec.translation.y;
    return {r.x0 + dx, r.y0 + dy, r.x1 + dx, r.y1 + dy};
}

std::vector<SceneFramePair> generate_scene(const SceneSpec& spec) {
    validate(spec);
    const HiddenAffine affine = hidden_affine(spec);
    const int w = spec.width;
    const int h = spec.height;
    const double d_bg = spec.background_disparity;
    const double d_fg = spec.foreground_disparity;
    const Vec2 back{-spec.translation.x, -spec.translation.y};

    std::vector<SceneFramePair> frames;
    frames.reserve(static_cast<std::size_t>(spec.frames));
    for (int t = 0; t < spec.frames; ++t) {
        const Rect fg = foreground_at(spec, t);
        // Right-view pixel x' shows the foreground when its left correspondent x' + d_fg does.
        auto right_is_fg = [&](double x, double y) { return fg.contains(x + d_fg, y); };

        SceneFramePair f;
        f.index = t;
        f.calib = spec.calib;
        f.disparity_gt = ScalarMap(w, h);
        f.disparity_right_gt = ScalarMap(w, h);
        f.inverse_depth = ScalarMap(w, h);
        f.flow_left_bwd = FlowMap(w, h);
        f.flow_right_bwd = FlowMap(w, h);
        ScalarMap occlusion(w, h);

        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const bool left_fg = fg.contains(x, y);
                const double d = left_fg ? d_fg : d_bg;
                f.disparity_gt.set(x, y, d);
                f.inverse_depth.set(x, y, (d - affine.b) / affine.k);
                f.flow_left_bwd.set(x, y, left_fg ? back : Vec2{});

                const bool rfg = right_is_fg(x, y);
                f.disparity_right_gt.set(x, y, rfg ? d_fg : d_bg);
                f.flow_right_bwd.set(x, y, rfg ? back : Vec2{});

                // Out of frame, or a background point hidden behind the foreground in the right view.
                const double xr = x - d;
                const bool occluded = xr < 0.0 || (!left_fg && right_is_fg(xr, y));
                occlusion.set(x, y, occluded ? 1.0 : 0.0);
            }
        }
        f.occlusion_gt = OcclusionMask(occlusion);

        f.coarse_disparity = f.disparity_gt;
        f.coarse_disparity_right = f.disparity_right_gt;
        if (spec.noise_sigma > 0.0) {
            auto left_rng = stream(spec.seed, static_cast<std::uint64_t>(t), kLeftNoiseStream);
            auto right_rng = stream(spec.seed, static_cast<std::uint64_t>(t), kRightNoiseStream);
            // One distribution per engine: normal_distribution caches its second variate.
            std::normal_distribution<double> left_noise(0.0, spec.noise_sigma);
            std::normal_distribution<double> right_noise(0.0, spec.noise_sigma);
            for (auto& v : f.coarse_disparity.values()) v += left_noise(left_rng);
            for (auto& v : f.coarse_disparity_right.values()) v += right_noise(right_rng);
        }
        if (spec.occlusion_corruption > 0.0) {
            auto rng = stream(spec.seed, static_cast<std::uint64_t>(t), kCorruptionStream);
            std::uniform_real_distribution<double> corrupt(-spec.occlusion_corruption,
                                                           spec.occlusion_corruption);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    if (occlusion.value(x, y) == 1.0) {
                        f.coarse_disparity.set(x, y, f.coarse_disparity.value(x, y) + corrupt(rng));
                    }
                }
            }
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

}  // namespace disprefine
