#pragma once

// Test-only helpers: seeded random rasters, scratch directories, and oracles
// that re-derive expected values without calling the code under test.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "disprefine/grid.hpp"
#include "disprefine/mask.hpp"

namespace testsupport {

using disprefine::FlowMap;
using disprefine::OcclusionMask;
using disprefine::ScalarMap;

inline ScalarMap random_map(std::mt19937_64& rng, int w, int h, double lo, double hi,
                            double invalid_fraction = 0.0) {
    std::uniform_real_distribution<double> v(lo, hi);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ScalarMap m(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            m.set(x, y, v(rng));
            if (u(rng) < invalid_fraction) m.invalidate(x, y);
        }
    }
    return m;
}

// Values representable in float32, so file round trips are exact.
inline ScalarMap random_float_map(std::mt19937_64& rng, int w, int h, double lo, double hi) {
    ScalarMap m = random_map(rng, w, h, lo, hi);
    for (auto& v : m.values()) v = static_cast<double>(static_cast<float>(v));
    return m;
}

inline OcclusionMask random_mask(std::mt19937_64& rng, int w, int h, bool binary) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ScalarMap m(w, h);
    for (auto& v : m.values()) v = binary ? (u(rng) < 0.3 ? 1.0 : 0.0) : u(rng);
    return OcclusionMask(m);
}

inline FlowMap random_flow(std::mt19937_64& rng, int w, int h, double mag) {
    std::uniform_real_distribution<double> v(-mag, mag);
    FlowMap f(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f.set(x, y, {v(rng), v(rng)});
    }
    return f;
}

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& name) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("disprefine_test_" + name + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

// Explicit four-tap bilinear oracle.
inline bool oracle_bilinear(const ScalarMap& m, double px, double py, double& out) {
    if (px < 0 || py < 0 || px > m.width() - 1 || py > m.height() - 1) return false;
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const double ax = px - x0;
    const double ay = py - y0;
    const double w00 = (1 - ax) * (1 - ay);
    const double w10 = ax * (1 - ay);
    const double w01 = (1 - ax) * ay;
    const double w11 = ax * ay;
    double acc = 0.0;
    const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
    const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
    const double ws[4] = {w00, w10, w01, w11};
    for (int i = 0; i < 4; ++i) {
        if (ws[i] == 0.0) continue;
        if (!m.valid(xs[i], ys[i])) return false;
        acc += ws[i] * m.value(xs[i], ys[i]);
    }
    out = acc;
    return true;
}

}  // namespace testsupport
