#include "disprefine/flow_consistency.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "disprefine/errors.hpp"

namespace disprefine {

namespace {

void check_dims(const OfdInputs& in) {
    const ScalarMap& s = in.disparity;
    require_same_shape(s, in.previous_disparity, "ofd");
    if (!in.flow_left.same_shape(s) || !in.flow_right.same_shape(s)) {
        throw DimensionError("ofd: flow dimensions (" + std::to_string(in.flow_left.width()) + "x" +
                             std::to_string(in.flow_left.height()) + ", " +
                             std::to_string(in.flow_right.width()) + "x" +
                             std::to_string(in.flow_right.height()) + ") do not match disparity " +
                             std::to_string(s.width()) + "x" + std::to_string(s.height()));
    }
}

struct PixelTerms {
    double residual;
    double dy_flow;
    PixelPoint q;
};

std::optional<PixelTerms> pixel_terms(const OfdInputs& in, int x, int y) {
    if (!in.disparity.valid(x, y) || !in.flow_left.valid(x, y)) return std::nullopt;
    const double s = in.disparity.value(x, y);
    if (!(s > 0.0)) return std::nullopt;

    const PixelPoint p{static_cast<double>(x), static_cast<double>(y)};
    const PixelPoint q{p.x - s, p.y};
    const Vec2 fl = in.flow_left.value(x, y);
    const auto fr = bilinear_sample(in.flow_right, q);
    if (!fr) return std::nullopt;

    const PixelPoint prev_left{p.x + fl.x, p.y + fl.y};
    const PixelPoint prev_right{q.x + fr->x, q.y + fr->y};
    const auto s_prev = bilinear_sample(in.previous_disparity, prev_left);
    if (!s_prev) return std::nullopt;

    const double dx_flow = (p.x - prev_left.x) - (q.x - prev_right.x);
    const double dy_flow = (p.y - prev_left.y) - (q.y - prev_right.y);
    const double dx_disparity = s - *s_prev;
    return PixelTerms{dx_flow - dx_disparity, dy_flow, q};
}

double penalty_value(Penalty p, double r) { return p == Penalty::Abs ? std::fabs(r) : r * r; }

double penalty_slope(Penalty p, double r) {
    if (p == Penalty::Square) return 2.0 * r;
    return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
}

}  // namespace

std::string_view to_string(Penalty p) { return p == Penalty::Abs ? "abs" : "square"; }

Penalty parse_penalty(std::string_view s) {
    if (s == "abs") return Penalty::Abs;
    if (s == "square") return Penalty::Square;
    throw DomainError("unknown penalty '" + std::string(s) + "' (expected abs or square)");
}

OfdResidual ofd_residual(const OfdInputs& in) {
    check_dims(in);
    const int w = in.disparity.width();
    const int h = in.disparity.height();
    OfdResidual out{ScalarMap(w, h, 0.0, false), ScalarMap(w, h, 0.0, false)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto t = pixel_terms(in, x, y);
            if (!t) continue;
            out.residual.set(x, y, t->residual);
            out.dy_flow.set(x, y, t->dy_flow);
        }
    }
    return out;
}

double adaptive_weight(double dy_flow) { return std::clamp(1.0 - dy_flow * dy_flow, 0.0, 1.0); }

ScalarMap adaptive_weight(const ScalarMap& dy_flow) {
    ScalarMap w(dy_flow.width(), dy_flow.height(), 0.0, false);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!dy_flow.validity()[i]) continue;
        w.values()[i] = adaptive_weight(dy_flow.values()[i]);
        w.validity()[i] = 1;
    }
    return w;
}

OfdResult ofd_loss(const OfdInputs& in, Penalty penalty) {
    auto [residual, dy_flow] = ofd_residual(in);
    OfdResult out;
    out.weight = adaptive_weight(dy_flow);
    double sum = 0.0;
    for (std::size_t i = 0; i < residual.size(); ++i) {
        if (!residual.validity()[i]) continue;
        sum += out.weight.values()[i] * penalty_value(penalty, residual.values()[i]);
        ++out.count;
    }
    out.loss = out.count > 0 ? sum / static_cast<double>(out.count) : 0.0;
    out.residual = std::move(residual);
    return out;
}

ScalarMap ofd_loss_grad(const OfdInputs& in, Penalty penalty) {
    check_dims(in);
    const int w = in.disparity.width();
    const int h = in.disparity.height();
    const ScalarMap right_dx = in.flow_right.dx_map();

    ScalarMap grad(w, h, 0.0, true);
    std::size_t count = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto t = pixel_terms(in, x, y);
            if (!t) continue;
            ++count;
            // An invalid cell corner with zero interpolation weight leaves the slope undefined; use 0.
            const auto g = cell_gradient(right_dx, t->q);
            const double dflow_dq = g ? g->d_dx : 0.0;
            // dq.x/ds = -1, and the disparity term enters with slope -1.
            const double dr_ds = -dflow_dq - 1.0;
            grad.set(x, y, adaptive_weight(t->dy_flow) * penalty_slope(penalty, t->residual) * dr_ds);
        }
    }
    if (count > 0) {
        for (auto& v : grad.values()) v /= static_cast<double>(count);
    }
    return grad;
}

GradCheckReport ofd_grad_check(const OfdInputs& in, Penalty penalty, double step, std::size_t max_pixels) {
    if (!(step > 0.0)) {
        throw DomainError("ofd_grad_check: step must be positive");
    }
    const ScalarMap analytic = ofd_loss_grad(in, penalty);
    const OfdResult base = ofd_loss(in, penalty);

    std::vector<std::size_t> contributing;
    for (std::size_t i = 0; i < base.residual.size(); ++i) {
        if (base.residual.validity()[i]) contributing.push_back(i);
    }
    const std::size_t stride =
        max_pixels == 0 ? 1 : std::max<std::size_t>(1, (contributing.size() + max_pixels - 1) / max_pixels);

    GradCheckReport report;
    OfdInputs probe = in;
    const int w = in.disparity.width();
    for (std::size_t n = 0; n < contributing.size(); n += stride) {
        const std::size_t i = contributing[n];
        const int x = static_cast<int>(i % static_cast<std::size_t>(w));
        const double s = in.disparity.values()[i];
        const double qx = x - s;
        if (std::fabs(qx - std::round(qx)) <= step) {
            ++report.skipped;
            continue;
        }
        probe.disparity.values()[i] = s + step;
        const OfdResult plus = ofd_loss(probe, penalty);
        probe.disparity.values()[i] = s - step;
        const OfdResult minus = ofd_loss(probe, penalty);
        probe.disparity.values()[i] = s;
        if (plus.count != base.count || minus.count != base.count ||
            !plus.residual.validity()[i] || !minus.residual.validity()[i]) {
            ++report.skipped;
            continue;
        }
        // The weight is held at its unperturbed value, matching the analytic derivative.
        const double wi = base.weight.values()[i];
        const double numeric = wi *
                               (penalty_value(penalty, plus.residual.values()[i]) -
                                penalty_value(penalty, minus.residual.values()[i])) /
                               (2.0 * step * static_cast<double>(base.count));
        const double a = analytic.values()[i];
        const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-6});
        report.max_rel_error = std::max(report.max_rel_error, std::fabs(a - numeric) / denom);
        ++report.checked;
    }
    return report;
}

FlowMap negate_flow(const FlowMap& flow) {
    FlowMap out(flow.width(), flow.height(), {}, false);
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
            if (!flow.valid(x, y)) continue;
            const Vec2 v = flow.value(x, y);
            out.set(x, y, {-v.x, -v.y});
        }
    }
    return out;
}

}  // namespace disprefine
