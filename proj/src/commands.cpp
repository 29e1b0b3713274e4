#include "disprefine/commands.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "disprefine/errors.hpp"

namespace disprefine::cli {

using nlohmann::ordered_json;

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const DegenerateFitError*>(&e)) return kExitDegenerate;
    if (dynamic_cast<const EmptyDomainError*>(&e)) return kExitEmptyDomain;
    // I/O, format, dimension and domain errors all mean unusable inputs.
    return kExitIo;
}

std::string layout::frame_dir_name(int index) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "frame_%03d", index);
    return buf.data();
}

namespace {

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError(dir.string() + ": cannot create directory: " + ec.message());
    }
}

void write_json(const fs::path& path, const ordered_json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

ordered_json to_json(const AffineFit& f) {
    return {{"k", f.k}, {"b", f.b}, {"inlier_count", f.inlier_count}, {"rms_residual", f.rms_residual}};
}

ordered_json to_json(const MetricReport& r) {
    return {{"epe_px", r.epe_px},
            {"bad3_percent", r.bad3_percent},
            {"rmse_mm", r.rmse_mm},
            {"valid_pixels", r.valid_pixels},
            {"excluded_nonpositive", r.excluded_nonpositive}};
}

ordered_json to_json(const CompositeLossReport& r) {
    return {{"l1_refined", r.l1_refined}, {"l1_invdepth", r.l1_invdepth}, {"ofd", r.ofd},
            {"dice", r.dice},             {"wbce", r.wbce},               {"total", r.total}};
}

ordered_json to_json(const TiledAffineFit& fit) {
    ordered_json tiles = ordered_json::array();
    for (const auto& t : fit.tiles) {
        ordered_json jt = to_json(t.fit);
        jt["tile_x"] = t.tile_x;
        jt["tile_y"] = t.tile_y;
        jt["bounds"] = {t.x0, t.y0, t.x1, t.y1};
        jt["center"] = {t.center_x, t.center_y};
        jt["inherited_global"] = t.inherited_global;
        tiles.push_back(std::move(jt));
    }
    ordered_json j;
    j["tiles_x"] = fit.tiles_x;
    j["tiles_y"] = fit.tiles_y;
    j["global"] = fit.global ? to_json(*fit.global) : ordered_json(nullptr);
    j["tiles"] = std::move(tiles);
    return j;
}

ordered_json refine_flags(const RefineOptions& o) {
    return {{"tau", o.tau},
            {"fit", o.global_fit ? "global" : "tiled"},
            {"tiles_x", o.tiles_x},
            {"tiles_y", o.tiles_y},
            {"trim", o.trim},
            {"invert_mask", o.invert_mask}};
}

ordered_json ofd_json(const OfdResult& r, Penalty penalty) {
    return {{"loss", r.loss}, {"count", r.count}, {"penalty", std::string(to_string(penalty))}};
}

MetricReport mean_report(const std::vector<MetricReport>& reports) {
    MetricReport m;
    if (reports.empty()) return m;
    CompensatedSum epe_sum, bad_sum, rmse_sum;
    std::size_t valid = 0, excluded = 0;
    for (const auto& r : reports) {
        epe_sum.add(r.epe_px);
        bad_sum.add(r.bad3_percent);
        rmse_sum.add(r.rmse_mm);
        valid += r.valid_pixels;
        excluded += r.excluded_nonpositive;
    }
    const double n = static_cast<double>(reports.size());
    m.epe_px = epe_sum.value() / n;
    m.bad3_percent = bad_sum.value() / n;
    m.rmse_mm = rmse_sum.value() / n;
    m.valid_pixels = valid / reports.size();
    m.excluded_nonpositive = excluded / reports.size();
    return m;
}

// Runs job(i) for i in [0, n) on up to `threads` workers. The first failing index (lowest) is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& job) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (count == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(count);
        for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

std::string sha256_file(const fs::path& path) {
    const auto bytes = read_file(path);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw IoError(path.string() + ": hashing failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// lrc

LrcOutcome cmd_lrc(const LrcOptions& opts, std::ostream& log) {
    const ScalarMap left = read_pfm(opts.left);
    LrcOutcome out;
    if (opts.right && fs::exists(*opts.right)) {
        out.mask = lrc_mask(left, read_pfm(*opts.right), opts.tau);
    } else {
        if (opts.right) {
            log << "lrc: right disparity " << opts.right->string()
                << " not found; using forward-warp fallback\n";
        } else {
            log << "lrc: no right disparity given; using forward-warp fallback\n";
        }
        out.mask = lrc_mask_single(left, opts.tau);
        out.used_fallback = true;
    }
    ensure_dir(opts.out_dir);
    write_mask_png(out.mask, opts.out_dir / "mask_lrc.png");
    write_pfm(out.mask.map(), opts.out_dir / "mask_lrc.pfm");
    return out;
}

// ---------------------------------------------------------------------------
// refine

namespace {

// True when fuse() would give the refined inverse depth zero weight at every valid pixel.
bool depth_term_unused(const OcclusionMask& mask, FusionMode mode) {
    const double keep_coarse = mode == FusionMode::AsWritten ? 1.0 : 0.0;
    const ScalarMap& m = mask.map();
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.validity()[i] && m.values()[i] != keep_coarse) return false;
    }
    return true;
}

}  // namespace

RefineOutcome refine_frame(const ScalarMap& coarse, const ScalarMap& inverse_depth,
                           const std::optional<OcclusionMask>& mask, const std::optional<ScalarMap>& right,
                           const RefineOptions& opts) {
    RefineOutcome out;
    if (mask) {
        out.mask = *mask;
        out.mask_source = "file";
    } else if (right) {
        out.mask = lrc_mask(coarse, *right, opts.tau);
        out.mask_source = "lrc";
    } else {
        out.mask = lrc_mask_single(coarse, opts.tau);
        out.mask_source = "lrc-warp-fallback";
    }

    const FusionMode mode = opts.invert_mask ? FusionMode::InvertMask : FusionMode::AsWritten;
    try {
        if (opts.global_fit) {
            const AffineFit fit = fit_affine_global(inverse_depth, coarse, out.mask, opts.trim);
            out.fit = constant_fit_maps(coarse.width(), coarse.height(), fit);
        } else {
            out.fit = fit_affine_tiled(inverse_depth, coarse, out.mask, opts.tiles_x, opts.tiles_y, opts.trim);
        }
    } catch (const DegenerateFitError&) {
        if (!depth_term_unused(out.mask, mode)) throw;
        out.fit = TiledAffineFit{};
        out.fit.K = ScalarMap(coarse.width(), coarse.height(), 1.0);
        out.fit.B = ScalarMap(coarse.width(), coarse.height(), 0.0);
        out.fit_skipped = true;
    }
    out.refined_inv_depth = refine_inverse_depth(inverse_depth, out.fit.K, out.fit.B);
    out.refined = fuse(coarse, out.refined_inv_depth, out.mask, mode);
    return out;
}

RefineOutcome cmd_refine(const RefineOptions& opts, std::ostream& log) {
    const ScalarMap coarse = read_pfm(opts.coarse);
    const ScalarMap inverse_depth = read_pfm(opts.inverse_depth);
    std::optional<OcclusionMask> mask;
    std::optional<ScalarMap> right;
    if (opts.mask) {
        mask = read_mask_png(*opts.mask);
    } else if (opts.right) {
        right = read_pfm(*opts.right);
    }
    RefineOutcome out = refine_frame(coarse, inverse_depth, mask, right, opts);
    if (out.fit_skipped) {
        log << "refine: mask from " << out.mask_source << ", no unoccluded pixels; fit skipped, coarse kept\n";
    } else {
        log << "refine: mask from " << out.mask_source << ", " << out.fit.tiles.size() << " tile fit(s)\n";
    }

    ensure_dir(opts.out_dir);
    write_pfm(out.refined, opts.out_dir / "refined.pfm");
    write_pfm(out.refined_inv_depth, opts.out_dir / "refined_inv_depth.pfm");
    write_mask_png(out.mask, opts.out_dir / "mask_used.png");

    ordered_json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["flags"] = refine_flags(opts);
    j["mask_source"] = out.mask_source;
    j["fit_skipped"] = out.fit_skipped;
    j["fit"] = out.fit_skipped ? ordered_json(nullptr) : to_json(out.fit);
    write_json(opts.out_dir / "fit.json", j);
    return out;
}

// ---------------------------------------------------------------------------
// ofd

OfdOutcome cmd_ofd(const OfdOptions& opts, std::ostream& log) {
    OfdInputs in{read_pfm(opts.disparity), read_pfm(opts.previous_disparity), read_flo(opts.flow_left),
                 read_flo(opts.flow_right)};
    if (opts.forward_flows) {
        log << "ofd: negating forward flows (small-motion approximation)\n";
        in.flow_left = negate_flow(in.flow_left);
        in.flow_right = negate_flow(in.flow_right);
    }
    OfdOutcome out;
    out.result = ofd_loss(in, opts.penalty);
    ordered_json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["forward_flows"] = opts.forward_flows;
    j.update(ofd_json(out.result, opts.penalty));
    if (opts.grad_check) {
        out.grad_check = ofd_grad_check(in, opts.penalty);
        j["grad_check"] = {{"max_rel_error", out.grad_check->max_rel_error},
                           {"checked", out.grad_check->checked},
                           {"skipped", out.grad_check->skipped}};
        log << "ofd: gradient check max relative error " << out.grad_check->max_rel_error << " over "
            << out.grad_check->checked << " pixel(s)\n";
    }
    ensure_dir(opts.out_dir);
    write_pfm(out.result.residual, opts.out_dir / "ofd_residual.pfm");
    write_pfm(out.result.weight, opts.out_dir / "ofd_weight.pfm");
    write_json(opts.out_dir / "ofd.json", j);
    return out;
}

// ---------------------------------------------------------------------------
// eval

std::string metrics_csv_header() {
    return "frame_id,epe_px,bad3_percent,rmse_mm,valid_pixels,excluded_nonpositive";
}

std::string metrics_csv_row(const std::string& frame_id, const MetricReport& r) {
    return frame_id + "," + format_double(r.epe_px) + "," + format_double(r.bad3_percent) + "," +
           format_double(r.rmse_mm) + "," + std::to_string(r.valid_pixels) + "," +
           std::to_string(r.excluded_nonpositive);
}

namespace {

std::string metrics_csv(const std::vector<std::string>& ids, const std::vector<MetricReport>& reports,
                        const MetricReport& mean) {
    std::string csv = metrics_csv_header() + "\n";
    for (std::size_t i = 0; i < reports.size(); ++i) csv += metrics_csv_row(ids[i], reports[i]) + "\n";
    csv += metrics_csv_row("mean", mean) + "\n";
    return csv;
}

}  // namespace

EvalOutcome cmd_eval(const EvalOptions& opts, std::ostream& log) {
    if (opts.predictions.empty() || opts.predictions.size() != opts.ground_truths.size()) {
        throw DomainError("eval: need the same nonzero number of --pred and --gt files");
    }
    if (!opts.frame_ids.empty() && opts.frame_ids.size() != opts.predictions.size()) {
        throw DomainError("eval: --frame-id count must match --pred count");
    }
    const bool composite_any = opts.refined_inv_depth || opts.mask || opts.mask_lrc || opts.ofd_json;
    const bool composite_all = opts.refined_inv_depth && opts.mask && opts.mask_lrc && opts.ofd_json;
    if (composite_any && !composite_all) {
        throw DomainError("eval: composite loss needs --refined-inv-depth, --mask, --mask-lrc and --ofd-json");
    }
    if (composite_all && opts.predictions.size() != 1) {
        throw DomainError("eval: composite loss is evaluated for a single frame");
    }

    const CalibrationFile calib = read_calibration(opts.calibration);
    EvalOutcome out;
    for (std::size_t i = 0; i < opts.predictions.size(); ++i) {
        const ScalarMap pred = read_pfm(opts.predictions[i]);
        const ScalarMap gt = read_pfm(opts.ground_truths[i]);
        out.frame_ids.push_back(opts.frame_ids.empty() ? opts.predictions[i].stem().string() : opts.frame_ids[i]);
        out.reports.push_back(evaluate(pred, gt, calib));
    }
    out.mean = mean_report(out.reports);

    ensure_dir(opts.out_dir);
    write_text_atomic(opts.out_dir / "metrics.csv", metrics_csv(out.frame_ids, out.reports, out.mean));
    log << "eval: " << out.reports.size() << " frame(s), mean EPE " << out.mean.epe_px << " px\n";

    if (composite_all) {
        const auto raw = read_file(*opts.ofd_json);
        const auto ofd = ordered_json::parse(std::string(reinterpret_cast<const char*>(raw.data()), raw.size()),
                                             nullptr, false);
        if (ofd.is_discarded() || !ofd.contains("loss") || !ofd["loss"].is_number()) {
            throw FormatError(opts.ofd_json->string() + ": missing numeric 'loss'");
        }
        out.composite = composite_loss(read_pfm(opts.predictions.front()), read_pfm(*opts.refined_inv_depth),
                                       read_pfm(opts.ground_truths.front()), read_mask_png(*opts.mask),
                                       read_mask_png(*opts.mask_lrc), ofd["loss"].get<double>());
        write_json(opts.out_dir / "composite.json", to_json(*out.composite));
    }
    return out;
}

// ---------------------------------------------------------------------------
// pe / errmap / synth

PositionEmbedding cmd_pe(const PeOptions& opts, std::ostream& log) {
    PositionEmbedding pe = position_maps(opts.width, opts.height, opts.embedding);
    ensure_dir(opts.out_dir);
    for (std::size_t c = 0; c < pe.channel_count(); ++c) {
        write_pfm(pe.channel(c), opts.out_dir / (PositionEmbedding::channel_name(c) + ".pfm"));
    }
    log << "pe: wrote " << pe.channel_count() << " channel(s)\n";
    return pe;
}

ScalarMap cmd_errmap(const ErrmapOptions& opts, std::ostream& log) {
    std::vector<ScalarMap> preds;
    std::vector<ScalarMap> gts;
    for (const auto& p : opts.predictions) preds.push_back(read_pfm(p));
    for (const auto& p : opts.ground_truths) gts.push_back(read_pfm(p));
    ScalarMap heat = error_heatmap(preds, gts);
    ensure_dir(opts.out_dir);
    write_pfm(heat, opts.out_dir / "error_heatmap.pfm");
    write_gray_png(to_gray_minmax(heat), heat.width(), heat.height(), opts.out_dir / "error_heatmap.png");
    log << "errmap: averaged " << preds.size() << " pair(s)\n";
    return heat;
}

std::vector<SceneFramePair> cmd_synth(const SynthOptions& opts, std::ostream& log) {
    auto frames = generate_scene(opts.spec);
    const HiddenAffine affine = hidden_affine(opts.spec);
    ensure_dir(opts.out_dir);
    write_calibration(opts.spec.calib, opts.out_dir / layout::kCalibration);
    const SceneSpec& s = opts.spec;
    ordered_json scene = {
        {"width", s.width},
        {"height", s.height},
        {"background_disparity", s.background_disparity},
        {"foreground_disparity", s.foreground_disparity},
        {"foreground_rect", {s.foreground_rect.x0, s.foreground_rect.y0, s.foreground_rect.x1, s.foreground_rect.y1}},
        {"per_frame_translation", {s.translation.x, s.translation.y}},
        {"frames", s.frames},
        {"noise_sigma", s.noise_sigma},
        {"occlusion_corruption", s.occlusion_corruption},
        {"seed", s.seed},
        {"hidden_affine", {{"k", affine.k}, {"b", affine.b}}},
    };
    write_json(opts.out_dir / layout::kScene, scene);
    for (const auto& f : frames) {
        const fs::path dir = opts.out_dir / layout::frame_dir_name(f.index);
        ensure_dir(dir);
        write_pfm(f.coarse_disparity, dir / layout::kCoarseLeft);
        write_pfm(f.coarse_disparity_right, dir / layout::kCoarseRight);
        write_pfm(f.inverse_depth, dir / layout::kInverseDepth);
        write_flo(f.flow_left_bwd, dir / layout::kFlowLeft);
        write_flo(f.flow_right_bwd, dir / layout::kFlowRight);
        write_pfm(f.disparity_gt, dir / layout::kGtLeft);
        write_pfm(f.disparity_right_gt, dir / layout::kGtRight);
        write_mask_png(f.occlusion_gt, dir / layout::kOcclusionGt);
    }
    log << "synth: wrote " << frames.size() << " frame(s) to " << opts.out_dir.string() << "\n";
    return frames;
}

// ---------------------------------------------------------------------------
// pipeline

namespace {

struct IngestedFrame {
    int index = 0;
    fs::path dir;
    ScalarMap coarse;
    std::optional<ScalarMap> coarse_right;
    ScalarMap inverse_depth;
    std::optional<FlowMap> flow_left;
    std::optional<FlowMap> flow_right;
    std::optional<ScalarMap> gt;
    std::optional<ScalarMap> gt_right;
    std::optional<OcclusionMask> occlusion_gt;
};

template <typename T, typename Reader>
std::optional<T> read_optional(const fs::path& p, Reader reader) {
    if (!fs::exists(p)) return std::nullopt;
    return reader(p);
}

std::vector<fs::path> frame_dirs(const fs::path& root) {
    std::vector<fs::path> dirs;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(root, ec)) {
        if (entry.is_directory() && entry.path().filename().string().rfind("frame_", 0) == 0) {
            dirs.push_back(entry.path());
        }
    }
    if (ec) {
        throw IoError(root.string() + ": cannot list directory: " + ec.message());
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

IngestedFrame ingest(const fs::path& dir, int index) {
    IngestedFrame f;
    f.index = index;
    f.dir = dir;
    f.coarse = read_pfm(dir / layout::kCoarseLeft);
    f.inverse_depth = read_pfm(dir / layout::kInverseDepth);
    f.coarse_right = read_optional<ScalarMap>(dir / layout::kCoarseRight, read_pfm);
    f.flow_left = read_optional<FlowMap>(dir / layout::kFlowLeft, read_flo);
    f.flow_right = read_optional<FlowMap>(dir / layout::kFlowRight, read_flo);
    f.gt = read_optional<ScalarMap>(dir / layout::kGtLeft, read_pfm);
    f.gt_right = read_optional<ScalarMap>(dir / layout::kGtRight, read_pfm);
    f.occlusion_gt = read_optional<OcclusionMask>(dir / layout::kOcclusionGt, read_mask_png);
    return f;
}

struct FrameResult {
    RefineOutcome refine;
    std::optional<MetricReport> refined_metrics;
    std::optional<MetricReport> coarse_metrics;
    std::optional<double> band_epe_coarse;
    std::optional<double> band_epe_refined;
    std::optional<OfdResult> ofd;
    std::optional<CompositeLossReport> composite;
};

}  // namespace

PipelineOutcome cmd_pipeline(const PipelineOptions& opts, std::ostream& log) {
    ensure_dir(opts.out_dir);
    fs::path input = opts.input_dir.value_or(opts.out_dir / "data");
    if (!opts.input_dir) {
        cmd_synth({opts.scene, input}, log);
    }
    const auto dirs = frame_dirs(input);
    if (dirs.empty()) {
        throw IoError(input.string() + ": no frame_* directories");
    }
    const fs::path calib_path = input / layout::kCalibration;
    const std::optional<CalibrationFile> calib =
        fs::exists(calib_path) ? std::optional(read_calibration(calib_path)) : std::nullopt;

    std::vector<IngestedFrame> frames(dirs.size());
    parallel_for(dirs.size(), opts.threads,
                 [&](std::size_t i) { frames[i] = ingest(dirs[i], static_cast<int>(i)); });

    std::vector<FrameResult> results(frames.size());
    std::mutex log_mutex;
    // Stage 1: per-frame refinement and metrics.
    parallel_for(frames.size(), opts.threads, [&](std::size_t i) {
        const IngestedFrame& f = frames[i];
        FrameResult& r = results[i];
        r.refine = refine_frame(f.coarse, f.inverse_depth, std::nullopt, f.coarse_right, opts.refine);
        const fs::path out = opts.out_dir / "frames" / layout::frame_dir_name(f.index);
        ensure_dir(out);
        write_pfm(r.refine.refined, out / "refined.pfm");
        write_pfm(r.refine.refined_inv_depth, out / "refined_inv_depth.pfm");
        write_mask_png(r.refine.mask, out / "mask_lrc.png");
        write_pfm(r.refine.mask.map(), out / "mask_lrc.pfm");
        if (f.gt && calib) {
            r.refined_metrics = evaluate(r.refine.refined, *f.gt, *calib);
            r.coarse_metrics = evaluate(f.coarse, *f.gt, *calib);
        }
        if (f.gt && f.occlusion_gt) {
            r.band_epe_coarse = masked_epe(f.coarse, *f.gt, *f.occlusion_gt);
            r.band_epe_refined = masked_epe(r.refine.refined, *f.gt, *f.occlusion_gt);
        }
        std::lock_guard lock(log_mutex);
        log << "pipeline: " << layout::frame_dir_name(f.index) << " refined (mask " << r.refine.mask_source
            << ")\n";
    });

    // Stage 2: temporal consistency between consecutive refined frames, then the composite loss.
    parallel_for(frames.size(), opts.threads, [&](std::size_t i) {
        if (i == 0) return;
        const IngestedFrame& f = frames[i];
        if (!f.flow_left || !f.flow_right) return;
        FrameResult& r = results[i];
        const OfdInputs in{r.refine.refined, results[i - 1].refine.refined, *f.flow_left, *f.flow_right};
        r.ofd = ofd_loss(in, opts.penalty);
        const fs::path out = opts.out_dir / "frames" / layout::frame_dir_name(f.index);
        write_pfm(r.ofd->residual, out / "ofd_residual.pfm");
        write_pfm(r.ofd->weight, out / "ofd_weight.pfm");
        if (f.gt && f.gt_right) {
            const OcclusionMask reference = lrc_mask(*f.gt, *f.gt_right, opts.refine.tau);
            r.composite = composite_loss(r.refine.refined, r.refine.refined_inv_depth, *f.gt, r.refine.mask,
                                         reference, r.ofd->loss);
        }
    });

    // Manifest. Everything under "metrics" depends only on inputs and numeric flags.
    ordered_json frames_json = ordered_json::array();
    std::vector<MetricReport> refined_reports;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const FrameResult& r = results[i];
        ordered_json jf;
        jf["frame"] = layout::frame_dir_name(frames[i].index);
        jf["mask_source"] = r.refine.mask_source;
        jf["fit"] = r.refine.fit_skipped ? ordered_json(nullptr) : to_json(r.refine.fit);
        if (r.refined_metrics) {
            jf["refined"] = to_json(*r.refined_metrics);
            jf["coarse"] = to_json(*r.coarse_metrics);
            refined_reports.push_back(*r.refined_metrics);
            ids.push_back(layout::frame_dir_name(frames[i].index));
        }
        if (r.band_epe_refined) {
            jf["occlusion_band_epe"] = {{"coarse", *r.band_epe_coarse}, {"refined", *r.band_epe_refined}};
        }
        if (r.ofd) jf["ofd"] = ofd_json(*r.ofd, opts.penalty);
        if (r.composite) jf["composite"] = to_json(*r.composite);
        frames_json.push_back(std::move(jf));
    }
    ordered_json metrics;
    metrics["frames"] = std::move(frames_json);
    if (!refined_reports.empty()) {
        const MetricReport mean = mean_report(refined_reports);
        metrics["summary"] = to_json(mean);
        write_text_atomic(opts.out_dir / "metrics.csv", metrics_csv(ids, refined_reports, mean));
    }

    ordered_json inputs = ordered_json::object();
    for (const auto& dir : dirs) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            inputs[(dir.filename() / entry.path().filename()).generic_string()] = sha256_file(entry.path());
        }
    }
    if (calib) inputs[layout::kCalibration] = sha256_file(calib_path);
    // directory_iterator order is unspecified; sort keys for stable output.
    ordered_json sorted_inputs = ordered_json::object();
    {
        std::vector<std::string> keys;
        for (const auto& [k, v] : inputs.items()) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        for (const auto& k : keys) sorted_inputs[k] = inputs[k];
    }

    ordered_json flags = refine_flags(opts.refine);
    flags["penalty"] = std::string(to_string(opts.penalty));
    flags["threads"] = opts.threads;
    flags["input"] = opts.input_dir ? opts.input_dir->string() : std::string("synthesized");
    if (!opts.input_dir) flags["seed"] = opts.scene.seed;

    ordered_json manifest;
    manifest["tool"] = kToolName;
    manifest["version"] = kToolVersion;
    manifest["flags"] = std::move(flags);
    manifest["inputs"] = std::move(sorted_inputs);
    manifest["metrics"] = metrics;
    const fs::path manifest_path = opts.out_dir / "manifest.json";
    write_json(manifest_path, manifest);
    log << "pipeline: manifest written to " << manifest_path.string() << "\n";
    return {manifest_path, metrics.dump()};
}

}  // namespace disprefine::cli
