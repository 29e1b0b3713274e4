// disprefine: occlusion-aware stereo disparity refinement and evaluation.

#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "disprefine/commands.hpp"
#include "disprefine/errors.hpp"

namespace {

using namespace disprefine;
using namespace disprefine::cli;

void add_refine_flags(CLI::App* cmd, RefineOptions& o) {
    cmd->add_option("--tau", o.tau, "LRC threshold in pixels")->check(CLI::PositiveNumber);
    cmd->add_flag("--global", o.global_fit, "Single global affine fit instead of tiles");
    cmd->add_option("--tiles-x", o.tiles_x, "Tile columns for the affine fit")->check(CLI::PositiveNumber);
    cmd->add_option("--tiles-y", o.tiles_y, "Tile rows for the affine fit")->check(CLI::PositiveNumber);
    cmd->add_option("--trim", o.trim, "Fraction of largest residuals dropped per re-fit round")
        ->check(CLI::Range(0.0, 0.4999999));
    cmd->add_flag("--invert-mask", o.invert_mask,
                  "Blend as (1-M)*S + M*D so depth guidance replaces occluded pixels");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Occlusion-aware disparity refinement with monocular inverse-depth guidance"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Suppress progress messages");

    // lrc
    LrcOptions lrc;
    std::string lrc_right;
    auto* c_lrc = app.add_subcommand("lrc", "Occlusion mask from the left-right consistency check");
    c_lrc->add_option("--left", lrc.left, "Left disparity (PFM)")->required();
    c_lrc->add_option("--right", lrc_right, "Right disparity (PFM); warp fallback when absent");
    c_lrc->add_option("--tau", lrc.tau, "Consistency threshold in pixels")->check(CLI::PositiveNumber);
    c_lrc->add_option("-o,--out", lrc.out_dir, "Output directory")->required();

    // refine
    RefineOptions refine;
    std::string refine_mask, refine_right;
    auto* c_refine = app.add_subcommand("refine", "Refine a coarse disparity with inverse-depth guidance");
    c_refine->add_option("--coarse", refine.coarse, "Coarse left disparity (PFM)")->required();
    c_refine->add_option("--inv-depth", refine.inverse_depth, "Monocular inverse depth (PFM)")->required();
    c_refine->add_option("--mask", refine_mask, "Occlusion mask (8-bit PNG); LRC is run when absent");
    c_refine->add_option("--right", refine_right, "Right disparity for the LRC check (PFM)");
    add_refine_flags(c_refine, refine);
    c_refine->add_option("-o,--out", refine.out_dir, "Output directory")->required();

    // ofd
    OfdOptions ofd;
    std::string ofd_penalty = "abs";
    auto* c_ofd = app.add_subcommand("ofd", "Optical-flow difference loss between two frames");
    c_ofd->add_option("--disp", ofd.disparity, "Refined disparity of frame k (PFM)")->required();
    c_ofd->add_option("--prev-disp", ofd.previous_disparity, "Refined disparity of frame k-1 (PFM)")->required();
    c_ofd->add_option("--flow-left", ofd.flow_left, "Left backward flow k -> k-1 (.flo)")->required();
    c_ofd->add_option("--flow-right", ofd.flow_right, "Right backward flow k -> k-1 (.flo)")->required();
    c_ofd->add_option("--penalty", ofd_penalty, "abs or square")->check(CLI::IsMember({"abs", "square"}));
    c_ofd->add_flag("--forward-flows", ofd.forward_flows, "Flows are k-1 -> k; negate them");
    c_ofd->add_flag("--grad-check", ofd.grad_check, "Compare the analytic gradient with finite differences");
    c_ofd->add_option("-o,--out", ofd.out_dir, "Output directory")->required();

    // eval
    EvalOptions eval;
    std::string eval_inv, eval_mask, eval_mask_lrc, eval_ofd;
    auto* c_eval = app.add_subcommand("eval", "EPE / Bad3 / depth RMSE per frame");
    c_eval->add_option("--pred", eval.predictions, "Predicted disparity (PFM), repeatable")->required();
    c_eval->add_option("--gt", eval.ground_truths, "Ground-truth disparity (PFM), repeatable")->required();
    c_eval->add_option("--frame-id", eval.frame_ids, "Row label per frame, repeatable");
    c_eval->add_option("--calib", eval.calibration, "Calibration file")->required();
    c_eval->add_option("--refined-inv-depth", eval_inv, "Composite loss: refined inverse depth (PFM)");
    c_eval->add_option("--mask", eval_mask, "Composite loss: predicted mask (PNG)");
    c_eval->add_option("--mask-lrc", eval_mask_lrc, "Composite loss: reference LRC mask (PNG)");
    c_eval->add_option("--ofd-json", eval_ofd, "Composite loss: ofd.json from the ofd command");
    c_eval->add_option("-o,--out", eval.out_dir, "Output directory")->required();

    // pe
    PeOptions pe;
    auto* c_pe = app.add_subcommand("pe", "Dump sinusoidal position maps");
    c_pe->add_option("--width", pe.width, "Width in pixels")->required()->check(CLI::PositiveNumber);
    c_pe->add_option("--height", pe.height, "Height in pixels")->required()->check(CLI::PositiveNumber);
    c_pe->add_option("--n-freq", pe.embedding.n_freq, "Frequencies per axis")->check(CLI::PositiveNumber);
    c_pe->add_option("--base", pe.embedding.base, "Frequency base (> 1)");
    c_pe->add_flag("--normalize", pe.embedding.normalize, "Use x / width and y / height");
    c_pe->add_option("-o,--out", pe.out_dir, "Output directory")->required();

    // errmap
    ErrmapOptions errmap;
    auto* c_err = app.add_subcommand("errmap", "Mean absolute error heatmap over a set of frames");
    c_err->add_option("--pred", errmap.predictions, "Predicted disparity (PFM), repeatable")->required();
    c_err->add_option("--gt", errmap.ground_truths, "Ground-truth disparity (PFM), repeatable")->required();
    c_err->add_option("-o,--out", errmap.out_dir, "Output directory")->required();

    // synth
    SynthOptions synth;
    auto add_scene_flags = [](CLI::App* cmd, SceneSpec& s) {
        cmd->add_option("--width", s.width, "Image width");
        cmd->add_option("--height", s.height, "Image height");
        cmd->add_option("--bg-disp", s.background_disparity, "Background disparity (px)");
        cmd->add_option("--fg-disp", s.foreground_disparity, "Foreground disparity (px)");
        cmd->add_option("--rect-x0", s.foreground_rect.x0, "Foreground rectangle left");
        cmd->add_option("--rect-y0", s.foreground_rect.y0, "Foreground rectangle top");
        cmd->add_option("--rect-x1", s.foreground_rect.x1, "Foreground rectangle right (exclusive)");
        cmd->add_option("--rect-y1", s.foreground_rect.y1, "Foreground rectangle bottom (exclusive)");
        cmd->add_option("--tx", s.translation.x, "Foreground motion per frame, x (px)");
        cmd->add_option("--ty", s.translation.y, "Foreground motion per frame, y (px)");
        cmd->add_option("--frames", s.frames, "Number of frames (>= 2)");
        cmd->add_option("--noise", s.noise_sigma, "Gaussian noise sigma on coarse disparity (px)");
        cmd->add_option("--corruption", s.occlusion_corruption, "Uniform corruption in the occlusion band (px)");
        cmd->add_option("--seed", s.seed, "Random seed");
        cmd->add_option("--focal", s.calib.focal_px, "Focal length (px)");
        cmd->add_option("--baseline", s.calib.baseline_mm, "Baseline (mm)");
    };
    auto* c_synth = app.add_subcommand("synth", "Write a synthetic two-layer stereo sequence");
    add_scene_flags(c_synth, synth.spec);
    c_synth->add_option("-o,--out", synth.out_dir, "Output directory")->required();

    // pipeline
    PipelineOptions pipeline;
    std::string pipeline_input, pipeline_penalty = "abs";
    pipeline.threads = std::max(1u, std::thread::hardware_concurrency());
    auto* c_pipe = app.add_subcommand("pipeline", "lrc -> refine -> ofd -> eval over a dataset directory");
    c_pipe->add_option("--input", pipeline_input, "Dataset directory; synthesized when absent");
    add_scene_flags(c_pipe, pipeline.scene);
    add_refine_flags(c_pipe, pipeline.refine);
    c_pipe->add_option("--penalty", pipeline_penalty, "abs or square")->check(CLI::IsMember({"abs", "square"}));
    c_pipe->add_option("--threads", pipeline.threads, "Worker threads for frame-level parallelism")
        ->check(CLI::PositiveNumber);
    c_pipe->add_option("-o,--out", pipeline.out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    std::ostringstream sink;
    std::ostream& log = quiet ? static_cast<std::ostream&>(sink) : std::clog;
    try {
        if (c_lrc->parsed()) {
            if (!lrc_right.empty()) lrc.right = lrc_right;
            const auto out = cmd_lrc(lrc, log);
            log << "lrc: " << (out.used_fallback ? "warp fallback" : "left/right pair") << "\n";
        } else if (c_refine->parsed()) {
            if (!refine_mask.empty()) refine.mask = refine_mask;
            if (!refine_right.empty()) refine.right = refine_right;
            cmd_refine(refine, log);
        } else if (c_ofd->parsed()) {
            ofd.penalty = parse_penalty(ofd_penalty);
            const auto out = cmd_ofd(ofd, log);
            std::cout << "loss " << out.result.loss << " count " << out.result.count << "\n";
        } else if (c_eval->parsed()) {
            if (!eval_inv.empty()) eval.refined_inv_depth = eval_inv;
            if (!eval_mask.empty()) eval.mask = eval_mask;
            if (!eval_mask_lrc.empty()) eval.mask_lrc = eval_mask_lrc;
            if (!eval_ofd.empty()) eval.ofd_json = eval_ofd;
            cmd_eval(eval, log);
        } else if (c_pe->parsed()) {
            cmd_pe(pe, log);
        } else if (c_err->parsed()) {
            cmd_errmap(errmap, log);
        } else if (c_synth->parsed()) {
            cmd_synth(synth, log);
        } else if (c_pipe->parsed()) {
            if (!pipeline_input.empty()) pipeline.input_dir = pipeline_input;
            pipeline.penalty = parse_penalty(pipeline_penalty);
            cmd_pipeline(pipeline, log);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return kExitOk;
}
