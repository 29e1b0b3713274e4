#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "disprefine/align.hpp"
#include "disprefine/flow_consistency.hpp"
#include "disprefine/grid.hpp"
#include "disprefine/io.hpp"
#include "disprefine/mask.hpp"
#include "disprefine/metrics.hpp"
#include "disprefine/occlusion.hpp"
#include "disprefine/position.hpp"
#include "disprefine/synth.hpp"

// Subcommands of the `disprefine` tool. Each writes its artifacts under an
// output directory and returns the in-memory results; errors are thrown and
// mapped to process exit codes by exit_code_for().
namespace disprefine::cli {

namespace fs = std::filesystem;

inline constexpr const char* kToolName = "disprefine";
inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitIo = 2,
    kExitDegenerate = 3,
    kExitEmptyDomain = 4,
};

int exit_code_for(const std::exception& e);

// File names inside a dataset frame directory (written by `synth`, read by `pipeline`).
namespace layout {
inline constexpr const char* kCalibration = "calib.txt";
inline constexpr const char* kScene = "scene.json";
inline constexpr const char* kCoarseLeft = "disparity_coarse_left.pfm";
inline constexpr const char* kCoarseRight = "disparity_coarse_right.pfm";
inline constexpr const char* kInverseDepth = "inverse_depth.pfm";
inline constexpr const char* kFlowLeft = "flow_left_bwd.flo";
inline constexpr const char* kFlowRight = "flow_right_bwd.flo";
inline constexpr const char* kGtLeft = "disparity_gt.pfm";
inline constexpr const char* kGtRight = "disparity_right_gt.pfm";
inline constexpr const char* kOcclusionGt = "occlusion_gt.png";
std::string frame_dir_name(int index);
}  // namespace layout

// ---------------------------------------------------------------------------

struct LrcOptions {
    fs::path left;
    std::optional<fs::path> right;
    double tau = kDefaultLrcTau;
    fs::path out_dir;
};

struct LrcOutcome {
    OcclusionMask mask;
    bool used_fallback = false;
};

// Writes mask_lrc.png and mask_lrc.pfm.
LrcOutcome cmd_lrc(const LrcOptions& opts, std::ostream& log);

// ---------------------------------------------------------------------------

struct RefineOptions {
    fs::path coarse;
    fs::path inverse_depth;
    std::optional<fs::path> mask;   // used as-is when given
    std::optional<fs::path> right;  // LRC against this, else the warp fallback
    double tau = kDefaultLrcTau;
    bool global_fit = false;
    int tiles_x = 1;
    int tiles_y = 1;
    double trim = kDefaultTrimFraction;
    bool invert_mask = false;
    fs::path out_dir;
};

struct RefineOutcome {
    OcclusionMask mask;
    std::string mask_source;
    TiledAffineFit fit;
    // Set when no pixel can anchor the fit and the blend ignores the depth term anyway;
    // the fit is then the identity and the output equals the coarse input.
    bool fit_skipped = false;
    ScalarMap refined_inv_depth;
    ScalarMap refined;
};

// In-memory refinement: mask (given or LRC) -> affine fit -> refined inverse depth -> fusion.
RefineOutcome refine_frame(const ScalarMap& coarse, const ScalarMap& inverse_depth,
                           const std::optional<OcclusionMask>& mask, const std::optional<ScalarMap>& right,
                           const RefineOptions& opts);

// Writes refined.pfm, refined_inv_depth.pfm, mask_used.png and fit.json.
RefineOutcome cmd_refine(const RefineOptions& opts, std::ostream& log);

// ---------------------------------------------------------------------------

struct OfdOptions {
    fs::path disparity;
    fs::path previous_disparity;
    fs::path flow_left;
    fs::path flow_right;
    Penalty penalty = Penalty::Abs;
    // Inputs are forward flows (k-1 -> k); negate them as a small-motion approximation.
    bool forward_flows = false;
    bool grad_check = false;
    fs::path out_dir;
};

struct OfdOutcome {
    OfdResult result;
    std::optional<GradCheckReport> grad_check;
};

// Writes ofd.json, ofd_residual.pfm and ofd_weight.pfm.
OfdOutcome cmd_ofd(const OfdOptions& opts, std::ostream& log);

// ---------------------------------------------------------------------------

struct EvalOptions {
    std::vector<fs::path> predictions;
    std::vector<fs::path> ground_truths;
    std::vector<std::string> frame_ids;  // defaults to the prediction file stems
    fs::path calibration;
    // Composite loss inputs; all four must be given together and only for a single frame.
    std::optional<fs::path> refined_inv_depth;
    std::optional<fs::path> mask;
    std::optional<fs::path> mask_lrc;
    std::optional<fs::path> ofd_json;
    fs::path out_dir;
};

struct EvalOutcome {
    std::vector<std::string> frame_ids;
    std::vector<MetricReport> reports;
    MetricReport mean;
    std::optional<CompositeLossReport> composite;
};

// CSV header and row formatting for metrics.csv.
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& frame_id, const MetricReport& r);

// Writes metrics.csv (one row per frame plus a "mean" row) and, when requested, composite.json.
EvalOutcome cmd_eval(const EvalOptions& opts, std::ostream& log);

// ---------------------------------------------------------------------------

struct PeOptions {
    int width = 0;
    int height = 0;
    PositionEmbeddingOptions embedding;
    fs::path out_dir;
};

// One PFM per channel, named by PositionEmbedding::channel_name.
PositionEmbedding cmd_pe(const PeOptions& opts, std::ostream& log);

struct ErrmapOptions {
    std::vector<fs::path> predictions;
    std::vector<fs::path> ground_truths;
    fs::path out_dir;
};

// Writes error_heatmap.pfm and error_heatmap.png.
ScalarMap cmd_errmap(const ErrmapOptions& opts, std::ostream& log);

struct SynthOptions {
    SceneSpec spec;
    fs::path out_dir;
};

// Writes calib.txt, scene.json and one frame_NNN directory per frame.
std::vector<SceneFramePair> cmd_synth(const SynthOptions& opts, std::ostream& log);

// ---------------------------------------------------------------------------

struct PipelineOptions {
    std::optional<fs::path> input_dir;  // dataset layout; synthesized from `scene` when absent
    SceneSpec scene;
    RefineOptions refine;  // paths ignored
    Penalty penalty = Penalty::Abs;
    unsigned threads = 1;
    fs::path out_dir;
};

struct PipelineOutcome {
    fs::path manifest_path;
    std::string metrics_json;  // the "metrics" member of the manifest, serialized
};

// ingest -> lrc -> refine -> ofd -> eval for every frame; writes manifest.json.
PipelineOutcome cmd_pipeline(const PipelineOptions& opts, std::ostream& log);

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

}  // namespace disprefine::cli
