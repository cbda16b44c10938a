#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vgyro/horizon.hpp"
#include "vgyro/image.hpp"
#include "vgyro/mpp.hpp"
#include "vgyro/pvg.hpp"
#include "vgyro/sphere.hpp"

namespace vgyro {

struct StageSnapshot {
    double roll = 0.0;
    double pitch = 0.0;
    double yaw = 0.0;
    double cost = 0.0;
};

// Per-frame pipeline output. `rotation` is the content rotation relative to
// the reference frame (frame ~ rotate_equirect(ref, rotation)).
struct AttitudeEstimate {
    std::int64_t frame_id = 0;
    RotationSO3 rotation;
    EulerRPY rpy;
    StageSnapshot stage1;  // horizon roll/pitch; cost = RANSAC inlier ratio
    StageSnapshot stage2;  // + MPP yaw; cost = MPP SSD
    StageSnapshot stage3;  // refined angles; cost = PVG SSD
    double pvg_initial_cost = 0.0;  // PVG cost at the stage-2 rotation
    bool converged = false;
};

struct GroundTruthRecord {
    std::int64_t frame_id = 0;
    RotationSO3 rotation;
    double timestamp = 0.0;
};

struct EvalReport {
    std::int64_t reference_id = 0;
    double tau_succ_deg = 10.0;
    std::vector<std::int64_t> frame_ids;
    std::vector<double> normal_err_deg;
    std::vector<double> rot_err_deg;
    std::vector<bool> converged;
    double mean_normal_deg = 0.0;
    double median_normal_deg = 0.0;
    double mean_rot_deg = 0.0;
    double median_rot_deg = 0.0;
    double success_rate = 0.0;
};

struct PipelineParams {
    double heatmap_tau = 0.3;
    RansacConfig ransac;
    int mpp_level = 3;
    double lambda_g = 0.325;
    YawOptions yaw{true};    // multistart on; applies to frames without a warm start
    RefineConfig refine;     // level default 5
    double success_deg = 10.0;
};

// Reference-frame artifacts shared by every estimate_frame call.
struct PipelineContext {
    PipelineParams params;
    EquirectImage ref_image;
    MppModel ref_mpp;
    IcosphereGrid mpp_grid;
    IcosphereGrid pvg_grid;
};

PipelineContext make_pipeline_context(EquirectImage ref_image,
                                      const PipelineParams& params);

// Horizon roll/pitch -> MPP yaw (warm-started when given) -> PVG refinement.
// On horizon failure falls back to the warm rpy when available, else rethrows.
AttitudeEstimate estimate_frame(const PipelineContext& ctx, const EquirectImage& frame,
                                const HeatMapPair& heatmaps,
                                const std::optional<AttitudeEstimate>& warm,
                                std::int64_t frame_id = 0);

// arccos(n . n_hat) in degrees.
double normal_angle_error(const Direction& n, const Direction& n_hat);

// Geodesic angle between rotations, in degrees.
double rotation_angle_error(const RotationSO3& r_gt, const RotationSO3& r_pred);

struct SequenceFrame {
    std::int64_t id = 0;
    std::string stem;  // filename stem, used to locate heat-maps
    EquirectImage image;
};

// Runs the full pipeline over a sequence. With ground truth, errors are
// computed on rotations relative to the reference frame's entries; without
// it (qualitative mode) stabilized frames are written to stabilized_dir.
// Throws "missing-reference" / "gt-mismatch".
EvalReport evaluate_sequence(const std::vector<SequenceFrame>& frames,
                             HeatmapSource& heatmaps,
                             const std::vector<GroundTruthRecord>& gt,
                             std::int64_t ref_id, double tau_succ_deg,
                             const PipelineParams& params,
                             std::vector<AttitudeEstimate>* estimates_out = nullptr,
                             const std::string& stabilized_dir = "");

// Metric core shared with the CLI: compares per-frame estimate rotations
// against ground truth, both re-anchored to their reference entries.
EvalReport compare_to_ground_truth(const std::vector<std::int64_t>& frame_ids,
                                   const std::vector<RotationSO3>& estimates,
                                   const std::vector<bool>& converged,
                                   const std::vector<GroundTruthRecord>& gt,
                                   std::int64_t ref_id, double tau_succ_deg);

// CSV `frame_id,qw,qx,qy,qz` or `frame_id,roll_deg,pitch_deg,yaw_deg`,
// auto-detected by column count. Throws "parse-error" (with line number) and
// "non-monotonic" when frame ids do not strictly increase.
std::vector<GroundTruthRecord> load_ground_truth(const std::string& path);

void save_ground_truth(const std::string& path,
                       const std::vector<GroundTruthRecord>& records);

// Estimates CSV (stage trace included); see README for the column list.
void save_estimates(const std::string& path,
                    const std::vector<AttitudeEstimate>& estimates);
std::vector<AttitudeEstimate> load_estimates(const std::string& path);

// Report CSV `frame_id,normal_err_deg,rot_err_deg,converged` + text summary.
void save_report_csv(const std::string& path, const EvalReport& report);
std::string report_summary(const EvalReport& report);

}  // namespace vgyro
