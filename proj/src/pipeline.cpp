#include "vgyro/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "vgyro/image_io.hpp"

namespace vgyro {

PipelineContext make_pipeline_context(EquirectImage ref_image,
                                      const PipelineParams& params) {
    PipelineContext ctx;
    ctx.params = params;
    ctx.mpp_grid = build_icosphere(params.mpp_level);
    ctx.pvg_grid = build_icosphere(params.refine.level);
    ctx.ref_mpp = build_mpp(ref_image, ctx.mpp_grid, params.lambda_g);
    ctx.ref_image = std::move(ref_image);
    return ctx;
}

AttitudeEstimate estimate_frame(const PipelineContext& ctx, const EquirectImage& frame,
                                const HeatMapPair& heatmaps,
                                const std::optional<AttitudeEstimate>& warm,
                                std::int64_t frame_id) {
    AttitudeEstimate est;
    est.frame_id = frame_id;

    // Stage 1: horizon attitude.
    RollPitch rp;
    double inlier_ratio = 0.0;
    try {
        const HorizonEstimate he =
            horizon_rollpitch(heatmaps, ctx.params.heatmap_tau, ctx.params.ransac);
        rp = he.rp;
        inlier_ratio = he.plane.inlier_ratio;
    } catch (const Error&) {
        if (!warm) throw;
        rp.roll = warm->rpy.roll;
        rp.pitch = warm->rpy.pitch;
    }
    est.stage1 = {rp.roll, rp.pitch, 0.0, inlier_ratio};

    // Stage 2: yaw alignment against the reference MPP.
    const MppModel frame_mpp = build_mpp(frame, ctx.mpp_grid, ctx.params.lambda_g);
    YawOptions yaw_opts = ctx.params.yaw;
    double yaw0 = 0.0;
    if (warm) {
        yaw0 = warm->rpy.yaw;
        yaw_opts.multistart = false;
    }
    const YawEstimate ye = optimize_yaw(ctx.ref_mpp, frame_mpp, rp, yaw0, yaw_opts);
    est.stage2 = {rp.roll, rp.pitch, ye.yaw, ye.final_cost};

    // Stage 3: photometric refinement of all three angles.
    const RotationSO3 r0 = RotationSO3::from_rpy(rp.roll, rp.pitch, ye.yaw);
    const RefineResult rr =
        refine_rotation(ctx.ref_image, frame, r0, ctx.params.refine, ctx.pvg_grid);

    est.rotation = rr.rotation;
    est.rpy = rr.rotation.to_rpy();
    est.stage3 = {est.rpy.roll, est.rpy.pitch, est.rpy.yaw, rr.final_cost};
    est.pvg_initial_cost = rr.initial_cost;
    est.converged = rr.converged;
    return est;
}

double normal_angle_error(const Direction& n, const Direction& n_hat) {
    return rad2deg(std::acos(std::clamp(n.dot(n_hat), -1.0, 1.0)));
}

double rotation_angle_error(const RotationSO3& r_gt, const RotationSO3& r_pred) {
    return rad2deg(geodesic_angle(r_gt, r_pred));
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return (v.size() % 2 == 1) ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

EvalReport compare_to_ground_truth(const std::vector<std::int64_t>& frame_ids,
                                   const std::vector<RotationSO3>& estimates,
                                   const std::vector<bool>& converged,
                                   const std::vector<GroundTruthRecord>& gt,
                                   std::int64_t ref_id, double tau_succ_deg) {
    auto find_index = [&](std::int64_t id) -> std::size_t {
        for (std::size_t i = 0; i < frame_ids.size(); ++i) {
            if (frame_ids[i] == id) return i;
        }
        throw Error("missing-reference", "reference frame not in sequence");
    };
    const std::size_t ref_idx = find_index(ref_id);

    const GroundTruthRecord* gt_ref = nullptr;
    std::vector<const GroundTruthRecord*> gt_by_frame(frame_ids.size(), nullptr);
    for (std::size_t i = 0; i < frame_ids.size(); ++i) {
        for (const auto& rec : gt) {
            if (rec.frame_id == frame_ids[i]) {
                gt_by_frame[i] = &rec;
                break;
            }
        }
        if (!gt_by_frame[i]) {
            throw Error("gt-mismatch", "no ground truth for frame " +
                                           std::to_string(frame_ids[i]));
        }
    }
    gt_ref = gt_by_frame[ref_idx];

    EvalReport rep;
    rep.reference_id = ref_id;
    rep.tau_succ_deg = tau_succ_deg;
    const Eigen::Matrix3d est_ref_t = estimates[ref_idx].matrix().transpose();
    const Eigen::Matrix3d gt_ref_t = gt_ref->rotation.matrix().transpose();
    const Direction z(0, 0, 1);

    int successes = 0;
    for (std::size_t i = 0; i < frame_ids.size(); ++i) {
        const RotationSO3 rel_est =
            RotationSO3::from_matrix(est_ref_t * estimates[i].matrix());
        const RotationSO3 rel_gt =
            RotationSO3::from_matrix(gt_ref_t * gt_by_frame[i]->rotation.matrix());

        const double rot_err = rotation_angle_error(rel_gt, rel_est);
        const double n_err = normal_angle_error(rel_est.matrix().transpose() * z,
                                                rel_gt.matrix().transpose() * z);
        rep.frame_ids.push_back(frame_ids[i]);
        rep.rot_err_deg.push_back(rot_err);
        rep.normal_err_deg.push_back(n_err);
        rep.converged.push_back(i < converged.size() ? converged[i] : true);
        if (rot_err < tau_succ_deg) ++successes;
    }

    rep.mean_rot_deg = mean(rep.rot_err_deg);
    rep.median_rot_deg = median(rep.rot_err_deg);
    rep.mean_normal_deg = mean(rep.normal_err_deg);
    rep.median_normal_deg = median(rep.normal_err_deg);
    rep.success_rate = rep.frame_ids.empty()
                           ? 0.0
                           : static_cast<double>(successes) / rep.frame_ids.size();
    return rep;
}

EvalReport evaluate_sequence(const std::vector<SequenceFrame>& frames,
                             HeatmapSource& heatmaps,
                             const std::vector<GroundTruthRecord>& gt,
                             std::int64_t ref_id, double tau_succ_deg,
                             const PipelineParams& params,
                             std::vector<AttitudeEstimate>* estimates_out,
                             const std::string& stabilized_dir) {
    const auto ref_it =
        std::find_if(frames.begin(), frames.end(),
                     [&](const SequenceFrame& f) { return f.id == ref_id; });
    if (ref_it == frames.end()) {
        throw Error("missing-reference", "reference frame not in sequence");
    }

    const PipelineContext ctx = make_pipeline_context(ref_it->image, params);

    std::vector<AttitudeEstimate> estimates;
    std::optional<AttitudeEstimate> warm;
    for (const auto& f : frames) {
        const HeatMapPair hm = heatmaps.get(f.stem, f.image.width, f.image.height);
        AttitudeEstimate est = estimate_frame(ctx, f.image, hm, warm, f.id);
        warm = est;
        estimates.push_back(std::move(est));
    }
    if (estimates_out) *estimates_out = estimates;

    if (gt.empty()) {
        // Qualitative mode: emit rotation-compensated frames.
        if (!stabilized_dir.empty()) {
            for (std::size_t i = 0; i < frames.size(); ++i) {
                const EquirectImage stab =
                    rotate_equirect(frames[i].image, estimates[i].rotation.transposed());
                save_equirect(stabilized_dir + "/" + std::to_string(frames[i].id) +
                                  "_stab.png",
                              stab);
            }
        }
        EvalReport rep;
        rep.reference_id = ref_id;
        rep.tau_succ_deg = tau_succ_deg;
        return rep;
    }

    std::vector<std::int64_t> ids;
    std::vector<RotationSO3> rots;
    std::vector<bool> conv;
    for (const auto& e : estimates) {
        ids.push_back(e.frame_id);
        rots.push_back(e.rotation);
        conv.push_back(e.converged);
    }
    return compare_to_ground_truth(ids, rots, conv, gt, ref_id, tau_succ_deg);
}

// --- CSV I/O ------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

bool parse_int(const std::string& s, std::int64_t& out) {
    try {
        std::size_t pos = 0;
        out = std::stoll(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace

std::vector<GroundTruthRecord> load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("parse-error", "cannot open ground truth: " + path);

    std::vector<GroundTruthRecord> records;
    std::string line;
    int lineno = 0;
    bool first_data = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_csv(line);
        std::int64_t id = 0;
        if (!parse_int(fields[0], id)) {
            if (first_data) continue;  // header row
            throw Error("parse-error",
                        path + ":" + std::to_string(lineno) + ": bad frame id");
        }
        first_data = false;

        GroundTruthRecord rec;
        rec.frame_id = id;
        if (fields.size() == 4) {
            double r, p, y;
            if (!parse_double(fields[1], r) || !parse_double(fields[2], p) ||
                !parse_double(fields[3], y)) {
                throw Error("parse-error",
                            path + ":" + std::to_string(lineno) + ": bad rpy row");
            }
            rec.rotation =
                RotationSO3::from_rpy(deg2rad(r), deg2rad(p), deg2rad(y));
        } else if (fields.size() == 5) {
            double q[4];
            for (int k = 0; k < 4; ++k) {
                if (!parse_double(fields[k + 1], q[k])) {
                    throw Error("parse-error", path + ":" + std::to_string(lineno) +
                                                   ": bad quaternion row");
                }
            }
            Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
            if (quat.norm() < 1e-12) {
                throw Error("parse-error", path + ":" + std::to_string(lineno) +
                                               ": zero quaternion");
            }
            quat.normalize();
            rec.rotation = RotationSO3::from_matrix(quat.toRotationMatrix());
        } else {
            throw Error("parse-error", path + ":" + std::to_string(lineno) +
                                           ": expected 4 or 5 columns");
        }
        if (!records.empty() && rec.frame_id <= records.back().frame_id) {
            throw Error("non-monotonic", path + ":" + std::to_string(lineno) +
                                             ": frame ids must strictly increase");
        }
        records.push_back(rec);
    }
    return records;
}

void save_ground_truth(const std::string& path,
                       const std::vector<GroundTruthRecord>& records) {
    std::ofstream out(path);
    if (!out) throw Error("unwritable-file", "cannot write " + path);
    out.precision(12);
    for (const auto& rec : records) {
        const EulerRPY e = rec.rotation.to_rpy();
        out << rec.frame_id << ',' << rad2deg(e.roll) << ',' << rad2deg(e.pitch) << ','
            << rad2deg(e.yaw) << '\n';
    }
}

namespace {
constexpr const char* kEstimateHeader =
    "frame_id,roll_deg,pitch_deg,yaw_deg,converged,s1_roll_deg,s1_pitch_deg,"
    "s1_inlier_ratio,s2_yaw_deg,s2_cost,s3_cost0,s3_cost";
}

void save_estimates(const std::string& path,
                    const std::vector<AttitudeEstimate>& estimates) {
    std::ofstream out(path);
    if (!out) throw Error("unwritable-file", "cannot write " + path);
    out.precision(12);
    out << kEstimateHeader << '\n';
    for (const auto& e : estimates) {
        out << e.frame_id << ',' << rad2deg(e.rpy.roll) << ',' << rad2deg(e.rpy.pitch)
            << ',' << rad2deg(e.rpy.yaw) << ',' << (e.converged ? 1 : 0) << ','
            << rad2deg(e.stage1.roll) << ',' << rad2deg(e.stage1.pitch) << ','
            << e.stage1.cost << ',' << rad2deg(e.stage2.yaw) << ',' << e.stage2.cost
            << ',' << e.pvg_initial_cost << ',' << e.stage3.cost << '\n';
    }
}

std::vector<AttitudeEstimate> load_estimates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("parse-error", "cannot open estimates: " + path);

    std::vector<AttitudeEstimate> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_csv(line);
        std::int64_t id = 0;
        if (!parse_int(fields[0], id)) {
            if (lineno == 1) continue;  // header
            throw Error("parse-error",
                        path + ":" + std::to_string(lineno) + ": bad frame id");
        }
        if (fields.size() < 12) {
            throw Error("parse-error",
                        path + ":" + std::to_string(lineno) + ": expected 12 columns");
        }
        double num[11];
        for (int k = 0; k < 11; ++k) {
            if (!parse_double(fields[k + 1], num[k])) {
                throw Error("parse-error",
                            path + ":" + std::to_string(lineno) + ": bad value");
            }
        }
        AttitudeEstimate e;
        e.frame_id = id;
        e.rpy = {deg2rad(num[0]), deg2rad(num[1]), deg2rad(num[2])};
        e.rotation = RotationSO3::from_rpy(e.rpy);
        e.converged = num[3] != 0.0;
        e.stage1 = {deg2rad(num[4]), deg2rad(num[5]), 0.0, num[6]};
        e.stage2 = {deg2rad(num[4]), deg2rad(num[5]), deg2rad(num[7]), num[8]};
        e.pvg_initial_cost = num[9];
        e.stage3 = {e.rpy.roll, e.rpy.pitch, e.rpy.yaw, num[10]};
        out.push_back(e);
    }
    return out;
}

void save_report_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw Error("unwritable-file", "cannot write " + path);
    out.precision(12);
    out << "frame_id,normal_err_deg,rot_err_deg,converged\n";
    for (std::size_t i = 0; i < report.frame_ids.size(); ++i) {
        out << report.frame_ids[i] << ',' << report.normal_err_deg[i] << ','
            << report.rot_err_deg[i] << ',' << (report.converged[i] ? 1 : 0) << '\n';
    }
}

std::string report_summary(const EvalReport& report) {
    std::ostringstream os;
    os.precision(4);
    os << "frames:            " << report.frame_ids.size() << '\n'
       << "reference frame:   " << report.reference_id << '\n'
       << "mean rot err:      " << report.mean_rot_deg << " deg\n"
       << "median rot err:    " << report.median_rot_deg << " deg\n"
       << "mean normal err:   " << report.mean_normal_deg << " deg\n"
       << "median normal err: " << report.median_normal_deg << " deg\n"
       << "success rate:      " << report.success_rate << " (rot err < "
       << report.tau_succ_deg << " deg)\n";
    return os.str();
}

}  // namespace vgyro
