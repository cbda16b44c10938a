// vgyro: visual-gyroscope toolkit for equirectangular panoramas.
//
// Subcommands: convert (dual-fisheye -> equirectangular), estimate (per-frame
// orientation), stabilize (rotation compensation), evaluate (error report),
// synth (synthetic sequence generator).

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vgyro/config.hpp"
#include "vgyro/horizon.hpp"
#include "vgyro/image_io.hpp"
#include "vgyro/pipeline.hpp"

namespace fs = std::filesystem;
using namespace vgyro;

namespace {

// Spec'd exit codes: 2 config/trajectory parse failure, 3 unreadable image,
// 4 missing reference frame, 5 missing estimate row.
int exit_code_for(const Error& e) {
    const std::string& c = e.code();
    if (c == "lens-config" || c == "config-parse" || c == "config-invalid" ||
        c == "parse-error" || c == "non-monotonic") {
        return 2;
    }
    if (c == "unreadable-image" || c == "unsupported-format") return 3;
    if (c == "missing-reference") return 4;
    if (c == "missing-estimate") return 5;
    return 1;
}

struct FrameFile {
    std::int64_t id = 0;
    std::string stem;
    fs::path path;
};

bool parse_frame_id(const std::string& stem, std::int64_t& id) {
    std::string digits;
    for (const char c : stem) {
        if (std::isdigit(static_cast<unsigned char>(c))) digits.push_back(c);
    }
    if (digits.empty()) return false;
    try {
        id = std::stoll(digits);
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

// Image files sorted lexicographically; the sort order defines the sequence.
std::vector<FrameFile> list_frames(const std::string& dir) {
    std::vector<FrameFile> frames;
    if (!fs::is_directory(dir)) {
        throw Error("unreadable-image", "not a directory: " + dir);
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext != ".png" && ext != ".jpg" && ext != ".jpeg") continue;
        const std::string stem = entry.path().stem().string();
        if (stem.size() > 5 && stem.ends_with("_stab")) continue;
        if (stem.ends_with("_horizon") || stem.ends_with("_vertical")) continue;
        FrameFile f;
        f.stem = stem;
        f.path = entry.path();
        if (!parse_frame_id(f.stem, f.id)) continue;
        frames.push_back(std::move(f));
    }
    std::sort(frames.begin(), frames.end(),
              [](const FrameFile& a, const FrameFile& b) {
                  return a.path.filename().string() < b.path.filename().string();
              });
    return frames;
}

std::string frame_name(std::int64_t id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06lld", static_cast<long long>(id));
    return buf;
}

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "key=value config file");
    cmd->add_option("--set", opts.sets, "config override key=value (wins over --config)");
    cmd->add_option("--seed", opts.seed, "RNG seed for every stochastic step");
    cmd->footer("Config keys:\n" + RunConfig::describe_keys());
}

RunConfig resolve_config(const CommonOpts& opts) {
    RunConfig cfg;
    if (!opts.config_path.empty()) cfg.apply_file(opts.config_path);
    for (const auto& kv : opts.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw Error("config-parse", "--set expects key=value, got: " + kv);
        }
        cfg.apply_kv(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.seed = opts.seed;
    return cfg;
}

int cmd_convert(const std::string& in_dir, const std::string& lens_path,
                const std::string& out_dir, int out_width) {
    const LensPair lenses = load_lens_config(lens_path);
    fs::create_directories(out_dir);
    const auto frames = list_frames(in_dir);
    for (const auto& f : frames) {
        const DualFisheyeImage df = load_dualfisheye(f.path.string(), lenses);
        const int w = out_width > 0 ? out_width : df.width - df.width % 2;
        const EquirectImage eq = dualfisheye_to_equirect(df, w);
        const std::string out = out_dir + "/" + f.stem + ".png";
        save_equirect(out, eq);
        std::cout << f.path.filename().string() << " -> " << out << '\n';
    }
    std::cout << "converted " << frames.size() << " image(s)\n";
    return 0;
}

std::vector<std::pair<std::string, RotationSO3>> traj_as_stems(
    const std::vector<GroundTruthRecord>& traj) {
    std::vector<std::pair<std::string, RotationSO3>> out;
    out.reserve(traj.size());
    for (const auto& rec : traj) out.emplace_back(frame_name(rec.frame_id), rec.rotation);
    return out;
}

int cmd_estimate(const std::string& seq_dir, const std::string& heatmap_dir,
                 const std::string& synth_traj, std::int64_t ref_id,
                 const std::string& out_csv, const RunConfig& cfg) {
    const auto frames = list_frames(seq_dir);
    if (frames.empty()) {
        save_estimates(out_csv, {});
        std::cout << "no frames in " << seq_dir << ", wrote header-only CSV\n";
        return 0;
    }
    const auto ref_it = std::find_if(frames.begin(), frames.end(),
                                     [&](const FrameFile& f) { return f.id == ref_id; });
    if (ref_it == frames.end()) {
        throw Error("missing-reference",
                    "reference frame " + std::to_string(ref_id) + " not in " + seq_dir);
    }

    std::unique_ptr<HeatmapSource> source;
    if (!synth_traj.empty()) {
        source = std::make_unique<SyntheticHeatmapSource>(
            traj_as_stems(load_ground_truth(synth_traj)), 2.0, 0.0, cfg.seed);
    } else {
        source = std::make_unique<FileHeatmapSource>(heatmap_dir);
    }

    PipelineParams params = cfg.pipeline;
    PipelineContext ctx =
        make_pipeline_context(load_equirect(ref_it->path.string()), params);

    std::vector<AttitudeEstimate> estimates;
    std::optional<AttitudeEstimate> warm;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const EquirectImage img = load_equirect(frames[i].path.string());
        ctx.params.ransac.seed = cfg.seed + i;
        AttitudeEstimate est =
            estimate_frame(ctx, img, source->get(frames[i].stem, img.width, img.height),
                           warm, frames[i].id);
        warm = est;
        std::cout << frames[i].stem << ": rpy = (" << rad2deg(est.rpy.roll) << ", "
                  << rad2deg(est.rpy.pitch) << ", " << rad2deg(est.rpy.yaw)
                  << ") deg, converged = " << est.converged << '\n';
        estimates.push_back(std::move(est));
    }
    save_estimates(out_csv, estimates);
    std::cout << "wrote " << estimates.size() << " estimate(s) to " << out_csv << '\n';
    return 0;
}

int cmd_stabilize(const std::string& seq_dir, const std::string& estimates_csv,
                  const std::string& out_dir) {
    const auto estimates = load_estimates(estimates_csv);
    std::map<std::int64_t, const AttitudeEstimate*> by_id;
    for (const auto& e : estimates) by_id[e.frame_id] = &e;

    fs::create_directories(out_dir);
    const auto frames = list_frames(seq_dir);
    for (const auto& f : frames) {
        const auto it = by_id.find(f.id);
        if (it == by_id.end()) {
            throw Error("missing-estimate",
                        "no estimate row for frame " + std::to_string(f.id));
        }
        const fs::path out = fs::path(out_dir) / (frame_name(f.id) + "_stab.png");
        const RotationSO3& r = it->second->rotation;
        if (r.matrix() == Eigen::Matrix3d::Identity()) {
            // Lossless path: identical content, identical bytes.
            fs::copy_file(f.path, out, fs::copy_options::overwrite_existing);
        } else {
            const EquirectImage img = load_equirect(f.path.string());
            save_equirect(out.string(), rotate_equirect(img, r.transposed()));
        }
        std::cout << f.stem << " -> " << out.string() << '\n';
    }
    return 0;
}

int cmd_evaluate(const std::string& estimates_csv, const std::string& gt_csv,
                 std::optional<std::int64_t> ref_id, const std::string& report_csv,
                 const RunConfig& cfg) {
    const auto estimates = load_estimates(estimates_csv);
    if (estimates.empty()) {
        throw Error("parse-error", "no estimate rows in " + estimates_csv);
    }
    const auto gt = load_ground_truth(gt_csv);
    std::vector<std::int64_t> ids;
    std::vector<RotationSO3> rots;
    std::vector<bool> conv;
    for (const auto& e : estimates) {
        ids.push_back(e.frame_id);
        rots.push_back(e.rotation);
        conv.push_back(e.converged);
    }
    const std::int64_t ref = ref_id.value_or(ids.front());
    const EvalReport rep = compare_to_ground_truth(ids, rots, conv, gt, ref,
                                                   cfg.pipeline.success_deg);
    if (!report_csv.empty()) save_report_csv(report_csv, rep);
    std::cout << report_summary(rep);
    return 0;
}

int cmd_evaluate_run(const std::string& seq_dir, const std::string& heatmap_dir,
                     const std::string& synth_traj, const std::string& gt_csv,
                     std::int64_t ref_id, const std::string& report_csv,
                     const std::string& stab_dir, const RunConfig& cfg) {
    std::vector<SequenceFrame> frames;
    for (const auto& f : list_frames(seq_dir)) {
        frames.push_back({f.id, f.stem, load_equirect(f.path.string())});
    }
    std::unique_ptr<HeatmapSource> source;
    if (!synth_traj.empty()) {
        source = std::make_unique<SyntheticHeatmapSource>(
            traj_as_stems(load_ground_truth(synth_traj)), 2.0, 0.0, cfg.seed);
    } else {
        source = std::make_unique<FileHeatmapSource>(heatmap_dir);
    }
    std::vector<GroundTruthRecord> gt;
    if (!gt_csv.empty()) gt = load_ground_truth(gt_csv);
    if (!stab_dir.empty()) fs::create_directories(stab_dir);

    PipelineParams params = cfg.pipeline;
    params.ransac.seed = cfg.seed;
    const EvalReport rep = evaluate_sequence(frames, *source, gt, ref_id,
                                             cfg.pipeline.success_deg, params, nullptr,
                                             stab_dir);
    if (gt.empty()) {
        std::cout << "qualitative mode: stabilized " << frames.size() << " frame(s)\n";
        return 0;
    }
    if (!report_csv.empty()) save_report_csv(report_csv, rep);
    std::cout << report_summary(rep);
    return 0;
}

int cmd_synth(const std::string& traj_csv, const std::string& source_png,
              std::uint64_t blob_seed, int width, const std::string& out_dir,
              double sigma_deg, double noise, std::uint64_t seed) {
    const auto traj = load_ground_truth(traj_csv);
    if (traj.empty()) throw Error("parse-error", "empty trajectory: " + traj_csv);

    EquirectImage source;
    if (!source_png.empty()) {
        source = load_equirect(source_png);
    } else {
        source = make_blob_panorama(blob_seed, width, width / 2);
    }

    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& rec = traj[i];
        const std::string stem = frame_name(rec.frame_id);
        save_equirect(out_dir + "/" + stem + ".png",
                      rotate_equirect(source, rec.rotation));
        const HeatMapPair hm = synth_heatmaps(rec.rotation, source.width, source.height,
                                              sigma_deg, noise, seed + i);
        save_gray_grid(out_dir + "/" + stem + "_horizon.png", hm.horizon, hm.width,
                       hm.height);
        save_gray_grid(out_dir + "/" + stem + "_vertical.png", hm.vertical, hm.width,
                       hm.height);
        std::cout << "frame " << stem << ": rpy = (" << rad2deg(rec.rotation.to_rpy().roll)
                  << ", " << rad2deg(rec.rotation.to_rpy().pitch) << ", "
                  << rad2deg(rec.rotation.to_rpy().yaw) << ") deg\n";
    }
    save_ground_truth(out_dir + "/gt.csv", traj);
    std::cout << "wrote " << traj.size() << " frame(s) + heat-maps + gt.csv to "
              << out_dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"visual gyroscope for equirectangular panoramas"};
    app.require_subcommand(1);

    // convert
    auto* convert = app.add_subcommand(
        "convert", "convert dual-fisheye captures to equirectangular PNGs");
    std::string cv_in, cv_lens, cv_out;
    int cv_width = 0;
    convert->add_option("--in", cv_in, "directory of dual-fisheye images")->required();
    convert->add_option("--lens", cv_lens, "lens key=value config file")->required();
    convert->add_option("--out", cv_out, "output directory")->required();
    convert->add_option("--out-width", cv_width,
                        "output panorama width (default: input width, made even)");

    // estimate
    auto* estimate = app.add_subcommand(
        "estimate", "estimate per-frame orientation against a reference frame");
    std::string es_seq, es_heatmaps, es_synth, es_out = "estimates.csv";
    std::int64_t es_ref = 0;
    CommonOpts es_common;
    estimate->add_option("--seq", es_seq, "directory of equirectangular frames")
        ->required();
    estimate->add_option("--heatmaps", es_heatmaps,
                         "directory with <frame>_horizon.png / <frame>_vertical.png");
    estimate->add_option("--synth-traj", es_synth,
                         "trajectory CSV: generate oracle heat-maps instead of reading files");
    estimate->add_option("--ref", es_ref, "reference frame id")->required();
    estimate->add_option("--out", es_out, "output estimates CSV");
    add_common(estimate, es_common);

    // stabilize
    auto* stabilize = app.add_subcommand(
        "stabilize", "rotation-compensate frames using an estimates CSV");
    std::string st_seq, st_est, st_out;
    stabilize->add_option("--seq", st_seq, "directory of frames")->required();
    stabilize->add_option("--estimates", st_est, "estimates CSV")->required();
    stabilize->add_option("--out", st_out, "output directory")->required();

    // evaluate
    auto* evaluate = app.add_subcommand(
        "evaluate", "compare estimates against ground truth and report errors");
    std::string ev_est, ev_gt, ev_report, ev_seq, ev_heatmaps, ev_synth, ev_stab;
    std::int64_t ev_ref = -1;
    double ev_success = -1.0;
    CommonOpts ev_common;
    evaluate->add_option("--estimates", ev_est, "estimates CSV (compare mode)");
    evaluate->add_option("--gt", ev_gt, "ground-truth CSV");
    evaluate->add_option("--ref", ev_ref, "reference frame id");
    evaluate->add_option("--report", ev_report, "output report CSV");
    evaluate->add_option("--seq", ev_seq, "frame directory (run mode)");
    evaluate->add_option("--heatmaps", ev_heatmaps, "heat-map directory (run mode)");
    evaluate->add_option("--synth-traj", ev_synth, "trajectory CSV for oracle heat-maps");
    evaluate->add_option("--stabilized", ev_stab,
                         "output directory for qualitative (no-gt) stabilization");
    evaluate->add_option("--success-deg", ev_success, "success threshold, deg");
    add_common(evaluate, ev_common);

    // synth
    auto* synth = app.add_subcommand(
        "synth", "render a synthetic rotated sequence with heat-maps and ground truth");
    std::string sy_traj, sy_source, sy_out;
    std::uint64_t sy_blobs = 7, sy_seed = 0;
    int sy_width = 512;
    double sy_sigma = 2.0, sy_noise = 0.1;
    synth->add_option("--traj", sy_traj, "trajectory CSV (frame_id,roll,pitch,yaw deg)")
        ->required();
    synth->add_option("--source", sy_source, "source panorama PNG (else procedural)");
    synth->add_option("--blobs", sy_blobs, "seed for the procedural source panorama");
    synth->add_option("--width", sy_width, "procedural panorama width");
    synth->add_option("--out", sy_out, "output directory")->required();
    synth->add_option("--sigma-deg", sy_sigma, "heat-map band width, deg");
    synth->add_option("--noise", sy_noise, "heat-map uniform noise amplitude");
    synth->add_option("--seed", sy_seed, "noise seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (convert->parsed()) return cmd_convert(cv_in, cv_lens, cv_out, cv_width);
        if (estimate->parsed()) {
            if (es_heatmaps.empty() == es_synth.empty()) {
                std::cerr << "estimate: exactly one of --heatmaps / --synth-traj required\n";
                return 2;
            }
            return cmd_estimate(es_seq, es_heatmaps, es_synth, es_ref, es_out,
                                resolve_config(es_common));
        }
        if (stabilize->parsed()) return cmd_stabilize(st_seq, st_est, st_out);
        if (evaluate->parsed()) {
            RunConfig cfg = resolve_config(ev_common);
            if (ev_success > 0.0) cfg.pipeline.success_deg = ev_success;
            if (!ev_est.empty()) {
                if (ev_gt.empty()) {
                    std::cerr << "evaluate: compare mode requires --gt\n";
                    return 2;
                }
                std::optional<std::int64_t> ref;
                if (ev_ref >= 0) ref = ev_ref;
                return cmd_evaluate(ev_est, ev_gt, ref, ev_report, cfg);
            }
            if (ev_seq.empty()) {
                std::cerr << "evaluate: need --estimates (compare) or --seq (run)\n";
                return 2;
            }
            return cmd_evaluate_run(ev_seq, ev_heatmaps, ev_synth, ev_gt,
                                    ev_ref >= 0 ? ev_ref : 0, ev_report, ev_stab, cfg);
        }
        if (synth->parsed()) {
            return cmd_synth(sy_traj, sy_source, sy_blobs, sy_width, sy_out, sy_sigma,
                             sy_noise, sy_seed);
        }
    } catch (const Error& e) {
        std::cerr << "error [" << e.code() << "]: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
