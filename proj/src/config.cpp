#include "vgyro/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace vgyro {

namespace {

double parse_num(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error("config-parse", "bad numeric value for " + key + ": " + value);
    }
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw Error("config-invalid", key + " must be " + what);
}

}  // namespace

void RunConfig::apply_kv(const std::string& key, const std::string& value) {
    const double v = parse_num(key, value);
    if (key == "mpp.level") {
        require(v >= 0 && v <= 7 && v == static_cast<int>(v), key, "an integer in [0,7]");
        pipeline.mpp_level = static_cast<int>(v);
    } else if (key == "mpp.lambda_g") {
        require(v > 0, key, "> 0");
        pipeline.lambda_g = v;
    } else if (key == "mpp.multistart") {
        require(v == 0 || v == 1, key, "0 or 1");
        pipeline.yaw.multistart = v != 0;
    } else if (key == "pvg.level") {
        require(v >= 0 && v <= 7 && v == static_cast<int>(v), key, "an integer in [0,7]");
        pipeline.refine.level = static_cast<int>(v);
    } else if (key == "pvg.max_iters") {
        require(v >= 1 && v == static_cast<int>(v), key, "a positive integer");
        pipeline.refine.max_iters = static_cast<int>(v);
    } else if (key == "pvg.step_tol") {
        require(v > 0, key, "> 0");
        pipeline.refine.step_tol = v;
    } else if (key == "ransac.iterations") {
        require(v >= 1 && v == static_cast<int>(v), key, "a positive integer");
        pipeline.ransac.iterations = static_cast<int>(v);
    } else if (key == "ransac.inlier_angle_deg") {
        require(v > 0 && v < 90, key, "in (0, 90)");
        pipeline.ransac.inlier_angle_rad = deg2rad(v);
    } else if (key == "ransac.min_inliers") {
        require(v >= 0 && v <= 1, key, "in [0, 1]");
        pipeline.ransac.min_inliers = v;
    } else if (key == "ransac.gate_deg") {
        require(v > 0 && v <= 90, key, "in (0, 90]");
        pipeline.ransac.gate_rad = deg2rad(v);
    } else if (key == "heatmap.tau") {
        require(v >= 0 && v < 1, key, "in [0, 1)");
        pipeline.heatmap_tau = v;
    } else if (key == "success.threshold_deg") {
        require(v > 0, key, "> 0");
        pipeline.success_deg = v;
    } else {
        throw Error("config-parse", "unknown config key: " + key);
    }
}

void RunConfig::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("config-parse", "cannot open config: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line.erase(std::remove_if(line.begin(), line.end(),
                                  [](unsigned char c) { return std::isspace(c); }),
                   line.end());
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error("config-parse",
                        path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        apply_kv(line.substr(0, eq), line.substr(eq + 1));
    }
}

std::string RunConfig::describe_keys() {
    return "  mpp.level              icosphere level for the MPP stage, [0,7] (default 3)\n"
           "  mpp.lambda_g           shared Gaussian smoothing parameter, > 0 (default 0.325)\n"
           "  mpp.multistart         1 = multi-start yaw search on the first frame (default 1)\n"
           "  pvg.level              icosphere level for refinement, [0,7] (default 5)\n"
           "  pvg.max_iters          refinement iteration cap (default 100)\n"
           "  pvg.step_tol           refinement step tolerance, rad (default 1e-6)\n"
           "  ransac.iterations      horizon RANSAC iterations (default 500)\n"
           "  ransac.inlier_angle_deg  inlier band half-width, deg (default 2)\n"
           "  ransac.min_inliers     minimum weighted inlier ratio, [0,1] (default 0.3)\n"
           "  ransac.gate_deg        vertical-coherence gate, deg (default 30)\n"
           "  heatmap.tau            heat-map threshold as a fraction of the peak (default 0.3)\n"
           "  success.threshold_deg  success threshold for evaluation, deg (default 10)\n";
}

}  // namespace vgyro
