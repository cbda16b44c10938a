#include "vgyro/pvg.hpp"

#include <algorithm>
#include <cmath>

#include "vgyro/detail/photometric.hpp"
#include "vgyro/kernels.hpp"

namespace vgyro {

namespace {

void check_pair(const EquirectImage& ref, const EquirectImage& cur) {
    if (ref.width != cur.width || ref.height != cur.height) {
        throw Error("dimensions-mismatch", "reference and current images differ in size");
    }
}

void flatten(const Eigen::Matrix3d& m, double r[9]) {
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) r[3 * i + j] = m(i, j);
    }
}

struct RefineWork {
    const EquirectImage* cur;
    std::vector<double> vx, vy, vz;  // grid vertices, SoA
    std::vector<double> a;           // reference brightness per vertex

    RefineWork(const EquirectImage& ref, const EquirectImage& cur_img,
               const IcosphereGrid& grid)
        : cur(&cur_img) {
        const std::size_t n = grid.vertices.size();
        vx.resize(n);
        vy.resize(n);
        vz.resize(n);
        std::vector<double> us(n), vs(n);
        for (std::size_t k = 0; k < n; ++k) {
            const Direction& v = grid.vertices[k];
            vx[k] = v.x();
            vy[k] = v.y();
            vz[k] = v.z();
            project_equirect(v, ref.width, ref.height, us[k], vs[k]);
        }
        a.resize(n);
        kernels::active_backend().bilinear_many(ref.gray.data(), ref.width, ref.height,
                                                us.data(), vs.data(), n, a.data());
    }

    double cost_at(const Eigen::Matrix3d& rot) const {
        double r[9];
        flatten(rot, r);
        return kernels::active_backend().photo_cost_pass(
            cur->gray.data(), cur->width, cur->height, r, vx.data(), vy.data(),
            vz.data(), a.data(), a.size());
    }

    double assemble(const Eigen::Matrix3d& rot, Eigen::Matrix3d& jtj,
                    Eigen::Vector3d& jtr) const {
        double r[9];
        flatten(rot, r);
        kernels::PhotoNormal normal;
        kernels::active_backend().photo_normal_pass(cur->gray.data(), cur->width,
                                                    cur->height, r, vx.data(),
                                                    vy.data(), vz.data(), a.data(),
                                                    a.size(), &normal);
        jtj << normal.jtj[0], normal.jtj[1], normal.jtj[2],
               normal.jtj[1], normal.jtj[3], normal.jtj[4],
               normal.jtj[2], normal.jtj[4], normal.jtj[5];
        jtr = Eigen::Vector3d(normal.jtr[0], normal.jtr[1], normal.jtr[2]);
        return normal.cost;
    }
};

}  // namespace

SphericalBrightness sample_spherical(const EquirectImage& img,
                                     const IcosphereGrid& grid,
                                     const RotationSO3& r) {
    SphericalBrightness sb;
    sb.grid = grid;
    const std::size_t n = grid.vertices.size();
    std::vector<double> us(n), vs(n);
    const Eigen::Matrix3d rt = r.matrix().transpose();
    for (std::size_t k = 0; k < n; ++k) {
        const Direction d = rt * grid.vertices[k];
        project_equirect(d, img.width, img.height, us[k], vs[k]);
    }
    sb.values.resize(n);
    kernels::active_backend().bilinear_many(img.gray.data(), img.width, img.height,
                                            us.data(), vs.data(), n, sb.values.data());
    return sb;
}

Eigen::Vector3d spherical_gradient(const EquirectImage& img, const Direction& x,
                                   const RotationSO3& r) {
    const Direction d = r.matrix().transpose() * x;
    double val, g[3];
    detail::photo_value_grad(img.gray.data(), img.width, img.height, d.x(), d.y(),
                             d.z(), val, g);
    return Eigen::Vector3d(g[0], g[1], g[2]);
}

RefineResult refine_rotation(const EquirectImage& ref, const EquirectImage& cur,
                             const RotationSO3& r0, const RefineConfig& cfg) {
    return refine_rotation(ref, cur, r0, cfg, build_icosphere(cfg.level));
}

RefineResult refine_rotation(const EquirectImage& ref, const EquirectImage& cur,
                             const RotationSO3& r0, const RefineConfig& cfg,
                             const IcosphereGrid& grid) {
    check_pair(ref, cur);
    const RefineWork work(ref, cur, grid);

    Eigen::Matrix3d r = r0.matrix();
    double lambda = 1e-3;

    Eigen::Matrix3d jtj;
    Eigen::Vector3d jtr;
    double cost = work.assemble(r, jtj, jtr);

    RefineResult out;
    out.initial_cost = cost;

    bool stale = false;  // jtj/jtr valid for the current r?
    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        if (stale) {
            cost = work.assemble(r, jtj, jtr);
            stale = false;
        }
        Eigen::Matrix3d damped = jtj;
        damped.diagonal() += lambda * jtj.diagonal();
        damped.diagonal().array() += 1e-15;
        const Eigen::Vector3d delta = damped.ldlt().solve(-jtr);
        if (!delta.allFinite()) break;
        if (delta.norm() < cfg.step_tol) {
            out.converged = true;
            ++it;
            break;
        }
        const Eigen::Matrix3d trial = RotationSO3::exp(delta).matrix() * r;
        const double trial_cost = work.cost_at(trial);
        if (trial_cost < cost) {
            r = trial;
            cost = trial_cost;
            lambda = std::max(lambda / 10.0, 1e-12);
            stale = true;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) {
                ++it;
                break;
            }
        }
    }

    out.rotation = RotationSO3::from_matrix(r);
    out.final_cost = cost;
    out.iterations = it;
    return out;
}

double refine_iteration_probe(const EquirectImage& ref, const EquirectImage& cur,
                              const RotationSO3& r, const IcosphereGrid& grid,
                              int iterations) {
    check_pair(ref, cur);
    const RefineWork work(ref, cur, grid);
    Eigen::Matrix3d jtj;
    Eigen::Vector3d jtr;
    double cost = 0.0;
    for (int i = 0; i < iterations; ++i) {
        cost = work.assemble(r.matrix(), jtj, jtr);
        Eigen::Matrix3d damped = jtj;
        damped.diagonal() += 1e-3 * jtj.diagonal();
        const Eigen::Vector3d delta = damped.ldlt().solve(-jtr);
        const Eigen::Matrix3d trial = RotationSO3::exp(delta).matrix() * r.matrix();
        cost = std::min(cost, work.cost_at(trial));
    }
    return cost;
}

}  // namespace vgyro
