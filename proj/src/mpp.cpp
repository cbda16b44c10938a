#include "vgyro/mpp.hpp"

#include <algorithm>
#include <cmath>

#include "vgyro/kernels.hpp"

namespace vgyro {

namespace {

void check_compatible(const MppModel& a, const MppModel& b) {
    if (a.grid.level != b.grid.level || a.weights.size() != b.weights.size() ||
        a.lambda_g != b.lambda_g) {
        throw Error("grid-mismatch", "MPP models must share grid level and lambda_g");
    }
}

// Gref evaluated at its own grid vertices.
std::vector<double> self_values(const MppModel& g) {
    const auto& backend = kernels::active_backend();
    const double inv_l2 = 1.0 / (g.lambda_g * g.lambda_g);
    std::vector<double> out(g.weights.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double q[3] = {g.vx[k], g.vy[k], g.vz[k]};
        out[k] = backend.mixture_value(g.vx.data(), g.vy.data(), g.vz.data(),
                                       g.weights.data(), g.weights.size(), q, inv_l2,
                                       g.dot_cutoff);
    }
    return out;
}

}  // namespace

MppModel build_mpp(const EquirectImage& img, const IcosphereGrid& grid,
                   double lambda_g) {
    if (lambda_g <= 0.0) throw Error("invalid-argument", "lambda_g must be > 0");

    MppModel m;
    m.grid = grid;
    m.lambda_g = lambda_g;
    m.dot_cutoff = std::max(-2.0, 1.0 + lambda_g * lambda_g * std::log(1e-8));

    const std::size_t n = grid.vertices.size();
    m.vx.resize(n);
    m.vy.resize(n);
    m.vz.resize(n);
    std::vector<double> us(n), vs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Direction& v = grid.vertices[i];
        m.vx[i] = v.x();
        m.vy[i] = v.y();
        m.vz[i] = v.z();
        const PixelCoord pc = direction_to_equirect(v, img.width, img.height);
        us[i] = pc.u;
        vs[i] = pc.v;
    }
    m.weights.resize(n);
    kernels::active_backend().bilinear_many(img.gray.data(), img.width, img.height,
                                            us.data(), vs.data(), n, m.weights.data());
    return m;
}

double mpp_value(const MppModel& g, const Direction& x) {
    const double inv_l2 = 1.0 / (g.lambda_g * g.lambda_g);
    const double q[3] = {x.x(), x.y(), x.z()};
    return kernels::active_backend().mixture_value(g.vx.data(), g.vy.data(),
                                                   g.vz.data(), g.weights.data(),
                                                   g.weights.size(), q, inv_l2,
                                                   g.dot_cutoff);
}

double mpp_ssd_cost(const MppModel& gref, const MppModel& greq, const RotationSO3& r) {
    check_compatible(gref, greq);
    const auto& backend = kernels::active_backend();
    const double inv_l2 = 1.0 / (greq.lambda_g * greq.lambda_g);
    const Eigen::Matrix3d m = r.matrix();

    const std::vector<double> a = self_values(gref);
    std::vector<double> b(a.size());
    for (std::size_t k = 0; k < b.size(); ++k) {
        const Direction y = m * Direction(gref.vx[k], gref.vy[k], gref.vz[k]);
        const double q[3] = {y.x(), y.y(), y.z()};
        b[k] = backend.mixture_value(greq.vx.data(), greq.vy.data(), greq.vz.data(),
                                     greq.weights.data(), greq.weights.size(), q,
                                     inv_l2, greq.dot_cutoff);
    }
    return backend.ssd(a.data(), b.data(), a.size());
}

namespace {

struct YawProblem {
    const MppModel* req;
    std::vector<double> a;           // Gref at grid vertices
    std::vector<double> bx, by, bz;  // Ry(pitch) Rx(roll) * x_k
    double inv_l2;

    YawProblem(const MppModel& gref, const MppModel& greq, const RollPitch& rp)
        : req(&greq), a(self_values(gref)),
          inv_l2(1.0 / (greq.lambda_g * greq.lambda_g)) {
        const Eigen::Matrix3d tilt =
            (RotationSO3::rot_y(rp.pitch) * RotationSO3::rot_x(rp.roll)).matrix();
        const std::size_t n = gref.weights.size();
        bx.resize(n);
        by.resize(n);
        bz.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const Direction b = tilt * Direction(gref.vx[k], gref.vy[k], gref.vz[k]);
            bx[k] = b.x();
            by[k] = b.y();
            bz[k] = b.z();
        }
    }

    double cost(double psi) const {
        const auto& backend = kernels::active_backend();
        const double c = std::cos(psi), s = std::sin(psi);
        double acc = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double q[3] = {c * bx[k] - s * by[k], s * bx[k] + c * by[k], bz[k]};
            const double g = backend.mixture_value(req->vx.data(), req->vy.data(),
                                                   req->vz.data(), req->weights.data(),
                                                   req->weights.size(), q, inv_l2,
                                                   req->dot_cutoff);
            const double d = a[k] - g;
            acc += d * d;
        }
        return acc;
    }

    YawCostDerivs cost_derivs(double psi) const {
        const auto& backend = kernels::active_backend();
        const double c = std::cos(psi), s = std::sin(psi);
        YawCostDerivs out;
        for (std::size_t k = 0; k < a.size(); ++k) {
            // y = Rz(psi) b, y' = z x y, y'' = z (z.y) - y
            const double q[3] = {c * bx[k] - s * by[k], s * bx[k] + c * by[k], bz[k]};
            const double q1[3] = {-q[1], q[0], 0.0};
            const double q2[3] = {-q[0], -q[1], 0.0};
            const auto md = backend.mixture_derivs(
                req->vx.data(), req->vy.data(), req->vz.data(), req->weights.data(),
                req->weights.size(), q, q1, q2, inv_l2, req->dot_cutoff);
            const double r = a[k] - md.g;
            out.cost += r * r;
            out.d1 += -2.0 * r * md.d1;
            out.d2 += 2.0 * (md.d1 * md.d1 - r * md.d2);
        }
        return out;
    }
};

struct StartResult {
    double psi = 0.0;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

StartResult newton_from(const YawProblem& prob, double psi0, const YawOptions& opts) {
    StartResult res;
    res.psi = psi0;
    res.cost = prob.cost(psi0);

    for (int it = 0; it < opts.max_iters; ++it) {
        const YawCostDerivs d = prob.cost_derivs(res.psi);
        double step = -d.d1 / std::max(d.d2, 1e-12);
        step = std::clamp(step, -M_PI / 4.0, M_PI / 4.0);

        bool accepted = false;
        for (int halving = 0; halving <= 20; ++halving) {
            const double trial = res.psi + step;
            const double trial_cost = prob.cost(trial);
            if (trial_cost < res.cost) {
                res.psi = trial;
                res.cost = trial_cost;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        ++res.iterations;
        if (!accepted) break;
        if (std::abs(step) < opts.step_tol) {
            res.converged = true;
            break;
        }
    }
    // A start already sitting at a stationary point counts as converged.
    if (!res.converged && res.iterations > 0) {
        const YawCostDerivs d = prob.cost_derivs(res.psi);
        const double step = std::abs(d.d1 / std::max(d.d2, 1e-12));
        if (step < opts.step_tol) res.converged = true;
    }
    return res;
}

}  // namespace

YawCostDerivs mpp_yaw_cost_derivs(const MppModel& gref, const MppModel& greq,
                                  const RollPitch& rp, double psi) {
    check_compatible(gref, greq);
    return YawProblem(gref, greq, rp).cost_derivs(psi);
}

YawEstimate optimize_yaw(const MppModel& gref, const MppModel& greq,
                         const RollPitch& rp, double yaw0, const YawOptions& opts) {
    check_compatible(gref, greq);
    const YawProblem prob(gref, greq, rp);

    std::vector<double> starts = {yaw0};
    if (opts.multistart) {
        starts.push_back(yaw0 + M_PI / 2.0);
        starts.push_back(yaw0 + M_PI);
        starts.push_back(yaw0 + 1.5 * M_PI);
    }

    StartResult best;
    bool first = true;
    for (const double s : starts) {
        const StartResult r = newton_from(prob, s, opts);
        if (first || r.cost < best.cost) {
            best = r;
            first = false;
        }
    }

    YawEstimate est;
    est.yaw = wrap_pi(best.psi);
    est.final_cost = best.cost;
    est.iterations = best.iterations;
    est.converged = best.converged;
    return est;
}

}  // namespace vgyro
