#include "sagfree/sim.hpp"

#include <algorithm>
#include <cmath>

#include "sagfree/banded.hpp"

namespace sagfree {

double kinetic_energy(const StrandState& state, const MassMatrix& M) {
    return 0.5 * state.velocities.dot(M.diag.cwiseProduct(state.velocities));
}

namespace {

// Adds the lower triangle of an 11x11 stencil block rooted at interior
// vertex i, dropping clamped DOFs.
void add_stencil_block(BandedSym& H, const Eigen::Matrix<double, 11, 11>& B, int i) {
    const int base = vertex_dof(i - 1);
    for (int r = 0; r < 11; ++r) {
        const int dr = base + r;
        if (dr < kNumClampedDofs) continue;
        for (int c = 0; c <= r; ++c) {
            const int dc = base + c;
            if (dc < kNumClampedDofs) continue;
            H.add(active_index(dr), active_index(dc), B(r, c));
        }
    }
}

void add_edge_block(BandedSym& H, const Eigen::Matrix3d& B, int edge) {
    // Local DOFs: x_edge (sign +), x_{edge+1} (sign -off-diagonal).
    const int lo = vertex_dof(edge);
    const int hi = vertex_dof(edge + 1);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            const int pairs[4][3] = {{lo + r, lo + c, +1}, {hi + r, hi + c, +1},
                                     {hi + r, lo + c, -1}, {lo + r, hi + c, -1}};
            for (const auto& pr : pairs) {
                if (pr[0] < kNumClampedDofs || pr[1] < kNumClampedDofs) continue;
                if (pr[0] < pr[1]) continue; // lower triangle only
                H.add(active_index(pr[0]), active_index(pr[1]), pr[2] * B(r, c));
            }
        }
}

} // namespace

StrandState sim_step(const StrandConfig& config, const StrandState& state, const RestParams& rest,
                     const MassMatrix& M, double dt) {
    const int N = config.N;
    const int n = config.num_active_dofs();
    const double dt2 = dt * dt;
    const StrandGeometry geom = StrandGeometry::compute(config, state);

    const VectorXd q = pack_q(state);
    // q* from explicit prediction with gravity as the only external force.
    VectorXd f_ext_full = VectorXd::Zero(config.num_dofs());
    for (int v = 0; v < N; ++v)
        f_ext_full.segment<3>(vertex_dof(v)) = M.diag[vertex_dof(v)] * config.gravity;
    const VectorXd q_star = q + dt * state.velocities + dt2 * f_ext_full.cwiseQuotient(M.diag);

    // Gradient of the step objective over active DOFs at q.
    const VectorXd grad_in_full = M.diag.cwiseProduct(q - q_star) / dt2;
    VectorXd grad(n);
    for (int k = 0; k < n; ++k) grad[k] = grad_in_full[k + kNumClampedDofs];
    for (int e = 1; e <= N - 2; ++e) {
        const Vector3d g = grad_stretch(config, geom, rest, e);
        for (int c = 0; c < 3; ++c) {
            const int dof_lo = vertex_dof(e) + c;
            const int dof_hi = vertex_dof(e + 1) + c;
            if (dof_lo >= kNumClampedDofs) grad[active_index(dof_lo)] -= g[c];
            if (dof_hi >= kNumClampedDofs) grad[active_index(dof_hi)] += g[c];
        }
    }
    for (int i = 1; i <= N - 2; ++i) {
        scatter_stencil(grad_bend(config, geom, rest, i), i, grad);
        scatter_stencil(grad_twist_energy(config, geom, rest, i), i, grad);
    }

    BandedSym H(n, std::min(10, n - 1));
    for (int k = 0; k < n; ++k) H.add(k, k, M.diag[k + kNumClampedDofs] / dt2);
    const double area = config.cross_section_area();
    for (int e = 1; e <= N - 2; ++e) {
        const double k_st = rest.s * rest.alpha[e] * area;
        const double l = geom.lengths[e];
        const double lbar = rest.rest_len[e];
        const Vector3d& t = geom.tangents[e];
        const Eigen::Matrix3d ttT = t * t.transpose();
        const double transverse = std::max(0.0, 1.0 / lbar - 1.0 / l);
        const Eigen::Matrix3d B = k_st * (ttT / lbar + transverse * (Eigen::Matrix3d::Identity() - ttT));
        add_edge_block(H, B, e);
    }
    const double r2 = config.radius * config.radius;
    for (int i = 1; i <= N - 2; ++i) {
        const double sum = rest.rest_len[i - 1] + rest.rest_len[i];
        const double cb = rest.s * rest.beta[i] * area * r2 / (4.0 * sum);
        const double ct = rest.s * rest.gamma[i] * area * r2 / sum;
        const Matrix11x4d& gk = geom.grad_kappa[i];
        const Vector11d& gm = geom.grad_twist[i];
        const Eigen::Matrix<double, 11, 11> B = cb * gk * gk.transpose() + ct * gm * gm.transpose();
        add_stencil_block(H, B, i);
    }

    const LdlFactor F = ldlt_factorize(H);
    const VectorXd dq = F.solve(-grad);
    const double gn = grad.norm();
    if (gn > 0.0) {
        const double res = (H.matvec(dq) + grad).norm() / gn;
        if (res > 1e-6) throw SolverFailure("sim_step: linear solve residual " + std::to_string(res));
    }

    VectorXd q_new = q;
    for (int k = 0; k < n; ++k) q_new[k + kNumClampedDofs] += dq[k];

    std::vector<Vector3d> x_new;
    VectorXd theta_new;
    unpack_q(q_new, x_new, theta_new);
    StrandState next = with_pose(config, state, x_new, theta_new);
    next.velocities = (q_new - q) / dt;
    renormalize_frames_if_needed(next);
    return next;
}

RootKeyframe root_at(const std::vector<RootKeyframe>& motion, double time) {
    RootKeyframe k;
    if (motion.empty()) return k;
    if (time <= motion.front().time) return motion.front();
    if (time >= motion.back().time) return motion.back();
    for (size_t s = 1; s < motion.size(); ++s) {
        if (time <= motion[s].time) {
            const RootKeyframe& a = motion[s - 1];
            const RootKeyframe& b = motion[s];
            const double span = b.time - a.time;
            const double w = span > 0.0 ? (time - a.time) / span : 1.0;
            RootKeyframe out;
            out.time = time;
            out.x0 = (1.0 - w) * a.x0 + w * b.x0;
            out.theta0 = (1.0 - w) * a.theta0 + w * b.theta0;
            out.x1 = (1.0 - w) * a.x1 + w * b.x1;
            return out;
        }
    }
    return motion.back();
}

Trajectory simulate(const StrandConfig& config, const StrandState& state, const RestParams& rest,
                    const SimOptions& options) {
    // Mass is lumped from the initial pose's segment lengths: the physical
    // rod is fixed, so changing the rest-length preload must not change its
    // mass (the optimizer makes the same assumption).
    std::vector<Vector3d> tangents;
    VectorXd lengths;
    tangents_lengths(state.x, tangents, lengths);
    const MassMatrix M = mass_matrix(config, lengths);
    Trajectory traj;
    StrandState cur = state;
    traj.frames.push_back(cur.x);
    traj.kinetic_energy.push_back(kinetic_energy(cur, M));

    double time = 0.0;
    for (int frame = 0; frame < options.frames; ++frame) {
        for (int step = 0; step < options.steps_per_frame; ++step) {
            time += options.dt;
            if (!options.root_motion.empty()) {
                const RootKeyframe key = root_at(options.root_motion, time);
                std::vector<Vector3d> x_new = cur.x;
                VectorXd theta_new = cur.theta;
                const Vector3d old_x0 = cur.x[0];
                const Vector3d old_x1 = cur.x[1];
                const double old_t0 = cur.theta[0];
                x_new[0] = key.x0;
                x_new[1] = key.x1;
                theta_new[0] = key.theta0;
                StrandState moved = with_pose(config, cur, x_new, theta_new);
                moved.velocities.segment<3>(0) = (key.x0 - old_x0) / options.dt;
                moved.velocities.segment<3>(4) = (key.x1 - old_x1) / options.dt;
                moved.velocities[3] = (key.theta0 - old_t0) / options.dt;
                cur = moved;
            }
            cur = sim_step(config, cur, rest, M, options.dt);
        }
        traj.frames.push_back(cur.x);
        traj.kinetic_energy.push_back(kinetic_energy(cur, M));
    }
    return traj;
}

} // namespace sagfree
