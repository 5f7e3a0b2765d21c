#include "sagfree/energy.hpp"

#include <cmath>

namespace sagfree {

StrandGeometry StrandGeometry::compute(const StrandConfig& config, const StrandState& state) {
    const int N = config.N;
    StrandGeometry g;
    tangents_lengths(state.x, g.tangents, g.lengths);

    g.m1.resize(N - 1);
    g.m2.resize(N - 1);
    for (int e = 0; e < N - 1; ++e)
        material_frame(state.d1[e], state.d2[e], state.theta[e], g.m1[e], g.m2[e]);

    g.kb.assign(N - 1, Vector3d::Zero());
    g.kappa.assign(N - 1, Vector4d::Zero());
    g.twists = VectorXd::Zero(N - 1);
    g.grad_kappa.assign(N - 1, Matrix11x4d::Zero());
    g.grad_twist.assign(N - 1, Vector11d::Zero());

    for (int i = 1; i <= N - 2; ++i) {
        const Vector3d& tp = g.tangents[i - 1];
        const Vector3d& tn = g.tangents[i];
        const double lp = g.lengths[i - 1];
        const double ln = g.lengths[i];
        const Vector3d kb = curvature_binormal(tp, tn, i);
        g.kb[i] = kb;
        g.kappa[i] = Vector4d(kb.dot(g.m2[i - 1]), -kb.dot(g.m1[i - 1]), kb.dot(g.m2[i]), -kb.dot(g.m1[i]));
        g.twists[i] = twist(state.theta, state.ref_twist, i);

        const double chi = 1.0 + tp.dot(tn);
        const Vector3d tilde_t = (tp + tn) / chi;
        const Vector3d frame_axes[4] = {2.0 * g.m2[i - 1] / chi, -2.0 * g.m1[i - 1] / chi,
                                        2.0 * g.m2[i] / chi, -2.0 * g.m1[i] / chi};

        Matrix11x4d& gk = g.grad_kappa[i];
        for (int j = 0; j < 4; ++j) {
            const double kj = g.kappa[i][j];
            const Vector3d d_prev = (-kj * tilde_t + tn.cross(frame_axes[j])) / lp;
            const Vector3d d_next = (-kj * tilde_t - tp.cross(frame_axes[j])) / ln;
            gk.block<3, 1>(0, j) = -d_prev;
            gk.block<3, 1>(4, j) = d_prev - d_next;
            gk.block<3, 1>(8, j) = d_next;
        }
        // Angle derivatives: only the frame-owning edge contributes.
        gk(3, 0) = -kb.dot(g.m1[i - 1]);
        gk(3, 1) = -kb.dot(g.m2[i - 1]);
        gk(7, 2) = -kb.dot(g.m1[i]);
        gk(7, 3) = -kb.dot(g.m2[i]);

        Vector11d& gt = g.grad_twist[i];
        gt.segment<3>(0) = -0.5 / lp * kb;
        gt.segment<3>(8) = 0.5 / ln * kb;
        gt.segment<3>(4) = -(gt.segment<3>(0) + gt.segment<3>(8));
        gt[3] = -1.0;
        gt[7] = 1.0;
    }
    return g;
}

double energy_inertia(const VectorXd& q, const VectorXd& q_star, const MassMatrix& M, double dt) {
    const VectorXd d = q - q_star;
    return 0.5 / (dt * dt) * d.dot(M.diag.cwiseProduct(d));
}

VectorXd grad_inertia(const VectorXd& q, const VectorXd& q_star, const MassMatrix& M, double dt) {
    return M.diag.cwiseProduct(q - q_star) / (dt * dt);
}

double energy_stretch(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int edge) {
    const double lbar = rest.rest_len[edge];
    if (!(lbar > 0.0)) throw DegenerateEdge(edge);
    const double k = rest.s * rest.alpha[edge] * config.cross_section_area() / lbar;
    const double dl = geom.lengths[edge] - lbar;
    return 0.5 * k * dl * dl;
}

Vector3d grad_stretch(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int edge) {
    const double lbar = rest.rest_len[edge];
    if (!(lbar > 0.0)) throw DegenerateEdge(edge);
    const double k = rest.s * rest.alpha[edge] * config.cross_section_area();
    return k * (geom.lengths[edge] / lbar - 1.0) * geom.tangents[edge];
}

namespace {

inline double bend_coeff(const StrandConfig& config, const RestParams& rest, int i) {
    const double r2 = config.radius * config.radius;
    return rest.s * rest.beta[i] * config.cross_section_area() * r2 /
           (4.0 * (rest.rest_len[i - 1] + rest.rest_len[i]));
}

inline double twist_coeff(const StrandConfig& config, const RestParams& rest, int i) {
    const double r2 = config.radius * config.radius;
    return rest.s * rest.gamma[i] * config.cross_section_area() * r2 /
           (rest.rest_len[i - 1] + rest.rest_len[i]);
}

} // namespace

double energy_bend(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int vertex) {
    const Vector4d dk = geom.kappa[vertex] - rest.rest_curv[vertex];
    return 0.5 * bend_coeff(config, rest, vertex) * dk.squaredNorm();
}

Vector11d grad_bend(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int vertex) {
    const Vector4d dk = geom.kappa[vertex] - rest.rest_curv[vertex];
    return bend_coeff(config, rest, vertex) * (geom.grad_kappa[vertex] * dk);
}

double energy_twist(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int vertex) {
    const double dm = geom.twists[vertex] - rest.rest_twist[vertex];
    return 0.5 * twist_coeff(config, rest, vertex) * dm * dm;
}

Vector11d grad_twist_energy(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest,
                            int vertex) {
    const double dm = geom.twists[vertex] - rest.rest_twist[vertex];
    return twist_coeff(config, rest, vertex) * dm * geom.grad_twist[vertex];
}

double total_elastic_energy(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest) {
    double E = 0.0;
    for (int e = 1; e <= config.N - 2; ++e) E += energy_stretch(config, geom, rest, e);
    for (int i = 1; i <= config.N - 2; ++i) {
        E += energy_bend(config, geom, rest, i);
        E += energy_twist(config, geom, rest, i);
    }
    return E;
}

void scatter_stencil(const Vector11d& g, int vertex, VectorXd& out) {
    const int base = vertex_dof(vertex - 1);
    for (int r = 0; r < 11; ++r) {
        const int dof = base + r;
        if (dof >= kNumClampedDofs) out[active_index(dof)] += g[r];
    }
}

ForceVector external_force(const StrandConfig& config, const MassMatrix& M) {
    ForceVector f;
    f.values = VectorXd::Zero(config.num_active_dofs());
    for (int v = 0; v < config.N; ++v) {
        const double m = M.diag[vertex_dof(v)];
        for (int c = 0; c < 3; ++c) {
            const int dof = vertex_dof(v) + c;
            if (dof >= kNumClampedDofs) f.values[active_index(dof)] = m * config.gravity[c];
        }
    }
    return f;
}

ForceVector total_force(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest,
                        const MassMatrix& M) {
    ForceVector f = external_force(config, M);
    // Stretching: equal and opposite on the edge endpoints.
    for (int e = 1; e <= config.N - 2; ++e) {
        const Vector3d g = grad_stretch(config, geom, rest, e);
        for (int c = 0; c < 3; ++c) {
            const int dof_lo = vertex_dof(e) + c;
            const int dof_hi = vertex_dof(e + 1) + c;
            if (dof_lo >= kNumClampedDofs) f.values[active_index(dof_lo)] += g[c];
            if (dof_hi >= kNumClampedDofs) f.values[active_index(dof_hi)] -= g[c];
        }
    }
    for (int i = 1; i <= config.N - 2; ++i) {
        const Vector11d gb = -grad_bend(config, geom, rest, i);
        scatter_stencil(gb, i, f.values);
        const Vector11d gt = -grad_twist_energy(config, geom, rest, i);
        scatter_stencil(gt, i, f.values);
    }
    return f;
}

} // namespace sagfree
