#ifndef SAGFREE_TOOLS_FD_CHECKS_HPP
#define SAGFREE_TOOLS_FD_CHECKS_HPP

#include <random>

#include <sagfree/alm.hpp>
#include <sagfree/energy.hpp>
#include <sagfree/jacobian.hpp>

namespace sagfree::fd {

struct RandomStrand {
    StrandConfig config;
    StrandState state;
    RestParams rest;
};

// Mildly bent random strand with O(1) material scales so finite differences
// stay well conditioned, plus rest parameters perturbed away from the current
// pose so that every force term is active.
inline RandomStrand make_random_strand(std::uint32_t seed, int N = 10) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    RandomStrand rs;
    rs.config.N = N;
    rs.config.radius = 0.5;
    rs.config.density = 1.0;
    rs.config.c_st = VectorXd::Zero(N - 1);
    rs.config.c_be = VectorXd::Zero(N - 1);
    rs.config.c_tw = VectorXd::Zero(N - 1);
    for (int i = 0; i < N - 1; ++i) {
        rs.config.c_st[i] = 2.0 + u(rng);
        rs.config.c_be[i] = 2.0 + u(rng);
        rs.config.c_tw[i] = 2.0 + u(rng);
    }
    rs.config.gravity = Vector3d(0.2 * u(rng), -1.0 + 0.2 * u(rng), 0.2 * u(rng));

    rs.state.x.resize(N);
    Vector3d p(0.0, 0.0, 0.0);
    Vector3d dir(1.0, 0.0, 0.0);
    for (int v = 0; v < N; ++v) {
        rs.state.x[v] = p;
        dir += 0.25 * Vector3d(u(rng), u(rng), u(rng));
        dir.normalize();
        p += dir;
    }
    rs.state.theta = VectorXd::Zero(N - 1);
    for (int e = 0; e < N - 1; ++e) rs.state.theta[e] = 0.5 * u(rng);
    init_reference_frames(rs.state);
    rs.state.velocities = VectorXd::Zero(rs.config.num_dofs());
    rs.config.validate();

    rs.rest = naive_rest_params(rs.config, rs.state);
    for (int e = 1; e <= N - 2; ++e) rs.rest.rest_len[e] *= 1.0 + 0.05 * u(rng);
    for (int i = 1; i <= N - 2; ++i) {
        // Reduced 2D rest curvature convention: slots 2 and 3 mirror 0 and 1.
        const double k0 = rs.rest.rest_curv[i][0] + 0.1 * u(rng);
        const double k1 = rs.rest.rest_curv[i][1] + 0.1 * u(rng);
        rs.rest.rest_curv[i] = Vector4d(k0, k1, k0, k1);
        rs.rest.rest_twist[i] += 0.1 * u(rng);
    }
    return rs;
}

inline double potential_energy(const StrandConfig& config, const StrandState& state, const RestParams& rest,
                               const MassMatrix& M) {
    const StrandGeometry geom = StrandGeometry::compute(config, state);
    double E = total_elastic_energy(config, geom, rest);
    for (int v = 0; v < config.N; ++v) E -= M.diag[vertex_dof(v)] * config.gravity.dot(state.x[v]);
    return E;
}

// Worst relative error of total_force against -FD(E) over active DOFs.
inline double check_total_force(const RandomStrand& rs, double h = 1e-6, bool flip_sign = false) {
    const MassMatrix M = mass_matrix(rs.config, rs.rest.rest_len);
    const StrandGeometry geom = StrandGeometry::compute(rs.config, rs.state);
    ForceVector f = total_force(rs.config, geom, rs.rest, M);
    if (flip_sign && f.values.size() > 0) f.values[f.values.size() / 2] = -f.values[f.values.size() / 2];

    const VectorXd q = pack_q(rs.state);
    VectorXd f_fd(f.values.size());
    for (int k = 0; k < f.values.size(); ++k) {
        const int dof = k + kNumClampedDofs;
        VectorXd qp = q, qm = q;
        qp[dof] += h;
        qm[dof] -= h;
        std::vector<Vector3d> xp, xm;
        VectorXd tp, tm;
        unpack_q(qp, xp, tp);
        unpack_q(qm, xm, tm);
        const StrandState sp = with_pose(rs.config, rs.state, xp, tp);
        const StrandState sm = with_pose(rs.config, rs.state, xm, tm);
        f_fd[k] = -(potential_energy(rs.config, sp, rs.rest, M) - potential_energy(rs.config, sm, rs.rest, M)) /
                  (2.0 * h);
    }
    return (f.values - f_fd).norm() / std::max(1e-30, f_fd.norm());
}

// Worst relative column error of the assembled Jacobian against FD of
// total_force over the parameter vector.
inline double check_jacobian(const RandomStrand& rs, ParamLayout::Mode mode, double h = 1e-6) {
    const MassMatrix M = mass_matrix(rs.config, rs.rest.rest_len);
    const StrandGeometry geom = StrandGeometry::compute(rs.config, rs.state);
    AlmOptions opt;
    opt.rest_shape_only = mode != ParamLayout::Mode::Full;
    opt.curvature_4d = mode == ParamLayout::Mode::RestShape4d;
    const AlmProblem prob(rs.config, rs.state, rs.rest, opt);
    const ParamLayout& layout = prob.layout();

    const VectorXd p = prob.pack(rs.rest);
    const BandedRect J = assemble_jacobian(rs.config, geom, rs.rest, layout);
    double worst = 0.0;
    for (int c = 0; c < layout.num_cols(); ++c) {
        VectorXd pp = p, pm = p;
        const double hc = h * std::max(1.0, std::abs(p[c]));
        pp[c] += hc;
        pm[c] -= hc;
        const ForceVector fp = total_force(rs.config, geom, prob.unpack(pp), M);
        const ForceVector fm = total_force(rs.config, geom, prob.unpack(pm), M);
        const VectorXd col_fd = (fp.values - fm.values) / (2.0 * hc);
        VectorXd col(col_fd.size());
        for (int r = 0; r < col.size(); ++r) col[r] = J.coeff(r, c);
        worst = std::max(worst, (col - col_fd).norm() / std::max(1.0, col_fd.norm()));
    }
    return worst;
}

struct AlmGradError {
    double general = 0.0;  // all non-rest-length entries
    double rest_len = 0.0; // rest-length entries (second-order terms dropped)
};

// FD check of the equilibrium objective gradient at lambda = 0. A moderate
// penalty keeps the objective magnitude near the gradient scale so central
// differences do not lose digits to cancellation.
inline AlmGradError check_alm_gradient(const RandomStrand& rs, double h = 1e-6) {
    AlmOptions opt;
    opt.rho = 1.0;
    const AlmProblem prob(rs.config, rs.state, rs.rest, opt);
    const VectorXd p = prob.pack(rs.rest);
    const VectorXd lambda = VectorXd::Zero(rs.config.num_active_dofs());
    const VectorXd g = prob.gradient(p, lambda);

    AlmGradError err;
    for (int c = 0; c < p.size(); ++c) {
        VectorXd pp = p, pm = p;
        const double hc = h * std::max(1.0, std::abs(p[c]));
        pp[c] += hc;
        pm[c] -= hc;
        const double fd = (prob.value(pp, lambda) - prob.value(pm, lambda)) / (2.0 * hc);
        const double rel = std::abs(g[c] - fd) / std::max(1.0, std::abs(fd));
        bool is_len = false;
        for (int i = 1; i <= rs.config.N - 2; ++i)
            if (prob.layout().col_len(i) == c) is_len = true;
        (is_len ? err.rest_len : err.general) = std::max(is_len ? err.rest_len : err.general, rel);
    }
    return err;
}

} // namespace sagfree::fd

#endif
