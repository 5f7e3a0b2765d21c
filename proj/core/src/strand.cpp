#include "sagfree/strand.hpp"

#include <algorithm>
#include <cmath>

namespace sagfree {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vector3d any_orthogonal_unit(const Vector3d& t) {
    // Cross with the axis least aligned with t.
    int k = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(t[i]) < std::abs(t[k])) k = i;
    Vector3d axis = Vector3d::Zero();
    axis[k] = 1.0;
    return t.cross(axis).normalized();
}

Vector3d rotate_about_axis(const Vector3d& v, const Vector3d& axis, double angle) {
    // Rodrigues with unit axis.
    const double c = std::cos(angle), s = std::sin(angle);
    return v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c));
}

} // namespace

double StrandConfig::cross_section_area() const { return kPi * radius * radius; }

void StrandConfig::validate() const {
    if (N < 4) throw BadDimension("StrandConfig: N must be >= 4");
    if (radius <= 0.0) throw BadDimension("StrandConfig: radius must be positive");
    if (density <= 0.0) throw BadDimension("StrandConfig: density must be positive");
    if (c_st.size() != N - 1 || c_be.size() != N - 1 || c_tw.size() != N - 1)
        throw BadDimension("StrandConfig: stiffness arrays must have size N-1");
    for (int i = 1; i <= N - 2; ++i)
        if (c_st[i] <= 0.0 || c_be[i] <= 0.0 || c_tw[i] <= 0.0)
            throw BadDimension("StrandConfig: stiffness coefficients must be positive");
}

std::pair<StrandConfig, StrandState> make_scene(SceneKind kind, int N, double length) {
    if (N < 4) throw BadDimension("make_scene: N must be >= 4");
    if (length <= 0.0) throw BadDimension("make_scene: length must be positive");

    StrandConfig config;
    config.N = N;
    config.c_st = VectorXd::Constant(N - 1, 1e9);
    config.c_be = VectorXd::Constant(N - 1, 1e9);
    config.c_tw = VectorXd::Constant(N - 1, 1e9);

    // Scene materials are chosen so that gravity is a substantial load for
    // the default stiffness: thin dense strands sag visibly under naive rest
    // parameters, which is what makes the initialization problem nontrivial.
    switch (kind) {
    case SceneKind::Vertical:
        config.density = 4000.0;
        config.radius = 2e-3;
        break;
    case SceneKind::Horizontal:
        config.density = 1000.0;
        config.radius = 1e-3;
        break;
    case SceneKind::Coil:
        // A softer material than the straight scenes: the coil is used for
        // rest-curvature layout comparisons, where very stiff rods push the
        // curvature rows of the Newton system far beyond the soft rest-shape
        // rows and out of double-precision range.
        config.c_st = VectorXd::Constant(N - 1, 1e6);
        config.c_be = VectorXd::Constant(N - 1, 1e6);
        config.c_tw = VectorXd::Constant(N - 1, 1e6);
        break;
    }

    StrandState state;
    state.x.resize(N);
    const double h = length / (N - 1);
    const Vector3d down = config.gravity.normalized();

    switch (kind) {
    case SceneKind::Vertical:
        for (int i = 0; i < N; ++i) state.x[i] = i * h * down;
        break;
    case SceneKind::Horizontal:
        for (int i = 0; i < N; ++i) state.x[i] = Vector3d(i * h, 0.0, 0.0);
        break;
    case SceneKind::Coil: {
        // Helix around the gravity axis, 4 turns over the arc length, with a
        // transverse speed fraction of 0.7. Uniform parameter steps give
        // exactly uniform chord lengths.
        const double turns = 4.0;
        const double omega = 2.0 * kPi * turns / length;
        const double transverse = 0.7;
        const double a = transverse / omega;
        const double descend = std::sqrt(1.0 - transverse * transverse);
        for (int i = 0; i < N; ++i) {
            const double s = i * h;
            state.x[i] = Vector3d(a * std::cos(omega * s), 0.0, a * std::sin(omega * s)) + descend * s * down;
        }
        break;
    }
    }

    state.theta = VectorXd::Zero(N - 1);
    state.ref_twist = VectorXd::Zero(N - 1);
    state.velocities = VectorXd::Zero(4 * N - 1);
    init_reference_frames(state);
    return {config, state};
}

SceneKind parse_scene_kind(const std::string& name) {
    if (name == "vertical") return SceneKind::Vertical;
    if (name == "horizontal") return SceneKind::Horizontal;
    if (name == "coil") return SceneKind::Coil;
    throw ConfigError("unknown scene kind: " + name);
}

void tangents_lengths(const std::vector<Vector3d>& x, std::vector<Vector3d>& t, VectorXd& l) {
    const int ne = static_cast<int>(x.size()) - 1;
    if (ne < 1) throw BadDimension("tangents_lengths: need at least 2 vertices");
    t.resize(ne);
    l.resize(ne);
    double total = 0.0;
    for (int e = 0; e < ne; ++e) {
        l[e] = (x[e + 1] - x[e]).norm();
        total += l[e];
    }
    for (int e = 0; e < ne; ++e) {
        if (l[e] <= 1e-12 * total || !(l[e] > 0.0)) throw DegenerateEdge(e);
        t[e] = (x[e + 1] - x[e]) / l[e];
    }
}

Vector3d parallel_transport(const Vector3d& v, const Vector3d& t_from, const Vector3d& t_to) {
    Vector3d b = t_from.cross(t_to);
    const double nb = b.norm();
    if (nb < 1e-14) {
        if (t_from.dot(t_to) > 0.0) return v;
        // Antiparallel fallback: half turn about an arbitrary orthogonal axis.
        const Vector3d a = any_orthogonal_unit(t_from);
        return 2.0 * a.dot(v) * a - v;
    }
    b /= nb;
    const Vector3d n0 = b.cross(t_from);
    const Vector3d n1 = b.cross(t_to);
    return v.dot(t_from) * t_to + v.dot(n0) * n1 + v.dot(b) * b;
}

double signed_angle(const Vector3d& u, const Vector3d& v, const Vector3d& axis) {
    return std::atan2(axis.dot(u.cross(v)), u.dot(v));
}

void material_frame(const Vector3d& d1, const Vector3d& d2, double theta, Vector3d& m1, Vector3d& m2) {
    const double c = std::cos(theta), s = std::sin(theta);
    m1 = c * d1 + s * d2;
    m2 = -s * d1 + c * d2;
}

Vector3d curvature_binormal(const Vector3d& t_prev, const Vector3d& t_next, int vertex) {
    const double chi = 1.0 + t_prev.dot(t_next);
    if (chi < 1e-10) throw AntiparallelTangents(vertex);
    return 2.0 * t_prev.cross(t_next) / chi;
}

Vector4d curvature4(const Vector3d& t_prev, const Vector3d& t_next,
                    const Vector3d& m1_prev, const Vector3d& m2_prev,
                    const Vector3d& m1_next, const Vector3d& m2_next, int vertex) {
    const Vector3d kb = curvature_binormal(t_prev, t_next, vertex);
    return Vector4d(kb.dot(m2_prev), -kb.dot(m1_prev), kb.dot(m2_next), -kb.dot(m1_next));
}

double twist(const VectorXd& theta, const VectorXd& ref_twist, int i) {
    return theta[i] - theta[i - 1] + ref_twist[i];
}

double update_reference_twist(const Vector3d& d1_prev, const Vector3d& d1_cur,
                              const Vector3d& t_prev, const Vector3d& t_cur,
                              double previous_ref_twist) {
    Vector3d transported = parallel_transport(d1_prev, t_prev, t_cur);
    transported = rotate_about_axis(transported, t_cur, previous_ref_twist);
    return previous_ref_twist + signed_angle(transported, d1_cur, t_cur);
}

void init_reference_frames(StrandState& state) {
    const int N = state.num_vertices();
    std::vector<Vector3d> t;
    VectorXd l;
    tangents_lengths(state.x, t, l);

    state.d1.resize(N - 1);
    state.d2.resize(N - 1);
    state.d1[0] = any_orthogonal_unit(t[0]);
    state.d2[0] = t[0].cross(state.d1[0]);
    for (int e = 1; e < N - 1; ++e) {
        Vector3d u = parallel_transport(state.d1[e - 1], t[e - 1], t[e]);
        u -= u.dot(t[e]) * t[e];
        u.normalize();
        state.d1[e] = u;
        state.d2[e] = t[e].cross(u);
    }
    // Space-parallel frames carry zero reference twist by construction.
    state.ref_twist = VectorXd::Zero(N - 1);
    if (state.theta.size() != N - 1) state.theta = VectorXd::Zero(N - 1);
    if (state.velocities.size() != 4 * N - 1) state.velocities = VectorXd::Zero(4 * N - 1);
}

StrandState with_pose(const StrandConfig& config, const StrandState& base,
                      const std::vector<Vector3d>& x_new, const VectorXd& theta_new) {
    const int N = config.N;
    if (static_cast<int>(x_new.size()) != N || theta_new.size() != N - 1)
        throw DimensionMismatch("with_pose: pose dimensions do not match the strand");

    std::vector<Vector3d> t_old, t_new;
    VectorXd l_old, l_new;
    tangents_lengths(base.x, t_old, l_old);
    tangents_lengths(x_new, t_new, l_new);

    StrandState out;
    out.x = x_new;
    out.theta = theta_new;
    out.velocities = base.velocities;
    out.d1.resize(N - 1);
    out.d2.resize(N - 1);
    for (int e = 0; e < N - 1; ++e) {
        Vector3d u = parallel_transport(base.d1[e], t_old[e], t_new[e]);
        u -= u.dot(t_new[e]) * t_new[e];
        u.normalize();
        out.d1[e] = u;
        out.d2[e] = t_new[e].cross(u);
    }
    out.ref_twist = VectorXd::Zero(N - 1);
    for (int i = 1; i <= N - 2; ++i)
        out.ref_twist[i] = update_reference_twist(out.d1[i - 1], out.d1[i], t_new[i - 1], t_new[i],
                                                  base.ref_twist[i]);
    return out;
}

void renormalize_frames_if_needed(StrandState& state) {
    std::vector<Vector3d> t;
    VectorXd l;
    tangents_lengths(state.x, t, l);
    for (size_t e = 0; e < state.d1.size(); ++e) {
        const double drift = std::abs(state.d1[e].norm() - 1.0) + std::abs(state.d1[e].dot(t[e])) +
                             std::abs(state.d2[e].norm() - 1.0);
        if (drift > 1e-12) {
            Vector3d u = state.d1[e] - state.d1[e].dot(t[e]) * t[e];
            u.normalize();
            state.d1[e] = u;
            state.d2[e] = t[e].cross(u);
        }
    }
}

MassMatrix mass_matrix(const StrandConfig& config, const VectorXd& rest_len) {
    const int N = config.N;
    if (rest_len.size() != N - 1) throw DimensionMismatch("mass_matrix: rest_len size");
    for (int e = 0; e < N - 1; ++e)
        if (!(rest_len[e] > 0.0)) throw BadDimension("mass_matrix: rest lengths must be positive");

    const double lam = config.density * config.cross_section_area(); // mass per unit length
    MassMatrix M;
    M.diag = VectorXd::Zero(config.num_dofs());
    for (int v = 0; v < N; ++v) {
        double m = 0.0;
        if (v > 0) m += 0.5 * lam * rest_len[v - 1];
        if (v < N - 1) m += 0.5 * lam * rest_len[v];
        M.diag.segment<3>(vertex_dof(v)).setConstant(m);
    }
    for (int e = 0; e < N - 1; ++e)
        M.diag[theta_dof(e)] = lam * rest_len[e] * config.radius * config.radius / 2.0;
    return M;
}

void stiffness_scaling(const StrandConfig& config, double& s, VectorXd& alpha, VectorXd& beta, VectorXd& gamma) {
    const int N = config.N;
    double sum = 0.0;
    for (int i = 1; i <= N - 2; ++i) sum += config.c_st[i] + config.c_be[i] + config.c_tw[i];
    s = sum / (3.0 * (N - 2));
    alpha = config.c_st / s;
    beta = config.c_be / s;
    gamma = config.c_tw / s;
}

RestParams naive_rest_params(const StrandConfig& config, const StrandState& state) {
    const int N = config.N;
    std::vector<Vector3d> t;
    VectorXd l;
    tangents_lengths(state.x, t, l);

    std::vector<Vector3d> m1(N - 1), m2(N - 1);
    for (int e = 0; e < N - 1; ++e) material_frame(state.d1[e], state.d2[e], state.theta[e], m1[e], m2[e]);

    RestParams rest;
    rest.rest_len = l;
    rest.rest_curv.assign(N - 1, Vector4d::Zero());
    rest.rest_twist = VectorXd::Zero(N - 1);
    for (int i = 1; i <= N - 2; ++i) {
        rest.rest_curv[i] = curvature4(t[i - 1], t[i], m1[i - 1], m2[i - 1], m1[i], m2[i], i);
        rest.rest_twist[i] = twist(state.theta, state.ref_twist, i);
    }
    stiffness_scaling(config, rest.s, rest.alpha, rest.beta, rest.gamma);
    return rest;
}

VectorXd pack_q(const StrandState& state) {
    const int N = state.num_vertices();
    VectorXd q(4 * N - 1);
    for (int v = 0; v < N; ++v) q.segment<3>(vertex_dof(v)) = state.x[v];
    for (int e = 0; e < N - 1; ++e) q[theta_dof(e)] = state.theta[e];
    return q;
}

void unpack_q(const VectorXd& q, std::vector<Vector3d>& x, VectorXd& theta) {
    const int N = static_cast<int>((q.size() + 1) / 4);
    x.resize(N);
    theta.resize(N - 1);
    for (int v = 0; v < N; ++v) x[v] = q.segment<3>(vertex_dof(v));
    for (int e = 0; e < N - 1; ++e) theta[e] = q[theta_dof(e)];
}

} // namespace sagfree
