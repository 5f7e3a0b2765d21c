#ifndef SAGFREE_STRAND_HPP
#define SAGFREE_STRAND_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sagfree/errors.hpp"

namespace sagfree {

using Eigen::Vector3d;
using Eigen::Vector4d;
using Eigen::VectorXd;

// Material and discretization parameters of a single strand.
//
// Indexing conventions used throughout:
//   edges    e = 0..N-2; edge 0 belongs to the clamped root and carries no
//            stretching energy.
//   interior vertices i = 1..N-2; vertex-indexed arrays are sized N-1 with
//            index 0 unused so that index i always means vertex i.
struct StrandConfig {
    int N = 0;
    double radius = 0.005;
    double density = 1000.0;
    VectorXd c_st; // per edge, size N-1 (entry 0 unused)
    VectorXd c_be; // per interior vertex, size N-1 (entry 0 unused)
    VectorXd c_tw; // per interior vertex, size N-1 (entry 0 unused)
    Vector3d gravity{0.0, -9.81, 0.0};
    double dt = 1.0 / 240.0; // forward sim only

    int num_edges() const { return N - 1; }
    int num_dofs() const { return 4 * N - 1; }
    int num_active_dofs() const { return 4 * N - 8; }
    double cross_section_area() const;

    void validate() const;
};

// Generalized positions plus the reference-frame state that makes twist
// well defined.
struct StrandState {
    std::vector<Vector3d> x;      // N vertex positions
    VectorXd theta;               // N-1 edge angles
    std::vector<Vector3d> d1, d2; // reference directors per edge
    VectorXd ref_twist;           // per vertex, size N-1 (entry 0 unused)
    VectorXd velocities;          // generalized, size 4N-1

    int num_vertices() const { return static_cast<int>(x.size()); }
};

struct RestParams {
    VectorXd rest_len;              // per edge, size N-1 (entry 0 fixed, excluded from optimization)
    std::vector<Vector4d> rest_curv; // per vertex, size N-1 (entry 0 unused)
    VectorXd rest_twist;            // per vertex, size N-1 (entry 0 unused)
    VectorXd alpha;                 // per edge, size N-1 (entry 0 unused)
    VectorXd beta;                  // per vertex, size N-1 (entry 0 unused)
    VectorXd gamma;                 // per vertex, size N-1 (entry 0 unused)
    double s = 1.0;                 // global stiffness scale
};

// Diagonal generalized mass matrix over all 4N-1 DOFs. Built once from the
// initial rest lengths and treated as constant afterwards.
struct MassMatrix {
    VectorXd diag; // size 4N-1
};

// Generalized DOF layout q = [x_0, theta_0, x_1, theta_1, ..., x_{N-1}].
inline int vertex_dof(int v) { return 4 * v; }
inline int theta_dof(int e) { return 4 * e + 3; }
// The root clamp fixes x_0, theta_0, x_1: global DOFs 0..6.
inline constexpr int kNumClampedDofs = 7;
inline int active_index(int global_dof) { return global_dof - kNumClampedDofs; }

enum class SceneKind { Vertical, Horizontal, Coil };

// Clamped-root scenes with uniform segment lengths.
//   vertical:   collinear along the gravity axis, root on top;
//   horizontal: collinear along +x;
//   coil:       helix around the gravity axis (4 turns, lean angle such that
//               the tangent makes a fixed pitch; see strand.cpp).
std::pair<StrandConfig, StrandState> make_scene(SceneKind kind, int N, double length);

SceneKind parse_scene_kind(const std::string& name);

// Geometry primitives -------------------------------------------------------

// t_i = (x_{i+1} - x_i)/l_i. Throws DegenerateEdge when an edge is shorter
// than 1e-12 times the strand length.
void tangents_lengths(const std::vector<Vector3d>& x, std::vector<Vector3d>& t, VectorXd& l);

// Minimal rotation taking t_from to t_to, applied to v. Unit tangents
// expected. Antiparallel tangents fall back to a half-turn about an arbitrary
// axis orthogonal to t_from.
Vector3d parallel_transport(const Vector3d& v, const Vector3d& t_from, const Vector3d& t_to);

double signed_angle(const Vector3d& u, const Vector3d& v, const Vector3d& axis);

// m1 = cos(theta) d1 + sin(theta) d2, m2 = -sin(theta) d1 + cos(theta) d2.
void material_frame(const Vector3d& d1, const Vector3d& d2, double theta, Vector3d& m1, Vector3d& m2);

Vector3d curvature_binormal(const Vector3d& t_prev, const Vector3d& t_next, int vertex);

// Four-dimensional curvature at interior vertex i:
// (kb.m2_prev, -kb.m1_prev, kb.m2_next, -kb.m1_next).
Vector4d curvature4(const Vector3d& t_prev, const Vector3d& t_next,
                    const Vector3d& m1_prev, const Vector3d& m2_prev,
                    const Vector3d& m1_next, const Vector3d& m2_next, int vertex);

// Twist m_i = theta_i - theta_{i-1} + ref_twist_i.
double twist(const VectorXd& theta, const VectorXd& ref_twist, int i);

// Reference twist at vertex i, updated incrementally from its previous value
// so that accumulated turns beyond pi are tracked.
double update_reference_twist(const Vector3d& d1_prev, const Vector3d& d1_cur,
                              const Vector3d& t_prev, const Vector3d& t_cur,
                              double previous_ref_twist);

// State construction and updates --------------------------------------------

// Builds space-parallel reference frames along the strand (zero reference
// twist) for freshly authored geometry.
void init_reference_frames(StrandState& state);

// Returns a copy of `base` moved to the given pose: frames are time-parallel
// transported edge by edge from the base tangents and reference twists are
// recomputed incrementally. Velocities are copied unchanged.
StrandState with_pose(const StrandConfig& config, const StrandState& base,
                      const std::vector<Vector3d>& x_new, const VectorXd& theta_new);

// Frame orthonormality check; drift beyond 1e-12 triggers renormalization.
void renormalize_frames_if_needed(StrandState& state);

MassMatrix mass_matrix(const StrandConfig& config, const VectorXd& rest_len);

// s = mean of all stiffness coefficients over the interior elements;
// alpha = c_st/s etc.
void stiffness_scaling(const StrandConfig& config, double& s, VectorXd& alpha, VectorXd& beta, VectorXd& gamma);

// Rest parameters equal to the current geometry: all elastic energies vanish
// at `state` and only gravity remains in the net force.
RestParams naive_rest_params(const StrandConfig& config, const StrandState& state);

// Generalized coordinate packing.
VectorXd pack_q(const StrandState& state);
void unpack_q(const VectorXd& q, std::vector<Vector3d>& x, VectorXd& theta);

} // namespace sagfree

#endif
