#ifndef SAGFREE_ENERGY_HPP
#define SAGFREE_ENERGY_HPP

#include <Eigen/Dense>
#include <vector>

#include "sagfree/strand.hpp"

namespace sagfree {

using Vector11d = Eigen::Matrix<double, 11, 1>;
using Matrix11x4d = Eigen::Matrix<double, 11, 4>;

// Geometry quantities of a fixed pose, computed once and reused: lengths,
// tangents, material frames, curvatures, twists and their pose gradients.
struct StrandGeometry {
    std::vector<Vector3d> tangents; // per edge
    VectorXd lengths;               // per edge
    std::vector<Vector3d> m1, m2;   // material frames per edge
    std::vector<Vector3d> kb;       // per vertex (index 0 unused)
    std::vector<Vector4d> kappa;    // per vertex (index 0 unused)
    VectorXd twists;                // per vertex (index 0 unused)
    // Gradients over the 11-DOF stencil y_i = (x_{i-1}, theta_{i-1}, x_i, theta_i, x_{i+1}).
    std::vector<Matrix11x4d> grad_kappa; // per vertex (index 0 unused)
    std::vector<Vector11d> grad_twist;   // per vertex (index 0 unused)

    static StrandGeometry compute(const StrandConfig& config, const StrandState& state);
};

// Generalized force restricted to the 4N-8 active DOFs. Clamped DOFs are
// excluded by index mapping: entry k corresponds to global DOF k + 7.
struct ForceVector {
    VectorXd values;
};

// Inertia objective E = ||q - q*||_M^2 / (2 dt^2) over all DOFs.
double energy_inertia(const VectorXd& q, const VectorXd& q_star, const MassMatrix& M, double dt);
VectorXd grad_inertia(const VectorXd& q, const VectorXd& q_star, const MassMatrix& M, double dt);

// Per-element energies at the fixed pose held by `geom`.
double energy_stretch(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int edge);
double energy_bend(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int vertex);
double energy_twist(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int vertex);

double total_elastic_energy(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest);

// Stencil gradients of the element energies.
// Stretching acts on (x_i, x_{i+1}): returns the gradient on x_{i+1}; the
// gradient on x_i is its negation.
Vector3d grad_stretch(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int edge);
Vector11d grad_bend(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int vertex);
Vector11d grad_twist_energy(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int vertex);

// Gravity as a generalized force restricted to active DOFs.
ForceVector external_force(const StrandConfig& config, const MassMatrix& M);

// Net generalized force f(p) = -grad E over active DOFs at the static
// equilibrium evaluation (the inertia term contributes exactly +f_ext).
// Elements are scattered in ascending index order.
ForceVector total_force(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest,
                        const MassMatrix& M);

// Scatters an 11-dim stencil gradient rooted at interior vertex `i` (global
// DOFs 4(i-1) .. 4(i-1)+10) into an active-DOF vector, dropping clamped DOFs.
void scatter_stencil(const Vector11d& g, int vertex, VectorXd& out);

} // namespace sagfree

#endif
