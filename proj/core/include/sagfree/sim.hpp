#ifndef SAGFREE_SIM_HPP
#define SAGFREE_SIM_HPP

#include <vector>

#include "sagfree/energy.hpp"

namespace sagfree {

// Piecewise-linear keyframe for the clamped root DOFs.
struct RootKeyframe {
    double time = 0.0;
    Vector3d x0 = Vector3d::Zero();
    double theta0 = 0.0;
    Vector3d x1 = Vector3d::Zero();
};

struct SimOptions {
    double dt = 1.0 / 240.0;
    int steps_per_frame = 4;
    int frames = 0;
    std::vector<RootKeyframe> root_motion; // empty keeps the root static
};

struct Trajectory {
    std::vector<std::vector<Vector3d>> frames; // per frame vertex positions (initial frame included)
    std::vector<double> kinetic_energy;        // per recorded frame
};

double kinetic_energy(const StrandState& state, const MassMatrix& M);

// Implicit-Euler step with a single Newton iteration. The elastic Hessian is
// approximated SPD: exact per-edge stretching blocks with negative transverse
// stiffness clamped to zero, Gauss-Newton outer products for bending and
// twisting. Clamped DOFs are held fixed; frames are transported to the new
// tangents and reference twists recomputed.
StrandState sim_step(const StrandConfig& config, const StrandState& state, const RestParams& rest,
                     const MassMatrix& M, double dt);

// Interpolated root pose at a given time; identity of the strand's current
// root when no keyframes are given.
RootKeyframe root_at(const std::vector<RootKeyframe>& motion, double time);

Trajectory simulate(const StrandConfig& config, const StrandState& state, const RestParams& rest,
                    const SimOptions& options);

} // namespace sagfree

#endif
