#ifndef SAGFREE_IO_HPP
#define SAGFREE_IO_HPP

#include <string>
#include <vector>

#include "sagfree/alm.hpp"
#include "sagfree/bcqp.hpp"
#include "sagfree/sim.hpp"
#include "sagfree/strand.hpp"

namespace sagfree {

struct StrandInput {
    StrandConfig config;
    StrandState state;
};

// Strand file (JSON):
//   {"vertices": [[x,y,z], ...], "thetas": [...], "radius": r, "density": d,
//    "c_st": scalar-or-array, "c_be": ..., "c_tw": ...}
// Scalars broadcast. Per-element arrays may carry either one value per edge
// (c_st) / vertex (c_be, c_tw) or only the interior entries. thetas are
// optional (default 0). Unknown keys are rejected.
StrandInput load_strand_json(const std::string& path);

// Plain CSV of vertex rows "x,y,z" with default material parameters.
StrandInput load_strand_csv(const std::string& path);

// Dispatch by extension (.json / anything else treated as CSV).
StrandInput load_strand(const std::string& path);

// Optimized-parameter file (JSON):
//   {"s", "rest_len", "rest_curv_2d", "rest_twist", "alpha", "beta",
//    "gamma", "report"}
// rest_len/alpha cover all N-1 edges (entry 0 is the fixed root edge);
// rest_curv_2d, rest_twist, beta, gamma carry the N-2 interior vertices.
void save_params_json(const std::string& path, const RestParams& rest, const AlmReport& report);
RestParams load_params_json(const std::string& path, int N);

void write_convergence_csv(const std::string& path, const AlmReport& report);
void write_residual_csv(const std::string& path, const std::vector<ResidualSample>& history);

// One CSV row per vertex per frame: frame, vertex, x, y, z.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
// OBJ polyline sequence, one object per frame.
void write_trajectory_obj(const std::string& path, const Trajectory& traj);
void write_kinetic_csv(const std::string& path, const Trajectory& traj);

// Round-trip parsers used by tests and the CLI summary path.
AlmReport load_convergence_csv(const std::string& path);
std::vector<ResidualSample> load_residual_csv(const std::string& path);

} // namespace sagfree

#endif
