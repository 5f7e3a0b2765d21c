#ifndef SAGFREE_ALM_HPP
#define SAGFREE_ALM_HPP

#include <cstdint>
#include <vector>

#include "sagfree/bcqp.hpp"
#include "sagfree/jacobian.hpp"

namespace sagfree {

struct AlmOptions {
    double rho = 1e6;
    double w_stiff = 1e3; // regularizer weight on alpha, beta, gamma
    double w_rest = 1.0;  // regularizer weight on rest shape
    double eps_p = 1e-8;  // step-norm termination
    int k_max = 100;
    double mu = 1.0;      // allowed rest-curvature change
    double eta = -1.0;    // allowed rest-twist change; < 0 means mu/4
    double eps = 1e-10;   // lower bound for lengths and stiffness multipliers
    double lbar_min = -1.0; // rest-length lower bound; < 0 means eps
    double eq_tol_rel = 1e-6; // constraint reduction required for Converged
    bool rest_shape_only = false;
    bool penalty_only = false; // freeze lambda = 0
    bool curvature_4d = false; // rest-shape layout with 4 independent curvature slots
    // Inner solves use a tighter relative tolerance than the standalone BCQP
    // default: the Newton right-hand sides are dominated by the stiffest rows,
    // so a 1e-10 b-relative cutoff can accept iterates whose error in the
    // softly weighted rest-shape directions is still large.
    BcqpOptions bcqp = {.tol_rel = 1e-12, .preconditioner = PrecKind::Asc};

    double eta_value() const { return eta < 0.0 ? mu / 4.0 : eta; }
    double lbar_min_value() const { return lbar_min < 0.0 ? eps : lbar_min; }
    ParamLayout::Mode layout_mode() const {
        if (curvature_4d) return ParamLayout::Mode::RestShape4d;
        return rest_shape_only ? ParamLayout::Mode::RestShape2d : ParamLayout::Mode::Full;
    }
};

enum class AlmStatus { Converged, MaxIter, LineSearchStalled, Stationary };

const char* to_string(AlmStatus s);

struct AlmIterRecord {
    int k;
    double norm_dp;
    double norm_c;
    int mprgp_iters;
    std::int64_t wall_ns;
};

struct AlmReport {
    AlmStatus status = AlmStatus::MaxIter;
    int iterations = 0;
    double norm_c0 = 0.0;
    double norm_c = 0.0;
    std::vector<AlmIterRecord> history;
};

// lambda_next = lambda - rho c.
VectorXd dual_update(const VectorXd& lambda, const VectorXd& c, double rho);

// Equilibrium objective over the parameter vector p at a fixed pose.
// Geometry quantities are computed once at construction; only the
// rest-parameter-dependent terms are re-evaluated per call.
class AlmProblem {
public:
    AlmProblem(const StrandConfig& config, const StrandState& state, const RestParams& rest0,
               const AlmOptions& options);

    const ParamLayout& layout() const { return layout_; }
    const VectorXd& p0() const { return p0_; }
    const VectorXd& lower() const { return lo_; }
    const VectorXd& upper() const { return hi_; }
    const VectorXd& weights() const { return w_; }
    const MassMatrix& mass() const { return M_; }
    const StrandGeometry& geometry() const { return geom_; }

    VectorXd pack(const RestParams& rest) const;
    // rest0 overlaid with p; in the 2D curvature modes slots 2 and 3 are
    // synchronized to slots 0 and 1.
    RestParams unpack(const VectorXd& p) const;

    VectorXd constraint_at(const VectorXd& p) const;
    double value(const VectorXd& p, const VectorXd& lambda) const;
    VectorXd gradient(const VectorXd& p, const VectorXd& lambda) const;
    BandedRect jacobian_at(const VectorXd& p) const;
    BandedSym hessian(const VectorXd& p) const;

    // Solves the box-constrained quadratic model for the step; bounds are
    // shifted so that p + dp always stays within [lower, upper].
    VectorXd newton_step(const VectorXd& p, const VectorXd& lambda, const VectorXd& warm_start,
                         int* mprgp_iters) const;

    // Backtracking with Armijo decrease; accepted iterates are clamped into
    // the box exactly. Returns false when 20 halvings fail.
    bool line_search_update(const VectorXd& p, const VectorXd& dp, const VectorXd& lambda, VectorXd& p_next,
                            double& step_norm) const;

private:
    StrandConfig config_;
    AlmOptions options_;
    ParamLayout layout_;
    StrandGeometry geom_;
    MassMatrix M_;
    VectorXd active_mass_;
    RestParams rest0_;
    VectorXd p0_, lo_, hi_, w_;
};

struct AlmResult {
    RestParams rest;
    VectorXd p;
    VectorXd lambda;
    AlmReport report;
};

AlmResult optimize(const StrandConfig& config, const StrandState& state, const RestParams& rest0,
                   const AlmOptions& options);

} // namespace sagfree

#endif
