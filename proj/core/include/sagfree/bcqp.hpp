#ifndef SAGFREE_BCQP_HPP
#define SAGFREE_BCQP_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sagfree/banded.hpp"

namespace sagfree {

using Eigen::VectorXd;

// min 1/2 x^T A x - b^T x  subject to  lo <= x <= hi, A SPD banded.
struct BcqpProblem {
    const BandedSym* A = nullptr;
    VectorXd b;
    VectorXd lo, hi; // +-inf allowed
    VectorXd x0;     // projected into bounds at entry
};

enum class PrecKind { None, Diagonal, Asc, WeightedJacobi, Ssor };

struct BcqpOptions {
    double tol_abs = 1e-10;
    double tol_rel = 1e-10;
    int max_iter = 10000;
    double gamma = 1.0; // proportioning constant
    double abar = -1.0; // expansion step; < 0 means 1/lambda_max estimated by power iteration
    PrecKind preconditioner = PrecKind::None;
    bool record_history = false;
};

enum class BcqpTermination { Converged, MaxIter };

struct ResidualSample {
    int iteration;
    std::int64_t wall_ns;
    double residual;
};

struct BcqpResult {
    VectorXd x;
    int iterations = 0;
    BcqpTermination termination = BcqpTermination::Converged;
    ActiveSet final_active;
    std::vector<ResidualSample> residual_history;
};

// Splits g = Ax - b into the free gradient (free DOFs) and the chopped
// gradient (feasibility-respecting components at bound-active DOFs). A DOF is
// at a bound when |x_i - bound| <= 1e-14 max(1, |bound|).
void projected_gradient_parts(const BandedSym& A, const VectorXd& b, const VectorXd& x, const VectorXd& lo,
                              const VectorXd& hi, VectorXd& free_grad, VectorXd& chopped_grad);

ActiveSet classify_bounds(const VectorXd& x, const VectorXd& lo, const VectorXd& hi);

// Active-set Cholesky preconditioner: factorizes once, applies filtered
// triangular solves with the iteration's current active set.
//
// The kinetic-energy-metric Newton systems carry diagonals spanning ~14
// orders of magnitude, so the factorization-default pivot floor
// (1e-12 max|A_ii|) would clamp legitimate small pivots and ruin the factor.
// The preconditioner therefore floors pivots at 1e-18 max|A_ii|, which only
// catches numerically meaningless or negative pivots.
// When the unshifted factorization clamps pivots, the matrix has directions
// whose curvature is below roundoff at the dominant scale; the factor of such
// a matrix is garbage (triangular solves overflow through the clamped
// pivots). Refactorizing A + sigma I with an escalating small shift yields a
// bounded SPD factor that still preconditions the numerically visible
// directions exactly; the invisible ones are merely damped instead of
// amplified. Clamp-free systems are unaffected and keep the exact factor.
struct AscPreconditioner {
    LdlFactor factor;
    double shift = 0.0;

    explicit AscPreconditioner(const BandedSym& A) : factor(ldlt_factorize(A, asc_pivot_floor(A))) {
        if (factor.clamp_count == 0) return;
        double max_diag = 0.0;
        for (int i = 0; i < A.size(); ++i) max_diag = std::max(max_diag, std::abs(A.diag(i)));
        for (double rel = 1e-10; rel <= 1.0; rel *= 1e4) {
            BandedSym shifted = A;
            for (int i = 0; i < A.size(); ++i) shifted.add(i, i, rel * max_diag);
            factor = ldlt_factorize(shifted, asc_pivot_floor(A));
            shift = rel * max_diag;
            if (factor.clamp_count == 0) break;
        }
    }
    VectorXd apply(const VectorXd& r, const ActiveSet& a) const { return factor.solve_filtered(r, a); }

    static double asc_pivot_floor(const BandedSym& A) {
        double max_diag = 0.0;
        for (int i = 0; i < A.size(); ++i) max_diag = std::max(max_diag, std::abs(A.diag(i)));
        return max_diag > 0.0 ? 1e-18 * max_diag : 1e-300;
    }
};

BcqpResult mprgp(const BcqpProblem& problem, const BcqpOptions& options);

// Projected Gauss-Seidel sweeps, test oracle.
VectorXd pgs_solve(const BcqpProblem& problem, int sweeps);

// Largest-eigenvalue estimate by power iteration (deterministic start).
double estimate_lambda_max(const BandedSym& A, int iters = 30);

} // namespace sagfree

#endif
