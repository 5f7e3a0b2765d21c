#include "sagfree/bcqp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>

namespace sagfree {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool at_bound(double x, double bound) {
    if (!std::isfinite(bound)) return false;
    return std::abs(x - bound) <= 1e-14 * std::max(1.0, std::abs(bound));
}

VectorXd clamp_box(const VectorXd& x, const VectorXd& lo, const VectorXd& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

} // namespace

ActiveSet classify_bounds(const VectorXd& x, const VectorXd& lo, const VectorXd& hi) {
    const int n = static_cast<int>(x.size());
    ActiveSet a = ActiveSet::all_free(n);
    for (int i = 0; i < n; ++i) {
        if (at_bound(x[i], lo[i]))
            a.flags[i] = -1;
        else if (at_bound(x[i], hi[i]))
            a.flags[i] = 1;
    }
    return a;
}

namespace {

void split_gradient(const VectorXd& g, const ActiveSet& a, VectorXd& free_grad, VectorXd& chopped_grad) {
    const int n = static_cast<int>(g.size());
    free_grad = VectorXd::Zero(n);
    chopped_grad = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        if (a.flags[i] == 0)
            free_grad[i] = g[i];
        else if (a.flags[i] < 0)
            chopped_grad[i] = std::min(g[i], 0.0);
        else
            chopped_grad[i] = std::max(g[i], 0.0);
    }
}

} // namespace

void projected_gradient_parts(const BandedSym& A, const VectorXd& b, const VectorXd& x, const VectorXd& lo,
                              const VectorXd& hi, VectorXd& free_grad, VectorXd& chopped_grad) {
    const VectorXd g = A.matvec(x) - b;
    split_gradient(g, classify_bounds(x, lo, hi), free_grad, chopped_grad);
}

double estimate_lambda_max(const BandedSym& A, int iters) {
    const int n = A.size();
    VectorXd v = VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    double lambda = 0.0;
    for (int k = 0; k < iters; ++k) {
        VectorXd w = A.matvec(v);
        lambda = std::sqrt(w.squaredNorm());
        if (lambda <= 0.0) return 1.0;
        v = w / lambda;
    }
    return lambda;
}

namespace {

// Diagonally preconditioned or stationary-iteration application restricted to
// the free set. Active entries of the result are exact zeros.
struct FreeSetPreconditioner {
    PrecKind kind;
    const BandedSym* A;
    const AscPreconditioner* asc;

    VectorXd apply(const VectorXd& r, const ActiveSet& a) const {
        const int n = A->size();
        VectorXd z = VectorXd::Zero(n);
        switch (kind) {
            case PrecKind::None:
                for (int i = 0; i < n; ++i)
                    if (a.is_free(i)) z[i] = r[i];
                return z;
            case PrecKind::Diagonal:
                for (int i = 0; i < n; ++i)
                    if (a.is_free(i)) z[i] = r[i] / A->diag(i);
                return z;
            case PrecKind::Asc:
                return asc->apply(r, a);
            case PrecKind::WeightedJacobi: {
                const double omega = 0.5;
                for (int sweep = 0; sweep < 2; ++sweep) {
                    VectorXd res = r - A->matvec(z);
                    for (int i = 0; i < n; ++i)
                        if (a.is_free(i)) z[i] += omega * res[i] / A->diag(i);
                }
                for (int i = 0; i < n; ++i)
                    if (!a.is_free(i)) z[i] = 0.0;
                return z;
            }
            case PrecKind::Ssor: {
                const double omega = 1.2;
                const int hbw = A->half_bandwidth();
                // Forward then backward filtered SOR sweep on z = 0.
                for (int i = 0; i < n; ++i) {
                    if (!a.is_free(i)) continue;
                    double acc = r[i];
                    for (int d = 1; d <= std::min(i, hbw); ++d) acc -= A->coeff(i, i - d) * z[i - d];
                    z[i] = omega * acc / A->diag(i);
                }
                for (int i = n - 1; i >= 0; --i) {
                    if (!a.is_free(i)) continue;
                    double acc = r[i];
                    for (int d = 1; d <= std::min(n - 1 - i, hbw); ++d) acc -= A->coeff(i, i + d) * z[i + d];
                    for (int d = 1; d <= std::min(i, hbw); ++d) acc -= A->coeff(i, i - d) * z[i - d];
                    z[i] = (1.0 - omega) * z[i] + omega * acc / A->diag(i);
                }
                for (int i = 0; i < n; ++i)
                    if (!a.is_free(i)) z[i] = 0.0;
                return z;
            }
        }
        return z;
    }
};

// Reduced free gradient: caps each free-gradient component by the step that
// reaches the opposing bound under the fixed expansion step abar. Used only in
// the proportioning test, which compares raw (unpreconditioned) gradients.
VectorXd reduced_free_gradient(const VectorXd& phi, const VectorXd& x, const VectorXd& lo, const VectorXd& hi,
                               double abar) {
    VectorXd out = phi;
    for (int i = 0; i < phi.size(); ++i) {
        if (phi[i] > 0.0 && std::isfinite(lo[i]))
            out[i] = std::min(phi[i], (x[i] - lo[i]) / abar);
        else if (phi[i] < 0.0 && std::isfinite(hi[i]))
            out[i] = std::max(phi[i], (x[i] - hi[i]) / abar);
    }
    return out;
}

// Largest step along -d keeping x - alpha d feasible.
double feasible_step(const VectorXd& x, const VectorXd& d, const VectorXd& lo, const VectorXd& hi) {
    double alpha = kInf;
    for (int i = 0; i < x.size(); ++i) {
        if (d[i] > 0.0 && std::isfinite(lo[i]))
            alpha = std::min(alpha, (x[i] - lo[i]) / d[i]);
        else if (d[i] < 0.0 && std::isfinite(hi[i]))
            alpha = std::min(alpha, (x[i] - hi[i]) / d[i]);
    }
    return std::max(alpha, 0.0);
}

} // namespace

BcqpResult mprgp(const BcqpProblem& problem, const BcqpOptions& options) {
    const BandedSym& A = *problem.A;
    const int n = A.size();
    if (problem.b.size() != n || problem.lo.size() != n || problem.hi.size() != n || problem.x0.size() != n)
        throw DimensionMismatch("mprgp: vector length mismatch");

    const double abar = options.abar > 0.0 ? options.abar : 1.0 / estimate_lambda_max(A);
    const double tol = std::max(options.tol_abs, options.tol_rel * problem.b.norm());
    const double gamma2 = options.gamma * options.gamma;

    std::unique_ptr<AscPreconditioner> asc;
    if (options.preconditioner == PrecKind::Asc) asc = std::make_unique<AscPreconditioner>(A);
    const FreeSetPreconditioner prec{options.preconditioner, &A, asc.get()};

    BcqpResult result;
    const auto t0 = std::chrono::steady_clock::now();
    auto record = [&](int it, double res) {
        if (!options.record_history) return;
        const auto ns =
            std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
        result.residual_history.push_back({it, ns, res});
    };

    VectorXd x = clamp_box(problem.x0, problem.lo, problem.hi);
    VectorXd g = A.matvec(x) - problem.b;
    ActiveSet active = classify_bounds(x, problem.lo, problem.hi);
    VectorXd phi, beta;
    split_gradient(g, active, phi, beta);
    VectorXd z = prec.apply(phi, active);
    VectorXd p = z;

    double residual = (phi + beta).norm();
    record(0, residual);
    int iter = 0;
    while (residual > tol && iter < options.max_iter) {
        // Proportioning test on raw gradients; the preconditioner enters only
        // the CG recurrences so badly scaled systems still branch correctly.
        const VectorXd phi_tilde = reduced_free_gradient(phi, x, problem.lo, problem.hi, abar);
        if (beta.squaredNorm() <= gamma2 * std::max(0.0, phi_tilde.dot(phi))) {
            const VectorXd Ap = A.matvec(p);
            const double pAp = p.dot(Ap);
            if (pAp <= 0.0) {
                // Indefiniteness is only credible below the roundoff level of
                // the matvec; a direction in a stiff system's soft subspace
                // computes a slightly negative curvature even when A is SPD.
                // For such numerically null directions fall back to a
                // projected free-gradient step and restart the recurrence.
                if (pAp < -1e-12 * p.squaredNorm() / abar)
                    throw NotSpd("mprgp: negative curvature in CG step");
                x = clamp_box(x - abar * phi, problem.lo, problem.hi);
                g = A.matvec(x) - problem.b;
                active = classify_bounds(x, problem.lo, problem.hi);
                split_gradient(g, active, phi, beta);
                z = prec.apply(phi, active);
                p = z;
                ++iter;
                residual = (phi + beta).norm();
                record(iter, residual);
                continue;
            }
            const double alpha_cg = z.dot(g) / pAp;
            const double alpha_f = feasible_step(x, p, problem.lo, problem.hi);
            if (alpha_cg <= alpha_f) {
                x = clamp_box(x - alpha_cg * p, problem.lo, problem.hi);
                g -= alpha_cg * Ap;
                active = classify_bounds(x, problem.lo, problem.hi);
                split_gradient(g, active, phi, beta);
                z = prec.apply(phi, active);
                p = z - (z.dot(Ap) / pAp) * p;
            } else {
                // Expansion: partial CG step, then a projected fixed step
                // along the free gradient, then restart.
                x = clamp_box(x - alpha_f * p, problem.lo, problem.hi);
                g -= alpha_f * Ap;
                active = classify_bounds(x, problem.lo, problem.hi);
                split_gradient(g, active, phi, beta);
                x = clamp_box(x - abar * phi, problem.lo, problem.hi);
                g = A.matvec(x) - problem.b;
                active = classify_bounds(x, problem.lo, problem.hi);
                split_gradient(g, active, phi, beta);
                z = prec.apply(phi, active);
                p = z;
            }
        } else {
            const VectorXd Ab = A.matvec(beta);
            const double bAb = beta.dot(Ab);
            if (bAb <= 0.0) throw NotSpd("mprgp: non-positive curvature in proportioning step");
            const double alpha_cg = g.dot(beta) / bAb;
            const double alpha_f = feasible_step(x, beta, problem.lo, problem.hi);
            const double alpha = std::min(alpha_cg, alpha_f);
            x = clamp_box(x - alpha * beta, problem.lo, problem.hi);
            g -= alpha * Ab;
            active = classify_bounds(x, problem.lo, problem.hi);
            split_gradient(g, active, phi, beta);
            z = prec.apply(phi, active);
            p = z;
        }
        ++iter;
        residual = (phi + beta).norm();
        record(iter, residual);
    }

    result.x = x;
    result.iterations = iter;
    result.termination = residual <= tol ? BcqpTermination::Converged : BcqpTermination::MaxIter;
    result.final_active = active;
    return result;
}

VectorXd pgs_solve(const BcqpProblem& problem, int sweeps) {
    const BandedSym& A = *problem.A;
    const int n = A.size();
    const int hbw = A.half_bandwidth();
    VectorXd x = clamp_box(problem.x0, problem.lo, problem.hi);
    for (int s = 0; s < sweeps; ++s) {
        for (int i = 0; i < n; ++i) {
            double acc = problem.b[i];
            for (int d = 1; d <= std::min(i, hbw); ++d) acc -= A.coeff(i, i - d) * x[i - d];
            for (int d = 1; d <= std::min(n - 1 - i, hbw); ++d) acc -= A.coeff(i, i + d) * x[i + d];
            x[i] = std::clamp(acc / A.diag(i), problem.lo[i], problem.hi[i]);
        }
    }
    return x;
}

} // namespace sagfree
