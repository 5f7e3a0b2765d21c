#include "sagfree/alm.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace sagfree {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* to_string(AlmStatus s) {
    switch (s) {
        case AlmStatus::Converged: return "Converged";
        case AlmStatus::MaxIter: return "MaxIter";
        case AlmStatus::LineSearchStalled: return "LineSearchStalled";
        case AlmStatus::Stationary: return "Stationary";
    }
    return "Unknown";
}

VectorXd dual_update(const VectorXd& lambda, const VectorXd& c, double rho) {
    if (lambda.size() != c.size()) throw DimensionMismatch("dual_update: vector length mismatch");
    return lambda - rho * c;
}

AlmProblem::AlmProblem(const StrandConfig& config, const StrandState& state, const RestParams& rest0,
                       const AlmOptions& options)
    : config_(config),
      options_(options),
      layout_(options.layout_mode(), config.N),
      geom_(StrandGeometry::compute(config, state)),
      M_(mass_matrix(config, rest0.rest_len)),
      rest0_(rest0) {
    active_mass_ = active_mass_diag(config_, M_);
    p0_ = pack(rest0_);

    const int n = layout_.num_cols();
    lo_.resize(n);
    hi_.resize(n);
    w_.resize(n);
    const double eta = options_.eta_value();
    for (int i = 1; i <= config_.N - 2; ++i) {
        for (int j = 0; j < layout_.num_curv(); ++j) {
            const int c = layout_.col_kappa(i, j);
            lo_[c] = p0_[c] - options_.mu;
            hi_[c] = p0_[c] + options_.mu;
            w_[c] = options_.w_rest;
        }
        const int cm = layout_.col_twist(i);
        lo_[cm] = p0_[cm] - eta;
        hi_[cm] = p0_[cm] + eta;
        w_[cm] = options_.w_rest;
        const int cl = layout_.col_len(i);
        lo_[cl] = options_.lbar_min_value();
        hi_[cl] = kInf;
        w_[cl] = options_.w_rest;
        if (layout_.has_stiffness()) {
            for (int c : {layout_.col_beta(i), layout_.col_gamma(i), layout_.col_alpha(i)}) {
                lo_[c] = options_.eps;
                hi_[c] = kInf;
                w_[c] = options_.w_stiff;
            }
        }
    }
}

VectorXd AlmProblem::pack(const RestParams& rest) const {
    VectorXd p(layout_.num_cols());
    for (int i = 1; i <= config_.N - 2; ++i) {
        for (int j = 0; j < layout_.num_curv(); ++j) p[layout_.col_kappa(i, j)] = rest.rest_curv[i][j];
        p[layout_.col_twist(i)] = rest.rest_twist[i];
        p[layout_.col_len(i)] = rest.rest_len[i];
        if (layout_.has_stiffness()) {
            p[layout_.col_beta(i)] = rest.beta[i];
            p[layout_.col_gamma(i)] = rest.gamma[i];
            p[layout_.col_alpha(i)] = rest.alpha[i];
        }
    }
    return p;
}

RestParams AlmProblem::unpack(const VectorXd& p) const {
    RestParams rest = rest0_;
    for (int i = 1; i <= config_.N - 2; ++i) {
        if (layout_.num_curv() == 4) {
            for (int j = 0; j < 4; ++j) rest.rest_curv[i][j] = p[layout_.col_kappa(i, j)];
        } else {
            rest.rest_curv[i][0] = p[layout_.col_kappa(i, 0)];
            rest.rest_curv[i][1] = p[layout_.col_kappa(i, 1)];
            rest.rest_curv[i][2] = rest.rest_curv[i][0];
            rest.rest_curv[i][3] = rest.rest_curv[i][1];
        }
        rest.rest_twist[i] = p[layout_.col_twist(i)];
        rest.rest_len[i] = p[layout_.col_len(i)];
        if (layout_.has_stiffness()) {
            rest.beta[i] = p[layout_.col_beta(i)];
            rest.gamma[i] = p[layout_.col_gamma(i)];
            rest.alpha[i] = p[layout_.col_alpha(i)];
        }
    }
    return rest;
}

VectorXd AlmProblem::constraint_at(const VectorXd& p) const {
    const RestParams rest = unpack(p);
    const ForceVector f = total_force(config_, geom_, rest, M_);
    return constraint(active_mass_, f);
}

double AlmProblem::value(const VectorXd& p, const VectorXd& lambda) const {
    const VectorXd d = p - p0_;
    const VectorXd c = constraint_at(p);
    return 0.5 * d.dot(w_.cwiseProduct(d)) - lambda.dot(c) + 0.5 * options_.rho * c.squaredNorm();
}

BandedRect AlmProblem::jacobian_at(const VectorXd& p) const {
    return assemble_jacobian(config_, geom_, unpack(p), layout_);
}

VectorXd AlmProblem::gradient(const VectorXd& p, const VectorXd& lambda) const {
    const BandedRect J = jacobian_at(p);
    const VectorXd c = constraint_at(p);
    const VectorXd sqrt_m = active_mass_.cwiseSqrt();
    // J^T M^{-1/2} (rho c - lambda), with c = M^{-1/2} f.
    const VectorXd y = (options_.rho * c - lambda).cwiseQuotient(sqrt_m);
    return w_.cwiseProduct(p - p0_) + J.multiply_transpose(y);
}

BandedSym AlmProblem::hessian(const VectorXd& p) const {
    return normal_system(jacobian_at(p), w_, active_mass_, options_.rho);
}

VectorXd AlmProblem::newton_step(const VectorXd& p, const VectorXd& lambda, const VectorXd& warm_start,
                                 int* mprgp_iters) const {
    const BandedSym H = hessian(p);
    BcqpProblem qp;
    qp.A = &H;
    qp.b = -gradient(p, lambda);
    qp.lo = lo_ - p;
    qp.hi = hi_ - p;
    qp.x0 = warm_start.size() == p.size() ? warm_start : VectorXd::Zero(p.size());
    BcqpResult r = mprgp(qp, options_.bcqp);
    if (mprgp_iters) *mprgp_iters = r.iterations;
    return r.x;
}

bool AlmProblem::line_search_update(const VectorXd& p, const VectorXd& dp, const VectorXd& lambda,
                                    VectorXd& p_next, double& step_norm) const {
    if (dp.norm() == 0.0) {
        p_next = p;
        step_norm = 0.0;
        return true;
    }
    const double L0 = value(p, lambda);
    const double slope = gradient(p, lambda).dot(dp);
    const double c1 = 1e-4;
    double tau = 1.0;
    for (int h = 0; h <= 20; ++h) {
        const VectorXd cand = (p + tau * dp).cwiseMax(lo_).cwiseMin(hi_);
        if (value(cand, lambda) <= L0 + c1 * tau * slope) {
            step_norm = (cand - p).norm();
            p_next = cand;
            return true;
        }
        tau *= 0.5;
    }
    return false;
}

AlmResult optimize(const StrandConfig& config, const StrandState& state, const RestParams& rest0,
                   const AlmOptions& options) {
    AlmProblem prob(config, state, rest0, options);
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed_ns = [&] {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
            .count();
    };

    AlmResult result;
    VectorXd p = prob.p0().cwiseMax(prob.lower()).cwiseMin(prob.upper());
    VectorXd lambda = VectorXd::Zero(config.num_active_dofs());
    VectorXd warm = VectorXd::Zero(p.size());

    result.report.norm_c0 = prob.constraint_at(p).norm();
    double norm_c = result.report.norm_c0;
    const double c_target = options.eq_tol_rel * result.report.norm_c0;

    AlmStatus status = AlmStatus::MaxIter;
    int k = 0;
    while (k < options.k_max) {
        ++k;
        int mprgp_iters = 0;
        const VectorXd dp = prob.newton_step(p, lambda, warm.cwiseMax(prob.lower() - p).cwiseMin(prob.upper() - p),
                                             &mprgp_iters);
        VectorXd p_next;
        double step_norm = 0.0;
        if (!prob.line_search_update(p, dp, lambda, p_next, step_norm)) {
            status = AlmStatus::LineSearchStalled;
            result.report.history.push_back({k, dp.norm(), norm_c, mprgp_iters, elapsed_ns()});
            break;
        }
        warm = dp;
        p = p_next;
        const VectorXd c = prob.constraint_at(p);
        norm_c = c.norm();
        if (!options.penalty_only) lambda = dual_update(lambda, c, options.rho);
        result.report.history.push_back({k, step_norm, norm_c, mprgp_iters, elapsed_ns()});
        if (step_norm <= options.eps_p) {
            status = norm_c <= c_target ? AlmStatus::Converged : AlmStatus::Stationary;
            break;
        }
    }

    result.report.status = status;
    result.report.iterations = k;
    result.report.norm_c = norm_c;
    result.p = p;
    result.lambda = lambda;
    result.rest = prob.unpack(p);
    return result;
}

} // namespace sagfree
