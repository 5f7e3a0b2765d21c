#ifndef SAGFREE_BANDED_HPP
#define SAGFREE_BANDED_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <tuple>
#include <vector>

#include "sagfree/errors.hpp"

namespace sagfree {

// Per-DOF bound flags: -1 at lower bound, +1 at upper bound, 0 free.
// The induced selection matrix S has S_ii = 1 - |flag_i|.
struct ActiveSet {
    std::vector<std::int8_t> flags;

    static ActiveSet all_free(int n) { return ActiveSet{std::vector<std::int8_t>(n, 0)}; }

    int size() const { return static_cast<int>(flags.size()); }
    bool is_free(int i) const { return flags[i] == 0; }
    int free_count() const {
        int c = 0;
        for (auto f : flags) c += (f == 0);
        return c;
    }
};

// Symmetric banded matrix; only the lower band is stored.
//
// Storage is diagonal-major: band d (d = 0..hbw) is a contiguous array of
// length n - d with band(d)[j] = A(j + d, j). The filtered triangular solves
// stream these arrays, so keeping each diagonal contiguous matters.
class BandedSym {
public:
    BandedSym(int n, int hbw);

    // Builds from (row, col, value) triplets. Upper-triangle coordinates are
    // mirrored canonically; duplicates are summed. Entries with
    // |row - col| > hbw throw OutOfBand.
    static BandedSym assemble(int n, int hbw, const std::vector<std::tuple<int, int, double>>& entries);

    int size() const { return n_; }
    int half_bandwidth() const { return hbw_; }

    // Lower-triangle accumulate; mirrors (row, col) if row < col.
    void add(int row, int col, double value);

    // Symmetric read access; zero outside the band.
    double coeff(int row, int col) const;

    double& diag(int i) { return bands_[0][i]; }
    double diag(int i) const { return bands_[0][i]; }

    const std::vector<double>& band(int d) const { return bands_[d]; }
    std::vector<double>& band(int d) { return bands_[d]; }

    Eigen::VectorXd matvec(const Eigen::VectorXd& x) const;

    Eigen::MatrixXd dense() const;

    // Count of stored entries with nonzero value (both triangles, diagonal once).
    long structural_nonzeros() const;

    // MatrixMarket coordinate output (symmetric, lower triangle).
    void write_matrix_market(std::ostream& os) const;

private:
    int n_ = 0;
    int hbw_ = 0;
    std::vector<std::vector<double>> bands_;
};

// Sqrt-free factorization A = L D L^T of a BandedSym. L is unit lower
// triangular with the same half-bandwidth (banded SPD matrices factor without
// fill outside the band); the unit diagonal is implicit. Pivots below the
// clamping floor are raised to it and counted in clamp_count.
struct LdlFactor {
    int n = 0;
    int hbw = 0;
    // lower[d][j] = L(j + d, j) for d = 1..hbw; lower[0] is unused padding.
    std::vector<std::vector<double>> lower;
    Eigen::VectorXd diag;
    int clamp_count = 0;
    double pivot_floor = 0.0;

    // Solves A z = r via L w = r, D y = w, L^T z = y.
    Eigen::VectorXd solve(const Eigen::VectorXd& r) const;

    // Filtered solve implementing the active-set preconditioner map:
    //   y_i = (r_i - sum_{j<i} S_jj L_ij y_j) / D_ii   if S_ii != 0, else 0
    //   z_i = y_i - sum_{j>i} S_jj L_ji z_j            if S_ii != 0, else 0
    // Rows at active DOFs are skipped entirely. For the empty active set this
    // performs the exact same arithmetic as solve().
    Eigen::VectorXd solve_filtered(const Eigen::VectorXd& r, const ActiveSet& a) const;

    Eigen::MatrixXd dense_lower() const;

    void write_matrix_market(std::ostream& os) const;

private:
    template <bool Filtered>
    Eigen::VectorXd solve_impl(const Eigen::VectorXd& r, const ActiveSet* a) const;
};

// pivot_floor < 0 selects the default 1e-12 * max|A_ii|.
LdlFactor ldlt_factorize(const BandedSym& A, double pivot_floor = -1.0);

} // namespace sagfree

#endif
