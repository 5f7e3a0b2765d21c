#include "sagfree/banded.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace sagfree {

BandedSym::BandedSym(int n, int hbw) : n_(n), hbw_(hbw) {
    if (n < 1) throw BadDimension("BandedSym: n must be >= 1");
    if (hbw < 0 || hbw >= n) throw BadDimension("BandedSym: require 0 <= hbw < n");
    bands_.resize(hbw + 1);
    for (int d = 0; d <= hbw; ++d) bands_[d].assign(n - d, 0.0);
}

BandedSym BandedSym::assemble(int n, int hbw, const std::vector<std::tuple<int, int, double>>& entries) {
    BandedSym A(n, hbw);
    for (const auto& [r, c, v] : entries) A.add(r, c, v);
    return A;
}

void BandedSym::add(int row, int col, double value) {
    if (row < 0 || row >= n_ || col < 0 || col >= n_)
        throw BadDimension("BandedSym::add: index out of range");
    if (row < col) std::swap(row, col);
    const int d = row - col;
    if (d > hbw_) throw OutOfBand(row, col);
    bands_[d][col] += value;
}

double BandedSym::coeff(int row, int col) const {
    if (row < col) std::swap(row, col);
    const int d = row - col;
    if (d > hbw_) return 0.0;
    return bands_[d][col];
}

Eigen::VectorXd BandedSym::matvec(const Eigen::VectorXd& x) const {
    if (x.size() != n_) throw DimensionMismatch("BandedSym::matvec: vector length mismatch");
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i) y[i] = bands_[0][i] * x[i];
    for (int d = 1; d <= hbw_; ++d) {
        const auto& b = bands_[d];
        for (int j = 0; j + d < n_; ++j) {
            y[j + d] += b[j] * x[j];
            y[j] += b[j] * x[j + d];
        }
    }
    return y;
}

Eigen::MatrixXd BandedSym::dense() const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n_, n_);
    for (int d = 0; d <= hbw_; ++d)
        for (int j = 0; j + d < n_; ++j) {
            M(j + d, j) = bands_[d][j];
            M(j, j + d) = bands_[d][j];
        }
    return M;
}

long BandedSym::structural_nonzeros() const {
    long count = 0;
    for (int j = 0; j < n_; ++j) count += (bands_[0][j] != 0.0);
    for (int d = 1; d <= hbw_; ++d)
        for (int j = 0; j + d < n_; ++j) count += 2 * (bands_[d][j] != 0.0);
    return count;
}

void BandedSym::write_matrix_market(std::ostream& os) const {
    long nnz = 0;
    for (int d = 0; d <= hbw_; ++d)
        for (int j = 0; j + d < n_; ++j) nnz += (bands_[d][j] != 0.0);
    os << "%%MatrixMarket matrix coordinate real symmetric\n";
    os << n_ << " " << n_ << " " << nnz << "\n";
    for (int j = 0; j < n_; ++j)
        for (int d = 0; d <= hbw_ && j + d < n_; ++d)
            if (bands_[d][j] != 0.0) os << (j + d + 1) << " " << (j + 1) << " " << bands_[d][j] << "\n";
}

LdlFactor ldlt_factorize(const BandedSym& A, double pivot_floor) {
    const int n = A.size();
    const int hbw = A.half_bandwidth();

    if (pivot_floor < 0.0) {
        double max_diag = 0.0;
        for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(A.diag(i)));
        pivot_floor = 1e-12 * max_diag;
        if (pivot_floor <= 0.0) pivot_floor = 1e-300;
    }

    LdlFactor F;
    F.n = n;
    F.hbw = hbw;
    F.pivot_floor = pivot_floor;
    F.diag.resize(n);
    F.lower.resize(hbw + 1);
    for (int d = 1; d <= hbw; ++d) F.lower[d].assign(n - d, 0.0);

    double max_diag = 0.0;
    for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(A.diag(i)));

    // Column-by-column right-looking elimination confined to the band.
    for (int j = 0; j < n; ++j) {
        double dj = A.diag(j);
        for (int k = std::max(0, j - hbw); k < j; ++k) {
            const double ljk = F.lower[j - k][k];
            dj -= ljk * ljk * F.diag[k];
        }
        // Eliminated sub-column, computed before the pivot is finalized so a
        // clamped pivot can also be raised to keep |l| sqrt(d) bounded by the
        // matrix scale. An exactly SPD input never trips that second clamp,
        // but a pivot corrupted by cancellation would otherwise let the
        // factor magnitudes grow without bound across later columns.
        double smax = 0.0;
        std::vector<double> sub(std::min(n - 1, j + hbw) - j, 0.0);
        for (int i = j + 1; i <= std::min(n - 1, j + hbw); ++i) {
            double s = A.coeff(i, j);
            for (int k = std::max(0, i - hbw); k < j; ++k)
                s -= F.lower[i - k][k] * F.lower[j - k][k] * F.diag[k];
            sub[i - j - 1] = s;
            smax = std::max(smax, std::abs(s));
        }
        bool clamped = false;
        if (dj < pivot_floor) {
            dj = pivot_floor;
            clamped = true;
        }
        if (max_diag > 0.0 && dj < smax * smax / max_diag) {
            dj = smax * smax / max_diag;
            clamped = true;
        }
        if (clamped) ++F.clamp_count;
        F.diag[j] = dj;
        for (int i = j + 1; i <= std::min(n - 1, j + hbw); ++i) F.lower[i - j][j] = sub[i - j - 1] / dj;
    }
    return F;
}

template <bool Filtered>
Eigen::VectorXd LdlFactor::solve_impl(const Eigen::VectorXd& r, const ActiveSet* a) const {
    if (r.size() != n) throw DimensionMismatch("LdlFactor::solve: vector length mismatch");
    if constexpr (Filtered) {
        if (a->size() != n) throw DimensionMismatch("LdlFactor::solve_filtered: active-set length mismatch");
    }

    // Forward substitution merged with the diagonal scaling: the already
    // scaled y_j must be unscaled by D_j inside the update.
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        if constexpr (Filtered) {
            if (!a->is_free(i)) {
                y[i] = 0.0;
                continue;
            }
        }
        double acc = r[i];
        for (int d = 1; d <= std::min(i, hbw); ++d) {
            const int j = i - d;
            if constexpr (Filtered) {
                if (!a->is_free(j)) continue;
            }
            acc -= lower[d][j] * diag[j] * y[j];
        }
        y[i] = acc / diag[i];
    }

    Eigen::VectorXd z(n);
    for (int i = n - 1; i >= 0; --i) {
        if constexpr (Filtered) {
            if (!a->is_free(i)) {
                z[i] = 0.0;
                continue;
            }
        }
        double acc = y[i];
        for (int d = 1; d <= std::min(n - 1 - i, hbw); ++d) {
            const int j = i + d;
            if constexpr (Filtered) {
                if (!a->is_free(j)) continue;
            }
            acc -= lower[d][i] * z[j];
        }
        z[i] = acc;
    }
    return z;
}

Eigen::VectorXd LdlFactor::solve(const Eigen::VectorXd& r) const {
    return solve_impl<false>(r, nullptr);
}

Eigen::VectorXd LdlFactor::solve_filtered(const Eigen::VectorXd& r, const ActiveSet& a) const {
    return solve_impl<true>(r, &a);
}

Eigen::MatrixXd LdlFactor::dense_lower() const {
    Eigen::MatrixXd L = Eigen::MatrixXd::Identity(n, n);
    for (int d = 1; d <= hbw; ++d)
        for (int j = 0; j + d < n; ++j) L(j + d, j) = lower[d][j];
    return L;
}

void LdlFactor::write_matrix_market(std::ostream& os) const {
    long nnz = n; // unit diagonal
    for (int d = 1; d <= hbw; ++d)
        for (int j = 0; j + d < n; ++j) nnz += (lower[d][j] != 0.0);
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << "% unit lower factor L; D follows as comment lines\n";
    os << n << " " << n << " " << nnz << "\n";
    for (int j = 0; j < n; ++j) {
        os << (j + 1) << " " << (j + 1) << " " << 1.0 << "\n";
        for (int d = 1; d <= hbw && j + d < n; ++d)
            if (lower[d][j] != 0.0) os << (j + d + 1) << " " << (j + 1) << " " << lower[d][j] << "\n";
    }
    os << "% D:";
    for (int i = 0; i < n; ++i) os << " " << diag[i];
    os << "\n";
}

} // namespace sagfree
