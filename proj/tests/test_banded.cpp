#include <cmath>
#include <random>
#include <sstream>

#include <sagfree/banded.hpp>

#include "doctest.h"
#include "test_util.hpp"

using namespace sagfree;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using testutil::random_banded_spd;

TEST_CASE("assemble mirrors upper-triangle entries and sums duplicates") {
    const BandedSym A = BandedSym::assemble(3, 1, {{0, 1, 2.0}, {1, 0, 3.0}, {1, 1, 1.0}, {1, 1, 1.0}});
    CHECK(A.coeff(1, 0) == 5.0);
    CHECK(A.coeff(0, 1) == 5.0);
    CHECK(A.coeff(1, 1) == 2.0);
    CHECK(A.coeff(0, 2) == 0.0);
}

TEST_CASE("assemble rejects out-of-band and bad dimensions") {
    CHECK_THROWS_AS(BandedSym::assemble(3, 1, {{0, 2, 1.0}}), OutOfBand);
    CHECK_THROWS_AS(BandedSym(0, 0), BadDimension);
    CHECK_THROWS_AS(BandedSym(3, 3), BadDimension);
    BandedSym A(3, 1);
    CHECK_THROWS_AS(A.add(3, 0, 1.0), BadDimension);
}

TEST_CASE("matvec identity") {
    BandedSym A(4, 0);
    for (int i = 0; i < 4; ++i) A.add(i, i, 1.0);
    const VectorXd x = VectorXd::LinSpaced(4, 1.0, 4.0);
    CHECK((A.matvec(x) - x).norm() == 0.0);
}

TEST_CASE("matvec tridiagonal row sums") {
    BandedSym A(3, 1);
    for (int i = 0; i < 3; ++i) A.add(i, i, 2.0);
    A.add(1, 0, -1.0);
    A.add(2, 1, -1.0);
    const VectorXd y = A.matvec(VectorXd::Ones(3));
    CHECK(y[0] == doctest::Approx(1.0));
    CHECK(y[1] == doctest::Approx(0.0));
    CHECK(y[2] == doctest::Approx(1.0));
}

TEST_CASE("matvec matches dense reference on random banded matrices") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 30;
        const int hbw = std::min(n - 1, trial % 5);
        MatrixXd D;
        const BandedSym A = random_banded_spd(rng, n, hbw, &D);
        VectorXd x(n);
        for (int i = 0; i < n; ++i) x[i] = u(rng);
        const VectorXd ref = D * x;
        CHECK((A.matvec(x) - ref).norm() <= 1e-12 * ref.norm());
        CHECK((A.dense() - D).norm() == 0.0);
    }
}

TEST_CASE("ldlt of the identity") {
    BandedSym A(3, 1);
    for (int i = 0; i < 3; ++i) A.add(i, i, 1.0);
    const LdlFactor F = ldlt_factorize(A);
    CHECK(F.clamp_count == 0);
    for (int i = 0; i < 3; ++i) CHECK(F.diag[i] == 1.0);
    CHECK(F.lower[1][0] == 0.0);
    CHECK(F.lower[1][1] == 0.0);
}

TEST_CASE("ldlt hand elimination of a 2x2") {
    const BandedSym A = BandedSym::assemble(2, 1, {{0, 0, 4.0}, {1, 0, 2.0}, {1, 1, 5.0}});
    const LdlFactor F = ldlt_factorize(A);
    CHECK(F.diag[0] == doctest::Approx(4.0));
    CHECK(F.diag[1] == doctest::Approx(4.0));
    CHECK(F.lower[1][0] == doctest::Approx(0.5));
    const MatrixXd R = F.dense_lower() * F.diag.asDiagonal() * F.dense_lower().transpose();
    CHECK((R - A.dense()).norm() <= 1e-14);
}

TEST_CASE("ldlt clamps tiny pivots at the given floor") {
    BandedSym A(1, 0);
    A.add(0, 0, 1e-30);
    const LdlFactor F = ldlt_factorize(A, 1e-12);
    CHECK(F.diag[0] == 1e-12);
    CHECK(F.clamp_count == 1);

    // The default floor is relative to the largest diagonal entry, so a
    // uniformly tiny but well-conditioned matrix is not clamped.
    CHECK(ldlt_factorize(A).clamp_count == 0);
}

TEST_CASE("ldlt reconstruction matches a dense oracle") {
    std::mt19937 rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + trial % 49;
        const int hbw = std::min(n - 1, trial % 9);
        MatrixXd D;
        const BandedSym A = random_banded_spd(rng, n, hbw, &D);
        const LdlFactor F = ldlt_factorize(A);
        CHECK(F.clamp_count == 0);
        CHECK(F.hbw == hbw);
        const MatrixXd R = F.dense_lower() * F.diag.asDiagonal() * F.dense_lower().transpose();
        CHECK((R - D).cwiseAbs().maxCoeff() <= 1e-10 * D.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("solve identity and tridiagonal examples") {
    BandedSym I(3, 1);
    for (int i = 0; i < 3; ++i) I.add(i, i, 1.0);
    const VectorXd r = VectorXd::LinSpaced(3, 1.0, 3.0);
    CHECK((ldlt_factorize(I).solve(r) - r).norm() == 0.0);

    BandedSym T(3, 1);
    for (int i = 0; i < 3; ++i) T.add(i, i, 2.0);
    T.add(1, 0, -1.0);
    T.add(2, 1, -1.0);
    VectorXd rhs(3);
    rhs << 1.0, 0.0, 1.0;
    const VectorXd z = ldlt_factorize(T).solve(rhs);
    CHECK((z - VectorXd::Ones(3)).norm() <= 1e-14);
}

TEST_CASE("solve residual on random banded SPD systems") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + trial % 49;
        const int hbw = std::min(n - 1, 1 + trial % 8);
        const BandedSym A = random_banded_spd(rng, n, hbw);
        VectorXd r(n);
        for (int i = 0; i < n; ++i) r[i] = u(rng);
        const VectorXd z = ldlt_factorize(A).solve(r);
        CHECK((A.matvec(z) - r).norm() <= 1e-10 * r.norm());
    }
}

TEST_CASE("solve rejects mismatched lengths") {
    BandedSym A(3, 0);
    for (int i = 0; i < 3; ++i) A.add(i, i, 1.0);
    const LdlFactor F = ldlt_factorize(A);
    CHECK_THROWS_AS(F.solve(VectorXd::Ones(2)), DimensionMismatch);
    CHECK_THROWS_AS(F.solve_filtered(VectorXd::Ones(3), ActiveSet::all_free(2)), DimensionMismatch);
}

TEST_CASE("solve_filtered trivial active sets") {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int n = 7;
    const BandedSym A = random_banded_spd(rng, n, 2);
    const LdlFactor F = ldlt_factorize(A);
    VectorXd r(n);
    for (int i = 0; i < n; ++i) r[i] = u(rng);

    ActiveSet all_active;
    all_active.flags.assign(n, 1);
    CHECK(F.solve_filtered(r, all_active).norm() == 0.0);

    // Empty active set runs the identical arithmetic as solve().
    CHECK((F.solve_filtered(r, ActiveSet::all_free(n)) - F.solve(r)).norm() == 0.0);
}

namespace {

// Dense matrix of the filtered-solve map, built by applying it to basis vectors.
MatrixXd filtered_map(const LdlFactor& F, const ActiveSet& a) {
    MatrixXd P(F.n, F.n);
    for (int j = 0; j < F.n; ++j) P.col(j) = F.solve_filtered(VectorXd::Unit(F.n, j), a);
    return P;
}

} // namespace

TEST_CASE("solve_filtered is symmetric, zero on active DOFs, and PSD") {
    std::mt19937 rng(51);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> flag(-1, 1);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 3 + trial % 8;
        const BandedSym A = random_banded_spd(rng, n, std::min(n - 1, 2));
        const LdlFactor F = ldlt_factorize(A);
        ActiveSet a = ActiveSet::all_free(n);
        for (int i = 0; i < n; ++i) a.flags[i] = static_cast<std::int8_t>(flag(rng));

        VectorXd r1(n), r2(n);
        for (int i = 0; i < n; ++i) {
            r1[i] = u(rng);
            r2[i] = u(rng);
        }
        const VectorXd p1 = F.solve_filtered(r1, a);
        const VectorXd p2 = F.solve_filtered(r2, a);
        const double s1 = p1.dot(r2);
        const double s2 = r1.dot(p2);
        CHECK(std::abs(s1 - s2) <= 1e-10 * std::max(1.0, std::abs(s1)));
        for (int i = 0; i < n; ++i)
            if (!a.is_free(i)) CHECK(p1[i] == 0.0);

        const MatrixXd P = filtered_map(F, a);
        CHECK((P - P.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
        const Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (P + P.transpose()));
        CHECK(es.eigenvalues().minCoeff() >= -1e-12);
        // Positive definite on the free subspace.
        for (int i = 0; i < n; ++i)
            if (a.is_free(i)) CHECK(P(i, i) > 0.0);
    }
}

TEST_CASE("matrix market dumps are well formed") {
    std::mt19937 rng(61);
    const BandedSym A = random_banded_spd(rng, 5, 2);
    std::ostringstream osa;
    A.write_matrix_market(osa);
    CHECK(osa.str().rfind("%%MatrixMarket matrix coordinate real symmetric", 0) == 0);

    std::ostringstream osf;
    ldlt_factorize(A).write_matrix_market(osf);
    CHECK(osf.str().rfind("%%MatrixMarket matrix coordinate real general", 0) == 0);
}
