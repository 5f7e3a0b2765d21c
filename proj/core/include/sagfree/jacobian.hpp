#ifndef SAGFREE_JACOBIAN_HPP
#define SAGFREE_JACOBIAN_HPP

#include <vector>

#include "sagfree/banded.hpp"
#include "sagfree/energy.hpp"

namespace sagfree {

// Column ordering of the optimization variable p. Parameters are interleaved
// per interior vertex i in [1, N-2] so that the resulting normal system is
// banded without reordering.
//
//   Full:        (kappa0, kappa1, beta, twist, gamma, len, alpha)   7 per vertex
//   RestShape2d: (kappa0, kappa1, twist, len)                       4 per vertex
//   RestShape4d: (kappa0..kappa3, twist, len)                       6 per vertex
//
// The 2D curvature modes optimize only the first two curvature slots; slots 2
// and 3 are kept synchronized to them. RestShape4d exists for comparison runs
// and optimizes all four slots independently. "len" means rest length of edge
// i and "alpha" its stretching multiplier; edge 0 is excluded.
struct ParamLayout {
    enum class Mode { Full, RestShape2d, RestShape4d };

    Mode mode = Mode::Full;
    int N = 0;

    ParamLayout() = default;
    ParamLayout(Mode m, int n) : mode(m), N(n) {
        if (n < 4) throw BadDimension("ParamLayout: N must be >= 4");
    }

    int num_interior() const { return N - 2; }
    int block_size() const {
        switch (mode) {
            case Mode::Full: return 7;
            case Mode::RestShape2d: return 4;
            case Mode::RestShape4d: return 6;
        }
        return 0;
    }
    int num_cols() const { return (N - 2) * block_size(); }
    int num_curv() const { return mode == Mode::RestShape4d ? 4 : 2; }
    bool has_stiffness() const { return mode == Mode::Full; }

    int block_start(int i) const { return (i - 1) * block_size(); }

    // Per-block column indices; -1 when the parameter is not optimized in
    // this mode.
    int col_kappa(int i, int j) const {
        if (j < 0 || j >= num_curv()) return -1;
        return block_start(i) + j;
    }
    int col_beta(int i) const { return has_stiffness() ? block_start(i) + 2 : -1; }
    int col_twist(int i) const {
        switch (mode) {
            case Mode::Full: return block_start(i) + 3;
            case Mode::RestShape2d: return block_start(i) + 2;
            case Mode::RestShape4d: return block_start(i) + 4;
        }
        return -1;
    }
    int col_gamma(int i) const { return has_stiffness() ? block_start(i) + 4 : -1; }
    int col_len(int i) const {
        switch (mode) {
            case Mode::Full: return block_start(i) + 5;
            case Mode::RestShape2d: return block_start(i) + 3;
            case Mode::RestShape4d: return block_start(i) + 5;
        }
        return -1;
    }
    int col_alpha(int i) const { return has_stiffness() ? block_start(i) + 6 : -1; }
};

// Rectangular column-banded storage for the force Jacobian J = df/dp.
// Each column stores a contiguous row range of nonzeros.
struct BandedRect {
    int rows = 0;
    int cols = 0;
    std::vector<int> row_begin;              // inclusive, per column
    std::vector<std::vector<double>> colval; // dense over the column's range

    BandedRect() = default;
    BandedRect(int r, int c);

    void add(int row, int col, double value);
    int row_end(int col) const { return row_begin[col] + static_cast<int>(colval[col].size()); }
    double coeff(int row, int col) const;

    VectorXd multiply(const VectorXd& p) const;           // J p
    VectorXd multiply_transpose(const VectorXd& f) const; // J^T f
    Eigen::MatrixXd dense() const;
};

// Stencil columns of J. Row indices are active DOFs; each call returns the
// entries it would scatter, used both by assemble_jacobian and by tests.
//
// Stretching at edge i: columns for rest length and alpha. The returned
// vectors are the derivative of the force on x_{i+1}; x_i gets the negation.
void jac_stretch(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int edge,
                 Vector3d& d_len, Vector3d& d_alpha);

// Bending at vertex i: 11-dim stencil columns. d_len applies to both rest
// lengths of the incident edges (the two columns are identical). d_kappa[j]
// covers the curvature slots of the given layout (2D modes fold slot j+2 into
// slot j). d_beta is empty unless the layout carries stiffness columns.
void jac_bend(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int vertex,
              const ParamLayout& layout, Vector11d& d_len, std::vector<Vector11d>& d_kappa, Vector11d& d_beta);

// Twisting at vertex i, same structure.
void jac_twist(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int vertex,
               Vector11d& d_len, Vector11d& d_twist, Vector11d& d_gamma);

BandedRect assemble_jacobian(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest,
                             const ParamLayout& layout);

// Mass diagonal restricted to the active DOFs.
VectorXd active_mass_diag(const StrandConfig& config, const MassMatrix& M);

// c = M^{-1/2} f over active DOFs.
VectorXd constraint(const VectorXd& active_mass, const ForceVector& f);

// H = diag(w) + rho J^T diag(1/m) J assembled directly into banded storage;
// the half-bandwidth is the smallest one admitting all structurally coupled
// column pairs.
BandedSym normal_system(const BandedRect& J, const VectorXd& w_diag, const VectorXd& active_mass, double rho);

} // namespace sagfree

#endif
