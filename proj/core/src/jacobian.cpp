#include "sagfree/jacobian.hpp"

#include <algorithm>
#include <cmath>

namespace sagfree {

BandedRect::BandedRect(int r, int c) : rows(r), cols(c) {
    if (r < 1 || c < 1) throw BadDimension("BandedRect: dimensions must be positive");
    row_begin.assign(c, 0);
    colval.resize(c);
}

void BandedRect::add(int row, int col, double value) {
    if (row < 0 || row >= rows || col < 0 || col >= cols)
        throw BadDimension("BandedRect::add: index out of range");
    auto& v = colval[col];
    if (v.empty()) {
        row_begin[col] = row;
        v.push_back(value);
        return;
    }
    int begin = row_begin[col];
    if (row < begin) {
        v.insert(v.begin(), begin - row, 0.0);
        row_begin[col] = begin = row;
    } else if (row >= begin + static_cast<int>(v.size())) {
        v.resize(row - begin + 1, 0.0);
    }
    v[row - begin] += value;
}

double BandedRect::coeff(int row, int col) const {
    const int begin = row_begin[col];
    const int idx = row - begin;
    if (idx < 0 || idx >= static_cast<int>(colval[col].size())) return 0.0;
    return colval[col][idx];
}

VectorXd BandedRect::multiply(const VectorXd& p) const {
    if (p.size() != cols) throw DimensionMismatch("BandedRect::multiply: vector length mismatch");
    VectorXd y = VectorXd::Zero(rows);
    for (int c = 0; c < cols; ++c) {
        const auto& v = colval[c];
        const int begin = row_begin[c];
        for (size_t k = 0; k < v.size(); ++k) y[begin + static_cast<int>(k)] += v[k] * p[c];
    }
    return y;
}

VectorXd BandedRect::multiply_transpose(const VectorXd& f) const {
    if (f.size() != rows) throw DimensionMismatch("BandedRect::multiply_transpose: vector length mismatch");
    VectorXd y = VectorXd::Zero(cols);
    for (int c = 0; c < cols; ++c) {
        const auto& v = colval[c];
        const int begin = row_begin[c];
        double acc = 0.0;
        for (size_t k = 0; k < v.size(); ++k) acc += v[k] * f[begin + static_cast<int>(k)];
        y[c] = acc;
    }
    return y;
}

Eigen::MatrixXd BandedRect::dense() const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, cols);
    for (int c = 0; c < cols; ++c) {
        const auto& v = colval[c];
        for (size_t k = 0; k < v.size(); ++k) M(row_begin[c] + static_cast<int>(k), c) = v[k];
    }
    return M;
}

void jac_stretch(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int edge,
                 Vector3d& d_len, Vector3d& d_alpha) {
    const double lbar = rest.rest_len[edge];
    if (!(lbar > 0.0)) throw DegenerateEdge(edge);
    const double area = config.cross_section_area();
    const double l = geom.lengths[edge];
    const Vector3d& t = geom.tangents[edge];
    d_len = rest.s * rest.alpha[edge] * area * l / (lbar * lbar) * t;
    d_alpha = -rest.s * area * (l / lbar - 1.0) * t;
}

namespace {

inline double len_sum(const RestParams& rest, int i) { return rest.rest_len[i - 1] + rest.rest_len[i]; }

} // namespace

void jac_bend(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int vertex,
              const ParamLayout& layout, Vector11d& d_len, std::vector<Vector11d>& d_kappa, Vector11d& d_beta) {
    const double r2 = config.radius * config.radius;
    const double sum = len_sum(rest, vertex);
    const double coeff = rest.s * rest.beta[vertex] * config.cross_section_area() * r2 / (4.0 * sum);
    const Vector4d dk = geom.kappa[vertex] - rest.rest_curv[vertex];
    const Matrix11x4d& gk = geom.grad_kappa[vertex];
    const Vector11d jtd = gk * dk;

    d_len = coeff / sum * jtd;
    d_beta = -(coeff / rest.beta[vertex]) * jtd;

    const int nc = layout.num_curv();
    d_kappa.assign(nc, Vector11d::Zero());
    if (nc == 4) {
        for (int j = 0; j < 4; ++j) d_kappa[j] = coeff * gk.col(j);
    } else {
        for (int j = 0; j < 2; ++j) d_kappa[j] = coeff * (gk.col(j) + gk.col(j + 2));
    }
}

void jac_twist(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest, int vertex,
               Vector11d& d_len, Vector11d& d_twist, Vector11d& d_gamma) {
    const double r2 = config.radius * config.radius;
    const double sum = len_sum(rest, vertex);
    const double coeff = rest.s * rest.gamma[vertex] * config.cross_section_area() * r2 / sum;
    const double dm = geom.twists[vertex] - rest.rest_twist[vertex];
    const Vector11d& gm = geom.grad_twist[vertex];

    d_len = (coeff * dm / sum) * gm;
    d_twist = coeff * gm;
    d_gamma = -(coeff * dm / rest.gamma[vertex]) * gm;
}

namespace {

// Adds an 11-dim stencil column rooted at interior vertex `i` into column `c`.
void add_stencil_column(BandedRect& J, const Vector11d& v, int i, int c) {
    const int base = vertex_dof(i - 1);
    for (int r = 0; r < 11; ++r) {
        const int dof = base + r;
        if (dof >= kNumClampedDofs) J.add(active_index(dof), c, v[r]);
    }
}

void add_edge_column(BandedRect& J, const Vector3d& on_hi, int edge, int c) {
    for (int k = 0; k < 3; ++k) {
        const int dof_lo = vertex_dof(edge) + k;
        const int dof_hi = vertex_dof(edge + 1) + k;
        if (dof_lo >= kNumClampedDofs) J.add(active_index(dof_lo), c, -on_hi[k]);
        if (dof_hi >= kNumClampedDofs) J.add(active_index(dof_hi), c, on_hi[k]);
    }
}

} // namespace

BandedRect assemble_jacobian(const StrandConfig& config, const StrandGeometry& geom, const RestParams& rest,
                             const ParamLayout& layout) {
    if (layout.N != config.N) throw DimensionMismatch("assemble_jacobian: layout/config vertex count mismatch");
    BandedRect J(config.num_active_dofs(), layout.num_cols());

    Vector3d st_len, st_alpha;
    Vector11d be_len, be_beta, tw_len, tw_twist, tw_gamma;
    std::vector<Vector11d> be_kappa;

    for (int i = 1; i <= config.N - 2; ++i) {
        jac_bend(config, geom, rest, i, layout, be_len, be_kappa, be_beta);
        for (int j = 0; j < layout.num_curv(); ++j)
            add_stencil_column(J, be_kappa[j], i, layout.col_kappa(i, j));
        if (i > 1) add_stencil_column(J, be_len, i, layout.col_len(i - 1));
        add_stencil_column(J, be_len, i, layout.col_len(i));
        if (layout.has_stiffness()) add_stencil_column(J, be_beta, i, layout.col_beta(i));

        jac_twist(config, geom, rest, i, tw_len, tw_twist, tw_gamma);
        add_stencil_column(J, tw_twist, i, layout.col_twist(i));
        if (i > 1) add_stencil_column(J, tw_len, i, layout.col_len(i - 1));
        add_stencil_column(J, tw_len, i, layout.col_len(i));
        if (layout.has_stiffness()) add_stencil_column(J, tw_gamma, i, layout.col_gamma(i));

        jac_stretch(config, geom, rest, i, st_len, st_alpha);
        add_edge_column(J, st_len, i, layout.col_len(i));
        if (layout.has_stiffness()) add_edge_column(J, st_alpha, i, layout.col_alpha(i));
    }
    return J;
}

VectorXd active_mass_diag(const StrandConfig& config, const MassMatrix& M) {
    VectorXd m(config.num_active_dofs());
    for (int k = 0; k < m.size(); ++k) m[k] = M.diag[k + kNumClampedDofs];
    return m;
}

VectorXd constraint(const VectorXd& active_mass, const ForceVector& f) {
    if (active_mass.size() != f.values.size())
        throw DimensionMismatch("constraint: mass/force length mismatch");
    return f.values.array() / active_mass.array().sqrt();
}

BandedSym normal_system(const BandedRect& J, const VectorXd& w_diag, const VectorXd& active_mass, double rho) {
    if (w_diag.size() != J.cols) throw DimensionMismatch("normal_system: weight length mismatch");
    if (active_mass.size() != J.rows) throw DimensionMismatch("normal_system: mass length mismatch");

    int hbw = 0;
    for (int c1 = 0; c1 < J.cols; ++c1) {
        if (J.colval[c1].empty()) continue;
        for (int c2 = c1 + 1; c2 < J.cols; ++c2) {
            if (J.colval[c2].empty()) continue;
            if (J.row_begin[c2] >= J.row_end(c1)) break;
            hbw = std::max(hbw, c2 - c1);
        }
    }

    BandedSym H(J.cols, std::min(hbw, J.cols - 1));
    for (int c = 0; c < J.cols; ++c) H.add(c, c, w_diag[c]);
    for (int c1 = 0; c1 < J.cols; ++c1) {
        if (J.colval[c1].empty()) continue;
        const int b1 = J.row_begin[c1];
        const int e1 = J.row_end(c1);
        for (int c2 = c1; c2 < J.cols; ++c2) {
            if (J.colval[c2].empty()) continue;
            const int b2 = J.row_begin[c2];
            if (b2 >= e1) break;
            const int lo = std::max(b1, b2);
            const int hi = std::min(e1, J.row_end(c2));
            double acc = 0.0;
            for (int r = lo; r < hi; ++r)
                acc += J.colval[c1][r - b1] * J.colval[c2][r - b2] / active_mass[r];
            H.add(c2, c1, rho * acc);
        }
    }
    return H;
}

} // namespace sagfree
