#include "pendlab/operators.hpp"

#include <stdexcept>
#include <vector>

namespace pendlab {

namespace {
using Trip = Eigen::Triplet<double>;
}

DiscreteOperators::DiscreteOperators(const CavityGeometry& geom) : grid_(geom) {
    const int nx = grid_.nx(), ny = grid_.ny();
    const double hx = grid_.hx(), hy = grid_.hy();
    const int m = grid_.n_int(), nc = grid_.n_cells();

    std::vector<Trip> dt;
    dt.reserve(4 * nc);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const int c = grid_.cell_index(i, j);
            if (i >= 1) dt.emplace_back(c, grid_.u_index(i, j), -1.0 / hx);
            if (i + 1 <= nx - 1) dt.emplace_back(c, grid_.u_index(i + 1, j), 1.0 / hx);
            if (j >= 1) dt.emplace_back(c, grid_.v_index(i, j), -1.0 / hy);
            if (j + 1 <= ny - 1) dt.emplace_back(c, grid_.v_index(i, j + 1), 1.0 / hy);
        }
    }
    div_.resize(nc, m);
    div_.setFromTriplets(dt.begin(), dt.end());
    grad_ = -Eigen::SparseMatrix<double>(div_.transpose());

    std::vector<Trip> lt;
    lt.reserve(5 * m);
    const double ax = 1.0 / (hx * hx), ay = 1.0 / (hy * hy);
    for (int i = 1; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const int k = grid_.u_index(i, j);
            double diag = -2.0 * ax - 2.0 * ay;
            if (i - 1 >= 1) lt.emplace_back(k, grid_.u_index(i - 1, j), ax);
            if (i + 1 <= nx - 1) lt.emplace_back(k, grid_.u_index(i + 1, j), ax);
            if (j - 1 >= 0) lt.emplace_back(k, grid_.u_index(i, j - 1), ay);
            else diag -= ay;  // ghost reflection across the bottom wall
            if (j + 1 <= ny - 1) lt.emplace_back(k, grid_.u_index(i, j + 1), ay);
            else diag -= ay;
            lt.emplace_back(k, k, diag);
        }
    }
    for (int i = 0; i < nx; ++i) {
        for (int j = 1; j < ny; ++j) {
            const int k = grid_.v_index(i, j);
            double diag = -2.0 * ax - 2.0 * ay;
            if (j - 1 >= 1) lt.emplace_back(k, grid_.v_index(i, j - 1), ay);
            if (j + 1 <= ny - 1) lt.emplace_back(k, grid_.v_index(i, j + 1), ay);
            if (i - 1 >= 0) lt.emplace_back(k, grid_.v_index(i - 1, j), ax);
            else diag -= ax;
            if (i + 1 <= nx - 1) lt.emplace_back(k, grid_.v_index(i + 1, j), ax);
            else diag -= ax;
            lt.emplace_back(k, k, diag);
        }
    }
    lap_.resize(m, m);
    lap_.setFromTriplets(lt.begin(), lt.end());

    // Neumann Poisson operator S = div div^T (= -div grad), gauge-fixed by
    // eliminating cell 0. S is SPD on the complement of constants.
    Eigen::SparseMatrix<double> S = div_ * Eigen::SparseMatrix<double>(div_.transpose());
    std::vector<Trip> st;
    st.reserve(S.nonZeros());
    for (int k = 0; k < S.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(S, k); it; ++it) {
            if (it.row() >= 1 && it.col() >= 1)
                st.emplace_back(static_cast<int>(it.row()) - 1,
                                static_cast<int>(it.col()) - 1, it.value());
        }
    }
    Eigen::SparseMatrix<double> Sp(nc - 1, nc - 1);
    Sp.setFromTriplets(st.begin(), st.end());
    poisson_.compute(Sp);
    if (poisson_.info() != Eigen::Success)
        throw std::runtime_error("operators: Poisson factorization failed");

    r_int_ = grid_.gather(grid_.rigid_field());
}

Eigen::VectorXd DiscreteOperators::project_int(const Eigen::VectorXd& x) const {
    Eigen::VectorXd rhs = div_ * x;  // compatible: sums to zero by telescoping
    Eigen::VectorXd q(rhs.size());
    q[0] = 0.0;
    q.tail(rhs.size() - 1) = poisson_.solve(rhs.tail(rhs.size() - 1));
    // S q = rhs with S = -div grad, so the corrected field is x - grad(-q).
    return x + grad_ * q;
}

FaceField DiscreteOperators::project(const FaceField& f) const {
    // gather() masks wall-normal faces to zero before the pressure solve.
    return grid_.scatter(project_int(grid_.gather(f)));
}

double DiscreteOperators::quad_cross_moment(const FaceField& f) const {
    const int nx = grid_.nx(), ny = grid_.ny();
    Eigen::MatrixXd gu(nx + 1, ny), gv(nx, ny + 1);
    for (int i = 0; i <= nx; ++i)
        for (int j = 0; j < ny; ++j) gu(i, j) = -grid_.yu(j) * f.u(i, j);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j <= ny; ++j) gv(i, j) = grid_.xv(i) * f.v(i, j);
    return grid_.quad_u(gu) + grid_.quad_v(gv);
}

double DiscreteOperators::grad_norm_sq(const FaceField& f) const {
    const int nx = grid_.nx(), ny = grid_.ny();
    const double hx = grid_.hx(), hy = grid_.hy();
    double s = 0.0;
    // u: x-differences between consecutive sample points (walls hold zeros for
    // admissible fields but stored values are used as-is).
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const double d = (f.u(i + 1, j) - f.u(i, j)) / hx;
            s += d * d * hx * hy;
        }
    // u: y-differences, plus half-cell ghost gradients at the walls.
    for (int i = 1; i < nx; ++i) {
        for (int j = 0; j + 1 < ny; ++j) {
            const double d = (f.u(i, j + 1) - f.u(i, j)) / hy;
            s += d * d * hx * hy;
        }
        const double db = 2.0 * f.u(i, 0) / hy;
        const double dt = 2.0 * f.u(i, ny - 1) / hy;
        s += (db * db + dt * dt) * 0.5 * hx * hy;
    }
    // v: y-differences.
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const double d = (f.v(i, j + 1) - f.v(i, j)) / hy;
            s += d * d * hx * hy;
        }
    // v: x-differences plus wall ghosts.
    for (int j = 1; j < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const double d = (f.v(i + 1, j) - f.v(i, j)) / hx;
            s += d * d * hx * hy;
        }
        const double dl = 2.0 * f.v(0, j) / hx;
        const double dr = 2.0 * f.v(nx - 1, j) / hx;
        s += (dl * dl + dr * dr) * 0.5 * hx * hy;
    }
    return s;
}

double DiscreteOperators::grad_norm_sq_int(const Eigen::VectorXd& x) const {
    return grad_norm_sq(grid_.scatter(x));
}

FaceField DiscreteOperators::advect(const FaceField& f) const {
    const int nx = grid_.nx(), ny = grid_.ny();
    const double hx = grid_.hx(), hy = grid_.hy();
    FaceField a(nx, ny);
    auto ug = [&](int i, int j) -> double {  // u with tangential ghost reflection
        if (j < 0) return -f.u(i, 0);
        if (j > ny - 1) return -f.u(i, ny - 1);
        return f.u(i, j);
    };
    auto vg = [&](int i, int j) -> double {
        if (i < 0) return -f.v(0, j);
        if (i > nx - 1) return -f.v(nx - 1, j);
        return f.v(i, j);
    };
    for (int i = 1; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const double ue = 0.5 * (f.u(i, j) + f.u(i + 1, j));
            const double uw = 0.5 * (f.u(i - 1, j) + f.u(i, j));
            const double mn = 0.5 * (f.v(i - 1, j + 1) + f.v(i, j + 1));
            const double ms = 0.5 * (f.v(i - 1, j) + f.v(i, j));
            const double un = 0.5 * (f.u(i, j) + ug(i, j + 1));
            const double us = 0.5 * (ug(i, j - 1) + f.u(i, j));
            a.u(i, j) = (ue * ue - uw * uw) / hx + (mn * un - ms * us) / hy;
        }
    }
    for (int i = 0; i < nx; ++i) {
        for (int j = 1; j < ny; ++j) {
            const double vn = 0.5 * (f.v(i, j) + f.v(i, j + 1));
            const double vs = 0.5 * (f.v(i, j - 1) + f.v(i, j));
            const double me = 0.5 * (f.u(i + 1, j - 1) + f.u(i + 1, j));
            const double mw = 0.5 * (f.u(i, j - 1) + f.u(i, j));
            const double ve = 0.5 * (f.v(i, j) + vg(i + 1, j));
            const double vw = 0.5 * (vg(i - 1, j) + f.v(i, j));
            a.v(i, j) = (vn * vn - vs * vs) / hy + (me * ve - mw * vw) / hx;
        }
    }
    return a;
}

FaceField DiscreteOperators::coriolis(const FaceField& f) const {
    const int nx = grid_.nx(), ny = grid_.ny();
    FaceField c(nx, ny);
    for (int i = 1; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            c.u(i, j) = -0.25 * (f.v(i - 1, j) + f.v(i - 1, j + 1) + f.v(i, j) +
                                 f.v(i, j + 1));
    for (int i = 0; i < nx; ++i)
        for (int j = 1; j < ny; ++j)
            c.v(i, j) = 0.25 * (f.u(i, j - 1) + f.u(i, j) + f.u(i + 1, j - 1) +
                                f.u(i + 1, j));
    return c;
}

double DiscreteOperators::poincare_min_eig() const {
    if (poincare_ > 0.0) return poincare_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(-lap_);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("operators: Laplacian factorization failed");
    Eigen::VectorXd x = Eigen::VectorXd::Ones(lap_.rows()).normalized();
    double lam = 0.0;
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXd y = llt.solve(x);
        const double ny = y.norm();
        x = y / ny;
        const double next = x.dot(-(lap_ * x));
        if (it > 5 && std::abs(next - lam) < 1e-13 * std::abs(next)) {
            lam = next;
            break;
        }
        lam = next;
    }
    poincare_ = lam;
    return poincare_;
}

double compute_a(const DiscreteOperators& ops, const PhysicalParams& p,
                 const FaceField& v) {
    return -(p.rho / p.c_total) * ops.quad_cross_moment(v);
}

}  // namespace pendlab
