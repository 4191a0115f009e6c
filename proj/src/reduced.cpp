#include "pendlab/reduced.hpp"

#include <stdexcept>
#include <vector>

namespace pendlab {

ReducedSpace::ReducedSpace(const DiscreteOperators& ops) : ops_(&ops) {
    const StaggeredGrid& g = ops.grid();
    const int nx = g.nx(), ny = g.ny();
    const double hx = g.hx(), hy = g.hy();
    n_ = (nx - 1) * (ny - 1);
    auto psi_index = [ny](int i, int j) { return (i - 1) * (ny - 1) + (j - 1); };

    std::vector<Eigen::Triplet<double>> ct;
    ct.reserve(4 * n_);
    // u(i,j) = (psi(i,j+1) - psi(i,j)) / hy, psi zero on boundary vertices.
    for (int i = 1; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const int row = g.u_index(i, j);
            if (j + 1 <= ny - 1) ct.emplace_back(row, psi_index(i, j + 1), 1.0 / hy);
            if (j >= 1) ct.emplace_back(row, psi_index(i, j), -1.0 / hy);
        }
    }
    // v(i,j) = -(psi(i+1,j) - psi(i,j)) / hx.
    for (int i = 0; i < nx; ++i) {
        for (int j = 1; j < ny; ++j) {
            const int row = g.v_index(i, j);
            if (i + 1 <= nx - 1) ct.emplace_back(row, psi_index(i + 1, j), -1.0 / hx);
            if (i >= 1) ct.emplace_back(row, psi_index(i, j), 1.0 / hx);
        }
    }
    curl_.resize(g.n_int(), n_);
    curl_.setFromTriplets(ct.begin(), ct.end());

    const double cell = hx * hy;
    Eigen::SparseMatrix<double> G =
        cell * Eigen::SparseMatrix<double>(curl_.transpose()) * curl_;
    llt_.compute(G);
    if (llt_.info() != Eigen::Success)
        throw std::runtime_error("reduced: Gram factorization failed");

    q_ = to_reduced(ops.r_int());
}

Eigen::VectorXd ReducedSpace::to_reduced(const Eigen::VectorXd& x_int) const {
    // zeta = R^{-T} curl^T W x with R = L^T P (P G P^T = L L^T).
    Eigen::VectorXd y = ops_->grid().hx() * ops_->grid().hy() *
                        (curl_.transpose() * x_int);
    y = llt_.permutationP() * y;
    return llt_.matrixL().solve(y);
}

Eigen::VectorXd ReducedSpace::to_int(const Eigen::VectorXd& zeta) const {
    Eigen::VectorXd w = llt_.matrixU().solve(zeta);
    w = llt_.permutationPinv() * w;
    return curl_ * w;
}

Eigen::MatrixXd ReducedSpace::reduce_spd(const Eigen::SparseMatrix<double>& A_w) const {
    Eigen::SparseMatrix<double> B =
        Eigen::SparseMatrix<double>(curl_.transpose()) * A_w * curl_;
    Eigen::MatrixXd Bp = llt_.permutationP() * Eigen::MatrixXd(B) *
                         llt_.permutationPinv();
    Eigen::MatrixXd X = llt_.matrixL().solve(Bp);
    Eigen::MatrixXd M = llt_.matrixL().solve(X.transpose()).transpose();
    return 0.5 * (M + M.transpose());
}

}  // namespace pendlab
