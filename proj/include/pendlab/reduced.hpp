#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "pendlab/operators.hpp"

namespace pendlab {

// W-orthonormal basis Z of the discretely divergence-free, zero-normal-flux
// subspace, realized through discrete stream functions: psi lives on interior
// vertices, u = d(psi)/dy, v = -d(psi)/dx (one-sided MAC differences with psi = 0
// on boundary vertices). curl is injective and its range is exactly the kernel
// of div restricted to admissible fields (dimension count (nx-1)(ny-1) =
// m - (n_cells - 1)), so Z = curl * R^{-1} with G = curl^T W curl = R^T R the
// sparse Cholesky factorization. Z is applied implicitly through triangular
// solves; reduced operators are dense.
class ReducedSpace {
  public:
    explicit ReducedSpace(const DiscreteOperators& ops);

    int dim() const { return n_; }

    // zeta = Z^T W x: W-orthonormal coordinates of the divergence-free part
    // (for divergence-free x this is an isometry: ||zeta||_2 = ||x||_W).
    Eigen::VectorXd to_reduced(const Eigen::VectorXd& x_int) const;
    // x = Z zeta.
    Eigen::VectorXd to_int(const Eigen::VectorXd& zeta) const;

    // Dense Z^T A_w Z for a symmetric weighted operator matrix A_w (m x m);
    // result symmetrized to guard against roundoff.
    Eigen::MatrixXd reduce_spd(const Eigen::SparseMatrix<double>& A_w) const;

    // Coordinates of the (projected) rotation field: q = Z^T W r.
    const Eigen::VectorXd& q() const { return q_; }

  private:
    const DiscreteOperators* ops_;
    int n_ = 0;
    Eigen::SparseMatrix<double> curl_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;  // of G = curl^T W curl
    Eigen::VectorXd q_;
};

}  // namespace pendlab
