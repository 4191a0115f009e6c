#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>

#include "pendlab/field.hpp"
#include "pendlab/grid.hpp"
#include "pendlab/params.hpp"

namespace pendlab {

// Discrete differential operators on the MAC grid, acting on the flattened
// interior DOF vector (see StaggeredGrid). Conventions:
//   div:  cells x m, second-order face differences; wall-normal faces are zero.
//   grad: m x cells, grad = -div^T exactly (discrete duality under the uniform
//         interior weights).
//   lap:  m x m, 5-point Laplacian with homogeneous Dirichlet values at
//         wall-normal sample points and ghost reflection (u_ghost = -u_in)
//         across tangential walls, making <lap v, v>_W = -grad_norm_sq(v)
//         an exact identity.
// The Leray projection solves the Neumann Poisson problem div grad q = div v
// (compatible by exact telescoping; gauge fixed by pinning cell 0) and
// subtracts grad q, yielding an exactly divergence-free field. It is
// idempotent and W-self-adjoint to solver roundoff.
class DiscreteOperators {
  public:
    explicit DiscreteOperators(const CavityGeometry& geom);

    const StaggeredGrid& grid() const { return grid_; }
    const Eigen::SparseMatrix<double>& div() const { return div_; }
    const Eigen::SparseMatrix<double>& grad() const { return grad_; }
    const Eigen::SparseMatrix<double>& lap() const { return lap_; }
    const Eigen::VectorXd& r_int() const { return r_int_; }  // rotation field, interior DOFs

    Eigen::VectorXd project_int(const Eigen::VectorXd& x) const;
    FaceField project(const FaceField& f) const;

    Eigen::VectorXd lap_apply(const Eigen::VectorXd& x) const { return lap_ * x; }

    // integral of (e3 x x) . v over the cavity (full-face trapezoid quadrature,
    // so rigid-body fields with nonzero wall-normal samples integrate exactly).
    double quad_cross_moment(const FaceField& f) const;

    // Exact discrete Dirichlet energy: sum of squared one-sided differences,
    // wall gradients from the no-slip ghost convention. Equals -<lap v, v>_W
    // for admissible fields.
    double grad_norm_sq(const FaceField& f) const;
    double grad_norm_sq_int(const Eigen::VectorXd& x) const;

    // Centered divergence-form advection (v . grad) v; energy-neutral in the
    // W-inner product for discretely divergence-free fields.
    FaceField advect(const FaceField& f) const;

    // e3 x v averaged to the native face positions of each component.
    FaceField coriolis(const FaceField& f) const;

    // Smallest eigenvalue of -lap on interior DOFs (discrete Poincare
    // constant: grad_norm_sq(v) >= lambda ||v||_W^2). Computed lazily by
    // inverse power iteration, deterministic start.
    double poincare_min_eig() const;

  private:
    StaggeredGrid grid_;
    Eigen::SparseMatrix<double> div_, grad_, lap_;
    Eigen::VectorXd r_int_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> poisson_;  // pinned -div grad
    mutable double poincare_ = -1.0;
};

// Angular-momentum average a(v) = -(rho/C) * integral (e3 x x) . v.
// With this sign the total angular momentum is C (omega - a) and the
// shell equation reads d/dt [C(omega - a)] = beta^2 gamma_2.
double compute_a(const DiscreteOperators& ops, const PhysicalParams& p,
                 const FaceField& v);

}  // namespace pendlab
