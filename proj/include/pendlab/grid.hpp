#pragma once

#include <Eigen/Dense>

#include "pendlab/field.hpp"
#include "pendlab/params.hpp"

namespace pendlab {

// Uniform MAC staggered grid over the cavity rectangle. Owns the coordinates,
// the quadrature weights W (face control volumes: full cells in the interior,
// half cells on wall-tangential rows next to walls, zero weight never — wall
// normal faces carry half cells too but their values are pinned to 0 by the
// no-penetration mask), and the flattening of interior (non-wall-normal)
// degrees of freedom into a single vector.
//
// Interior DOF layout: first the u faces with i in [1, nx-1], j in [0, ny-1]
// (column-major in j), then the v faces with i in [0, nx-1], j in [1, ny-1].
class StaggeredGrid {
  public:
    explicit StaggeredGrid(const CavityGeometry& geom);

    const CavityGeometry& geom() const { return geom_; }
    int nx() const { return geom_.nx; }
    int ny() const { return geom_.ny; }
    double hx() const { return geom_.hx(); }
    double hy() const { return geom_.hy(); }

    // Face sample coordinates.
    double xu(int i) const { return geom_.x_min() + i * geom_.hx(); }
    double yu(int j) const { return geom_.y_min() + (j + 0.5) * geom_.hy(); }
    double xv(int i) const { return geom_.x_min() + (i + 0.5) * geom_.hx(); }
    double yv(int j) const { return geom_.y_min() + j * geom_.hy(); }
    double xc(int i) const { return geom_.x_min() + (i + 0.5) * geom_.hx(); }
    double yc(int j) const { return geom_.y_min() + (j + 0.5) * geom_.hy(); }

    int n_cells() const { return nx() * ny(); }
    int n_u_int() const { return (nx() - 1) * ny(); }
    int n_v_int() const { return nx() * (ny() - 1); }
    int n_int() const { return n_u_int() + n_v_int(); }

    int u_index(int i, int j) const { return (i - 1) * ny() + j; }            // i in [1,nx-1]
    int v_index(int i, int j) const { return n_u_int() + i * (ny() - 1) + (j - 1); }
    int cell_index(int i, int j) const { return i * ny() + j; }

    // Quadrature weight of an interior DOF (control volume of the face).
    const Eigen::VectorXd& weights() const { return w_int_; }

    // Interior DOFs <-> full face field (wall-normal faces set to zero).
    Eigen::VectorXd gather(const FaceField& f) const;
    FaceField scatter(const Eigen::VectorXd& x) const;

    // Weighted inner product / norm. The vector overload runs over interior
    // DOFs (uniform weights); the FaceField overload uses the full-face
    // control volumes and agrees with it on admissible fields.
    double inner_w(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
        return (a.array() * b.array() * w_int_.array()).sum();
    }
    double norm_w_sq(const Eigen::VectorXd& a) const { return inner_w(a, a); }
    double inner_w(const FaceField& a, const FaceField& b) const;
    double norm_w_sq(const FaceField& a) const { return inner_w(a, a); }

    // The planar rotation generator field r(x) = (-y, x) sampled on all faces
    // (including wall faces, where its tangential component is nonzero).
    const FaceField& rigid_field() const { return rigid_; }

    // Face control-volume quadrature of x.y over *all* faces of one component
    // (used for moments of fields with nonzero tangential wall values, e.g.
    // the rigid field). a = u- or v-component matrix laid out like FaceField.
    double quad_u(const Eigen::MatrixXd& a) const;
    double quad_v(const Eigen::MatrixXd& a) const;

  private:
    CavityGeometry geom_;
    Eigen::VectorXd w_int_;
    Eigen::VectorXd wu_full_, wv_full_;  // per-face control volumes, flattened column-major
    FaceField rigid_;
};

}  // namespace pendlab
