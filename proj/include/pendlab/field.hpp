#pragma once

#include <Eigen/Dense>

namespace pendlab {

// Velocity on a MAC staggered grid: u lives on vertical faces ((nx+1) x ny,
// sample points (x_min + i*hx, y_min + (j+1/2)*hy)), v on horizontal faces
// (nx x (ny+1), sample points (x_min + (i+1/2)*hx, y_min + j*hy)).
// Indexing is (i, j) with i the x index.
struct FaceField {
    Eigen::MatrixXd u;
    Eigen::MatrixXd v;

    FaceField() = default;
    FaceField(int nx, int ny)
        : u(Eigen::MatrixXd::Zero(nx + 1, ny)), v(Eigen::MatrixXd::Zero(nx, ny + 1)) {}

    int nx() const { return static_cast<int>(v.rows()); }
    int ny() const { return static_cast<int>(u.cols()); }

    void setZero() {
        u.setZero();
        v.setZero();
    }

    FaceField& operator+=(const FaceField& o) {
        u += o.u;
        v += o.v;
        return *this;
    }
    FaceField& operator-=(const FaceField& o) {
        u -= o.u;
        v -= o.v;
        return *this;
    }
    FaceField& operator*=(double s) {
        u *= s;
        v *= s;
        return *this;
    }
    friend FaceField operator+(FaceField a, const FaceField& b) { return a += b; }
    friend FaceField operator-(FaceField a, const FaceField& b) { return a -= b; }
    friend FaceField operator*(double s, FaceField a) { return a *= s; }
};

}  // namespace pendlab
