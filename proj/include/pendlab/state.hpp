#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "pendlab/field.hpp"
#include "pendlab/params.hpp"

namespace pendlab {

// Full state of the coupled system. v is the liquid velocity relative to the
// shell (admissible: zero wall-normal component, discretely divergence free),
// omega the angular velocity of the shell, phi the deflection angle from the
// hanging configuration (phi = pi is the inverted one), and gamma the deviation
// of the gravity direction chi (expressed in body coordinates) from the chosen
// equilibrium: gamma = chi - xi * e1.
//
// chi(phi) = (cos phi, -sin phi); d(chi)/dt = -omega e3 x chi <=> d(phi)/dt = omega.
struct CoupledState {
    FaceField v;
    Eigen::VectorXd p;  // cell pressures, diagnostic only (may be empty)
    double omega = 0.0;
    double phi = 0.0;
    Eigen::Vector2d gamma = Eigen::Vector2d::Zero();
    double t = 0.0;

    CoupledState() = default;
    CoupledState(int nx, int ny) : v(nx, ny) {}

    Eigen::Vector2d chi_from_phi() const {
        return {std::cos(phi), -std::sin(phi)};
    }
};

inline Eigen::Vector2d chi_of(double phi) { return {std::cos(phi), -std::sin(phi)}; }

// Builds a state from a gravity direction chi (normalized if necessary),
// consistent phi, and gamma relative to the equilibrium selected by xi.
CoupledState state_from_chi(FaceField v, double omega, Eigen::Vector2d chi,
                            EquilibriumSign xi);

}  // namespace pendlab
