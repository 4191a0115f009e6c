#include "pendlab/state.hpp"

#include <stdexcept>

namespace pendlab {

CoupledState state_from_chi(FaceField v, double omega, Eigen::Vector2d chi,
                            EquilibriumSign xi) {
    const double n = chi.norm();
    if (!(n > 0.0) || !std::isfinite(n))
        throw std::invalid_argument("state_from_chi: chi must be a nonzero finite vector");
    chi /= n;
    CoupledState s;
    s.v = std::move(v);
    s.omega = omega;
    // chi = (cos phi, -sin phi)
    s.phi = std::atan2(-chi.y(), chi.x());
    s.gamma = chi - sign_value(xi) * Eigen::Vector2d::UnitX();
    return s;
}

}  // namespace pendlab
