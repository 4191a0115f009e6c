#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "pendlab/operators.hpp"
#include "pendlab/state.hpp"

namespace pendlab {

enum class EnergyConvention { consistent, paper };

// Scalar energy functionals of one snapshot.
//   kinetic     : 0.5 [ rho ||v||^2 - C a^2 + C (omega - a)^2 ]  (total kinetic energy)
//   potential   : -beta^2 chi_1   (consistent convention; the alternative scales by C)
//   dissipation : mu * grad_norm_sq(v)
//   E           : rho ||v||^2 - C a^2          (bounded below by (C_B/C) rho ||v||^2)
//   E1          : same quadratic form evaluated on v_t
//   lyap_linear : kinetic + (beta^2 / (2 xi)) gamma_2^2, the linear-mode Lyapunov form
struct EnergyRecord {
    double t = 0.0;
    double kinetic = 0.0;
    double potential = 0.0;
    double dissipation = 0.0;
    double a = 0.0;
    double E = 0.0;
    double E1 = 0.0;
    double lyap_linear = 0.0;
};

EnergyRecord energy_record(const DiscreteOperators& ops, const PhysicalParams& p,
                           const CoupledState& s, const FaceField* v_t,
                           EquilibriumSign xi,
                           EnergyConvention conv = EnergyConvention::consistent);

struct SeiAudit {
    bool pass = true;
    double worst_violation = 0.0;  // signed; positive means energy was created
    double tol = 0.0;
    std::size_t at_record = 0;    // index t of the worst pair (s, t)
    std::size_t from_record = 0;  // index s
};

// Checks E(t) + U(t) + mu * int_s^t ||grad v||^2 <= E(s) + U(s) + tol over all
// record pairs s <= t (trapezoidal accumulation of the recorded dissipation).
// tol = 10 dt^2 E_0 with E_0 the initial energy above the hanging equilibrium,
// plus a tiny roundoff floor.
SeiAudit sei_audit(const std::vector<EnergyRecord>& records, double dt);

// Per-interval residual of the linear energy identity:
//   residual_k = d(lyap_linear)/dt + mu ||grad v||^2 (endpoint-averaged),
// which converges at second order. Throws if the trajectory is not linear-mode
// (callers pass the mode flag from trajectory metadata).
struct IdentityResidual {
    std::vector<double> residual;  // size records-1, at interval midpoints
    double max_abs = 0.0;
};
IdentityResidual linear_identity_residual(const std::vector<EnergyRecord>& records,
                                          bool linear_mode);

struct BasinCheck {
    bool inside = false;
    double lhs = 0.0;  // rho ||v0||^2 + C (omega0 - a0)^2
    double rhs = 0.0;  // 2 beta^2 (1 + chi_1(0))  [consistent convention]
};

BasinCheck basin_check(const DiscreteOperators& ops, const PhysicalParams& p,
                       const CoupledState& initial,
                       EnergyConvention conv = EnergyConvention::consistent);

}  // namespace pendlab
