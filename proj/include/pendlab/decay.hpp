#pragma once

#include <string>
#include <vector>

#include "pendlab/dynamics.hpp"
#include "pendlab/spectral.hpp"

namespace pendlab {

// Exponential-envelope fit y ~ amplitude * exp(-kappa t) over a time window.
// residual is the maximum deviation of log y from the fitted line (i.e. the
// relative envelope error). A fit is well conditioned when the window holds
// >= 20 positive samples spanning >= 2 e-foldings of y.
struct DecayFit {
    double kappa = 0.0;
    double amplitude = 0.0;
    double t_a = 0.0, t_b = 0.0;
    double residual = 0.0;
    std::string series_id;
    int n_samples = 0;
    bool valid = false;             // a least-squares line was produced
    bool well_conditioned = false;  // sample-count and e-folding requirements met
    bool clipped = false;           // nonpositive samples clipped at 1e-300
    bool envelope = false;          // fitted on the local-maxima envelope
    std::string diagnostic;
};

// Log-linear least squares of y(t) restricted to [window_a, window_b].
// Oscillatory series are refit on the envelope of local maxima when the plain
// residual exceeds 0.1 (the fallback keeps the better of the two fits).
DecayFit fit_exponential(const std::vector<double>& t, const std::vector<double>& y,
                         double window_a, double window_b,
                         const std::string& series_id);

// Named scalar series derived from a trajectory:
//   v_l2, v_alpha, v_h2proxy, omega, gamma, chi_err  — trajectory columns
//   composite  — v_alpha + |omega| + |gamma| (the state norm)
//   v_t        — sqrt(max(E1,0)/rho) from the energy records
//   omega_dot  — d(omega)/dt reconstructed as da/dt + (beta^2/C) gamma2,
//                with da/dt by central differences of a(t)
struct Series {
    std::vector<double> t, y;
    std::string id;
};
Series series_from_trajectory(const Trajectory& traj, const PhysicalParams& p,
                              const std::string& id);

// Transient-time detector: the first record time after which (i) the kinetic
// energy stays below `energy_threshold` for the rest of the run and (ii) the
// log-linear fit of ||v|| over the remaining tail has residual below 0.1.
struct TransientReport {
    bool found = false;
    double t0 = 0.0;
    int index = -1;
    double tail_residual = 0.0;
    std::string diagnostic;  // "horizon exhaustion" when never satisfied
};
TransientReport detect_t0(const Trajectory& traj, double energy_threshold);

// Fitted decay rate against the spectral gap; pass when kappa/gap >= 0.8.
// Requires a stable-side report (xi = +1, positive gap).
struct RateVsGap {
    double kappa = 0.0;
    double gap = 0.0;
    double ratio = 0.0;
    bool pass = false;
};
RateVsGap rate_vs_gap(const DecayFit& fit, const SpectrumReport& report);

}  // namespace pendlab
