#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pendlab/decay.hpp"
#include "pendlab/spectral.hpp"

namespace pendlab {

// One polynomial term coef * prod_i u_i^{expo[i]} feeding output coordinate
// `out` of the nonlinearity.
struct Monomial {
    int out = 0;
    double coef = 0.0;
    std::vector<int> expo;
};

// Probe ray for the structure bound on N: points u = s*d0 + s*d1 with
// d0 in N[L], d1 in R[L]; ||N(u)|| must scale like ||u1||^expected_slope.
struct ToyRay {
    Eigen::VectorXd d0, d1;
    double expected_slope = 0.0;
};

// Finite-dimensional model du/dt + L u + N(u) = 0 with a declared exponent
// triple (k1, k2, k3) for the bound
//   ||N(u0 + u1)|| <= c [ (||u0|| + ||u1||^k1) ||u1||^k2 + ||u1||^k3 ],
// k1, k2 >= 1, k3 > 1. In finite dimension all fractional norms are
// equivalent; alpha is carried so code paths mirror the cavity problem.
struct ToySystem {
    std::string name;
    int n = 0;
    Eigen::MatrixXd L;
    std::vector<Monomial> terms;
    Eigen::Vector3d kappa{1.0, 1.0, 2.0};
    double alpha = 0.75;
    ToyRay mixed_ray;  // fitted slope should be 1 + k2
    ToyRay pure_ray;   // fitted slope should be k3
    bool expect_jordan_refusal = false;

    Eigen::VectorXd nl(const Eigen::VectorXd& u) const;
};

// Shipped presets: cubic3d (stable, kernel drift), spiral4d (stable complex
// pair), unstable3d (one negative-real-part mode), jordan2d (defective zero
// eigenvalue; projections must refuse it).
ToySystem toy_preset(const std::string& name);
std::vector<std::string> toy_preset_names();

// u = Qu + Pu split through the spectral projections.
std::pair<Eigen::VectorXd, Eigen::VectorXd> split(const Eigen::VectorXd& u,
                                                  const SpectralProjections& proj);

struct ToyTrajectory {
    std::vector<double> t;
    std::vector<Eigen::VectorXd> u;   // full state
    std::vector<Eigen::VectorXd> u0;  // kernel component Qu
    std::vector<Eigen::VectorXd> u1;  // range component Pu
    bool blew_up = false;
    double blowup_t = 0.0;
    double max_split_err = 0.0;      // max |Qu + Pu - u|
    double max_kernel_resid = 0.0;   // max |d(u0)/dt + Q N(u)| (central diff)
};

// Classical RK4 on the full system, recording both projected streams each
// step. Halts with the blow-up flag when |u|_inf exceeds 1e6 (expected for
// instability demonstrations).
ToyTrajectory integrate_toy(const ToySystem& sys, const SpectralProjections& proj,
                            const Eigen::VectorXd& u_init, double horizon,
                            double dt);

// Linear-only consistency of the semigroup formula: integrates du/dt + Lu = 0
// from the range component of u1_init and returns
// ||u(t) - expm(-L t) P u1_init|| (matrix exponential by scaling-and-squaring).
double mild_residual(const ToySystem& sys, const SpectralProjections& proj,
                     const Eigen::VectorXd& u1_init, double t, double dt);

// Structure checks on N: the Lipschitz quotient is sampled on random pairs
// (reported, must be finite), the exponents are fitted by log-log regression
// along the preset's designated rays, and kernel points must be equilibria.
struct StructureReport {
    double lipschitz_max = 0.0;
    double mixed_slope = 0.0, mixed_expected = 0.0;
    double pure_slope = 0.0, pure_expected = 0.0;
    double kernel_nl_max = 0.0;  // max |N(u0)| over sampled kernel points
    bool trivial = false;        // N == 0 on all samples
    bool exponents_ok = false;
    bool kernel_equilibria = false;
    bool pass = false;
};
StructureReport verify_structure(const ToySystem& sys,
                                 const SpectralProjections& proj, int n_samples,
                                 double radius, unsigned seed);

// Stability verdict mirroring the abstract theorem: for a stable system every
// grid point must stay bounded, converge to a kernel equilibrium, and decay at
// rate >= 0.8*b (b = b_factor * gap); for an unstable system every amplitude
// must exit the unit ball.
struct ToyRunResult {
    double u0_norm = 0.0;
    double sup_norm = 0.0;
    bool bounded = false;
    bool exited_ball = false;
    double exit_time = -1.0;
    Eigen::VectorXd ubar;     // final kernel component
    double ubar_drift = 0.0;  // |ubar - Q u(0)|
    double ubar_kernel_resid = 0.0;  // |L ubar|
    double final_u1_norm = 0.0;
    DecayFit u1_fit;
};
struct ToyVerdict {
    bool stable_system = false;
    double gap = 0.0;
    double b = 0.0;
    bool pass = false;
    bool refused = false;  // projections threw (defective kernel)
    std::string refusal_reason;
    std::vector<ToyRunResult> runs;
    bool kernel_drift_observed = false;  // some run with ubar != Q u(0)
    std::string diagnostic;
};
ToyVerdict theorem1_verdict(const ToySystem& sys,
                            const std::vector<Eigen::VectorXd>& u0_grid,
                            double b_factor, double horizon, double dt,
                            double epsilon);

}  // namespace pendlab
