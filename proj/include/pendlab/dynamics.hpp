#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pendlab/energy.hpp"
#include "pendlab/operators.hpp"
#include "pendlab/state.hpp"

namespace pendlab {

// H-space vector: (velocity interior DOFs, omega-like scalar, gamma pair).
struct HVector {
    Eigen::VectorXd v;
    double omega = 0.0;
    Eigen::Vector2d gamma = Eigen::Vector2d::Zero();
};

// Symmetric positive-definite inertia coupling:
//   I (v, omega, gamma) = (rho v + rho omega P[r], C omega + rho <r, v>_W, gamma)
// with r = e3 x x. The second component equals C (omega - a(v)). Solves use the
// closed-form Schur complement s = C - rho ||P r||_W^2 >= C_B > 0.
class InertiaOperator {
  public:
    InertiaOperator(const DiscreteOperators& ops, const PhysicalParams& p);

    HVector apply(const HVector& u) const;
    HVector solve(const HVector& f) const;

    double schur() const { return schur_; }
    const Eigen::VectorXd& pr() const { return pr_; }  // P[r], interior DOFs

    // <I u1, u2> = <u1, I u2>: the energy pairing (W on velocity, plain on
    // scalars); used by tests.
    double pairing(const HVector& f, const HVector& u) const;

  private:
    const DiscreteOperators* ops_;
    PhysicalParams p_;
    Eigen::VectorXd pr_;
    double pr_norm_sq_ = 0.0;  // ||P r||_W^2
    double schur_ = 0.0;
};

// Operator pieces of the evolution form du/dt + I^{-1}(A + B)u = I^{-1} N(u):
// apply_A, apply_B act on (v, omega, gamma); apply_N includes the Leray
// projection of the fluid nonlinearity.
HVector apply_A(const DiscreteOperators& ops, const PhysicalParams& p,
                const HVector& u);
HVector apply_B(const PhysicalParams& p, const HVector& u, EquilibriumSign xi);
HVector apply_N(const DiscreteOperators& ops, const PhysicalParams& p,
                const HVector& u);

struct CflError : std::runtime_error {
    double suggested_dt;
    CflError(const std::string& msg, double dt) : std::runtime_error(msg), suggested_dt(dt) {}
};
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class StepMode { linear, nonlinear };

// One monolithic Crank-Nicolson / Adams-Bashforth-2 step of the coupled
// system: velocity, pressure multiplier, omega and gamma are solved together
// (the continuity rows keep div v = 0 exact; the inertial coupling stays
// symmetric). The nonlinearity (Coriolis + advection, and the gamma remainder)
// is extrapolated to the interval midpoint with AB2 (Euler on the first step).
// In nonlinear mode phi advances with the trapezoidal omega and chi/gamma are
// rebuilt trigonometrically, keeping |chi| = 1 exact.
class Stepper {
  public:
    Stepper(const DiscreteOperators& ops, const PhysicalParams& p, EquilibriumSign xi,
            double dt, StepMode mode);

    void reset(const CoupledState& initial);
    void advance();

    CoupledState current() const;
    const Eigen::VectorXd& v_int() const { return v_; }
    double omega() const { return omega_; }
    double time() const { return t_; }
    double dt() const { return dt_; }
    StepMode mode() const { return mode_; }

  private:
    void check_cfl() const;
    Eigen::VectorXd nonlinear_force() const;   // rho (2 omega e3 x v + (v.grad)v)
    Eigen::Vector2d gamma_nonlinearity() const;  // (omega g2, -omega g1)

    const DiscreteOperators* ops_;
    PhysicalParams p_;
    int xi_;
    double dt_;
    StepMode mode_;
    int m_ = 0, nc_ = 0, n_ = 0;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
    Eigen::SparseMatrix<double> mat_;

    Eigen::VectorXd v_;
    Eigen::VectorXd p_press_;
    double omega_ = 0.0, phi_ = 0.0, t_ = 0.0;
    Eigen::Vector2d gamma_ = Eigen::Vector2d::Zero();

    bool have_hist_ = false;
    Eigen::VectorXd fv_hist_;
    Eigen::Vector2d fg_hist_ = Eigen::Vector2d::Zero();
};

struct TrajectoryRecord {
    double t, omega, phi, chi1, chi2, gamma1, gamma2, v_l2, v_alpha, v_h2proxy;
};

struct TrajectoryMeta {
    double dt = 0.0;
    double horizon = 0.0;
    int nx = 0, ny = 0;
    int xi = +1;
    StepMode mode = StepMode::nonlinear;
    int output_stride = 1;
    std::string scheme = "cn-ab2";
    bool completed = true;
    std::string halt_reason;
};

struct Trajectory {
    TrajectoryMeta meta;
    std::vector<TrajectoryRecord> records;
    std::vector<EnergyRecord> energy;
    CoupledState final_state;
};

struct SimulateOptions {
    int output_stride = 1;               // record every k-th step
    EnergyConvention convention = EnergyConvention::consistent;
    // optional evaluator for ||A0^alpha v|| (reduced-basis machinery lives in
    // spectral-analysis); when absent the v_alpha column is 0
    std::function<double(const Eigen::VectorXd&)> alpha_eval;
    // called at records; return false to stop early
    std::function<bool(const CoupledState&)> observer;
    // capture velocity snapshots every k records (0 = never)
    int snapshot_stride = 0;
    std::vector<std::pair<double, FaceField>>* snapshots = nullptr;
};

Trajectory simulate(const DiscreteOperators& ops, const PhysicalParams& p,
                    EquilibriumSign xi, const CoupledState& initial, double horizon,
                    double dt, StepMode mode, const SimulateOptions& opt = {});

}  // namespace pendlab
