#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "pendlab/dynamics.hpp"
#include "pendlab/reduced.hpp"

namespace pendlab {

// Dense matrix of L = I^{-1}(A + B) in reduced coordinates (W-orthonormal
// divergence-free velocity basis ++ omega ++ gamma), sign convention
// du/dt + L u = 0. Layout: [zeta(0..n-1), omega, gamma1, gamma2].
// With rho = 0 the fluid block is empty and the 3x3 rigid matrix is returned.
Eigen::MatrixXd assemble_L(const DiscreteOperators& ops, const ReducedSpace* red,
                           const PhysicalParams& p, EquilibriumSign xi);

// Stokes block A0 = (mu/rho) * Z^T (-W lap) Z, SPD in reduced coordinates.
Eigen::MatrixXd assemble_A0(const ReducedSpace& red, const DiscreteOperators& ops,
                            const PhysicalParams& p);

struct SpectrumOptions {
    int dense_threshold = 2000;
    double tol_rank_factor = 1e-8;  // kernel: sigma < tol_rank_factor * sigma_max
    double tol_imag = 1e-6;
    double zero_tol = 1e-8;  // |lambda| below this belongs to the kernel group
    double arnoldi_shift = -0.05;
    int xi = 0;               // label only
    std::string grid_id;      // label only
};

struct SpectrumReport {
    std::vector<std::complex<double>> eigenvalues;  // sorted by (Re, Im)
    int kernel_dim = 0;
    double kernel_range_angle = 0.0;  // smallest principal angle N[L] vs R[L], radians
    double imag_axis_gap = 0.0;       // min |Re| over the nonzero spectrum found
    double spectral_gap = 0.0;        // min Re over the nonzero spectrum found
    int unstable_count = 0;           // eigenvalues with Re < -tol_imag
    int xi = 0;
    std::string grid_id;
    std::string method;  // "dense" or "arnoldi"
    int requested = 0;
    double sigma_max = 0.0;
    double tol_rank = 0.0;
    double tol_imag = 0.0;
    double zero_tol = 0.0;
};

// Dense eigendecomposition for sizes up to dense_threshold (all eigenvalues
// examined, the k nearest the imaginary axis reported); shift-invert Arnoldi
// with a deterministic start vector above it. Eigenvalues are reproducible
// across runs to much better than 1e-8.
SpectrumReport spectrum(const Eigen::MatrixXd& L, int k,
                        const SpectrumOptions& opt = {});

struct KernelSpaces {
    Eigen::MatrixXd right;  // orthonormal basis of N[L]
    Eigen::MatrixXd left;   // orthonormal basis of N[L^T]
    double angle = 0.0;     // smallest principal angle between N[L] and R[L]
};

KernelSpaces kernel_spaces(const Eigen::MatrixXd& L, const SpectrumOptions& opt = {});

struct SpectralProjections {
    Eigen::MatrixXd Q;  // oblique projection onto N[L] along R[L]
    Eigen::MatrixXd P;  // I - Q
    double angle = 0.0;
};

// Q = R (L^T R)^{-1} L^T with R, L bases of the right/left kernels. Refuses
// (throws std::domain_error) when the kernel/range angle is below tol: the
// direct-sum decomposition does not hold (Jordan-type degeneracy).
SpectralProjections projections(const Eigen::MatrixXd& L,
                                const SpectrumOptions& opt = {},
                                double angle_tol = 1e-8);

// A0^alpha via eigendecomposition; input must be symmetric positive definite.
Eigen::MatrixXd frac_power(const Eigen::MatrixXd& A0, double alpha);

// Fractional-power norms of velocity fields through the reduced basis.
class AlphaTools {
  public:
    AlphaTools(const DiscreteOperators& ops, const ReducedSpace& red,
               const PhysicalParams& p);

    // ||A0^alpha v||_W for an interior-DOF velocity (divergence-free).
    double norm_v(const Eigen::VectorXd& v_int, double alpha) const;
    // ||A0^alpha v|| + |omega| + |gamma|.
    double norm_state(const CoupledState& s, double alpha) const;

    const Eigen::MatrixXd& a0() const { return a0_; }
    double lambda_min() const { return evd_.eigenvalues().minCoeff(); }

  private:
    const DiscreteOperators* ops_;
    const ReducedSpace* red_;
    Eigen::MatrixXd a0_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> evd_;
};

// ||P(v1.grad v1 - v2.grad v2)|| / [(||A0^a v1|| + ||A0^a v2||) ||A0^a (v1-v2)||].
// Returns nothing when the denominator vanishes (sample skipped).
std::optional<double> kato_diagnostic(const DiscreteOperators& ops,
                                      const AlphaTools& at, const FaceField& v1,
                                      const FaceField& v2, double alpha);

}  // namespace pendlab
