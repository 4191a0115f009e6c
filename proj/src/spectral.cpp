#include "pendlab/spectral.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace pendlab {

namespace {

// Largest singular value estimate by power iteration on L^T L (deterministic
// start); used to scale rank tolerances when a full SVD is too expensive.
double sigma_max_estimate(const Eigen::MatrixXd& L) {
    Eigen::VectorXd x = Eigen::VectorXd::Ones(L.cols()).normalized();
    double s = 0.0;
    for (int it = 0; it < 40; ++it) {
        Eigen::VectorXd y = L * x;
        const double ns = y.norm();
        if (ns == 0.0) return 0.0;
        x = (L.transpose() * y).normalized();
        if (it > 4 && std::abs(ns - s) <= 1e-12 * ns) return ns;
        s = ns;
    }
    return s;
}

struct ArnoldiOut {
    std::vector<std::complex<double>> lambda;  // converged eigenvalues of L
    bool ok = false;
};

// Shift-invert Arnoldi: the k eigenvalues of L nearest `shift`. Deterministic:
// fixed start vector, classical Gram-Schmidt with one reorthogonalization.
// `lu` factors L - shift*I (shared with the kernel iterations to avoid
// repeated O(n^3) factorizations).
ArnoldiOut arnoldi_nearest(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu,
                           double shift, int n, int k, int p) {
    p = std::min(p, n);
    Eigen::MatrixXd V(n, p + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p + 1, p);
    V.col(0) = Eigen::VectorXd::Ones(n).normalized();
    int m = p;
    bool breakdown = false;
    for (int j = 0; j < p; ++j) {
        Eigen::VectorXd w = lu.solve(V.col(j));
        for (int pass = 0; pass < 2; ++pass) {
            for (int i = 0; i <= j; ++i) {
                const double h = V.col(i).dot(w);
                w -= h * V.col(i);
                H(i, j) += h;
            }
        }
        H(j + 1, j) = w.norm();
        if (H(j + 1, j) < 1e-13) {
            m = j + 1;  // invariant subspace reached
            breakdown = true;
            break;
        }
        V.col(j + 1) = w / H(j + 1, j);
    }

    Eigen::EigenSolver<Eigen::MatrixXd> es(H.topLeftCorner(m, m));
    if (es.info() != Eigen::Success) return {};

    struct Ritz {
        std::complex<double> theta;
        double resid;
    };
    std::vector<Ritz> ritz(m);
    const double hlast = breakdown ? 0.0 : H(m, m - 1);
    for (int i = 0; i < m; ++i) {
        ritz[i].theta = es.eigenvalues()[i];
        ritz[i].resid = std::abs(hlast) * std::abs(es.eigenvectors()(m - 1, i));
    }
    std::sort(ritz.begin(), ritz.end(), [](const Ritz& a, const Ritz& b) {
        const double ma = std::abs(a.theta), mb = std::abs(b.theta);
        if (ma != mb) return ma > mb;
        return a.theta.imag() < b.theta.imag();
    });

    ArnoldiOut out;
    const int want = std::min(k, m);
    for (int i = 0; i < want; ++i) {
        if (!(ritz[i].resid <= 1e-9 * std::abs(ritz[i].theta))) return {};
        out.lambda.push_back(shift + 1.0 / ritz[i].theta);
    }
    out.ok = true;
    return out;
}

// Kernel vectors by deflated inverse iteration (used on the Arnoldi path,
// where the zero eigenvalue is simple and well separated). `solve` applies
// (L - shift I)^{-1} or its transpose.
template <typename Solve>
Eigen::MatrixXd kernel_basis_iter(int n, int dim, const Solve& solve) {
    Eigen::MatrixXd B(n, dim);
    for (int c = 0; c < dim; ++c) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x[i] = std::cos(0.7 * (i + 1) * (c + 1));
        x.normalize();
        for (int it = 0; it < 200; ++it) {
            for (int cc = 0; cc < c; ++cc) x -= B.col(cc).dot(x) * B.col(cc);
            Eigen::VectorXd y = solve(x);
            for (int cc = 0; cc < c; ++cc) y -= B.col(cc).dot(y) * B.col(cc);
            y.normalize();
            const double delta = std::min((y - x).norm(), (y + x).norm());
            x = y;
            if (it > 3 && delta < 1e-15) break;
        }
        B.col(c) = x;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, dim);
}

double principal_angle(const Eigen::MatrixXd& right, const Eigen::MatrixXd& left) {
    // R[L] = (N[L^T])^perp, so the smallest principal angle between N[L] and
    // R[L] is asin of the smallest singular value of left^T right.
    if (right.cols() == 0 || left.cols() == 0) return 0.0;
    Eigen::MatrixXd S = left.transpose() * right;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
    const double smin = svd.singularValues().minCoeff();
    return std::asin(std::min(1.0, std::max(0.0, smin)));
}

// `lu` (factorization of L - shift I) is optional; it is built on demand when
// the iterative path needs it.
KernelSpaces kernel_spaces_dim(const Eigen::MatrixXd& L, int dim,
                               const SpectrumOptions& opt,
                               const Eigen::PartialPivLU<Eigen::MatrixXd>* lu) {
    KernelSpaces ks;
    if (dim <= 0) return ks;
    const int n = static_cast<int>(L.rows());
    if (n <= opt.dense_threshold) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(L,
                                           Eigen::ComputeThinU | Eigen::ComputeThinV);
        ks.right = svd.matrixV().rightCols(dim);
        ks.left = svd.matrixU().rightCols(dim);
    } else {
        Eigen::PartialPivLU<Eigen::MatrixXd> local;
        if (!lu) {
            local.compute(L - opt.arnoldi_shift * Eigen::MatrixXd::Identity(n, n));
            lu = &local;
        }
        ks.right = kernel_basis_iter(
            n, dim, [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                return lu->solve(x);
            });
        ks.left = kernel_basis_iter(
            n, dim, [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                return lu->transpose().solve(x);
            });
    }
    ks.angle = principal_angle(ks.right, ks.left);
    return ks;
}

int kernel_dim_dense(const Eigen::MatrixXd& L, const SpectrumOptions& opt,
                     double* sigma_max_out) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(L);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double smax = sv.size() ? sv[0] : 0.0;
    if (sigma_max_out) *sigma_max_out = smax;
    return static_cast<int>((sv.array() < opt.tol_rank_factor * smax).count());
}

}  // namespace

Eigen::MatrixXd assemble_L(const DiscreteOperators& ops, const ReducedSpace* red,
                           const PhysicalParams& p, EquilibriumSign xi) {
    const int xiv = sign_value(xi);
    if (p.rho == 0.0) {
        // Fluid absent: state reduces to (omega, gamma1, gamma2) with
        // C d(omega)/dt = beta^2 gamma2 and d(gamma)/dt = -xi omega e2.
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(3, 3);
        L(0, 2) = -p.beta_sq / p.c_total;
        L(2, 0) = xiv;
        return L;
    }
    if (!red) throw std::invalid_argument("assemble_L: reduced basis required");
    const int n = red->dim();
    const double cell = ops.grid().hx() * ops.grid().hy();
    Eigen::MatrixXd K0 = red->reduce_spd(-cell * ops.lap());
    const Eigen::VectorXd& q = red->q();
    const double s = p.c_total - p.rho * q.squaredNorm();
    if (!(s > 0.0))
        throw std::runtime_error("assemble_L: inertia Schur complement <= 0");

    const int N = n + 3, iw = n, ig2 = n + 2;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N, N);
    Eigen::VectorXd K0q = K0 * q;
    L.topLeftCorner(n, n) = (p.mu / p.rho) * K0 + (p.mu / s) * q * K0q.transpose();
    L.row(iw).head(n) = -(p.mu / s) * K0q.transpose();
    L.col(ig2).head(n) = (p.beta_sq / s) * q;
    L(iw, ig2) = -p.beta_sq / s;
    L(ig2, iw) = xiv;
    return L;
}

Eigen::MatrixXd assemble_A0(const ReducedSpace& red, const DiscreteOperators& ops,
                            const PhysicalParams& p) {
    if (p.rho == 0.0) throw std::invalid_argument("assemble_A0: requires rho > 0");
    const double cell = ops.grid().hx() * ops.grid().hy();
    return (p.mu / p.rho) * red.reduce_spd(-cell * ops.lap());
}

SpectrumReport spectrum(const Eigen::MatrixXd& L, int k, const SpectrumOptions& opt) {
    const int n = static_cast<int>(L.rows());
    if (k < 1 || k > n)
        throw std::invalid_argument("spectrum: k must be within [1, dim]");
    SpectrumReport rep;
    rep.requested = k;
    rep.xi = opt.xi;
    rep.grid_id = opt.grid_id;
    rep.tol_imag = opt.tol_imag;
    rep.zero_tol = opt.zero_tol;
    rep.imag_axis_gap = std::numeric_limits<double>::infinity();
    rep.spectral_gap = std::numeric_limits<double>::infinity();

    std::vector<std::complex<double>> evs;
    std::unique_ptr<Eigen::PartialPivLU<Eigen::MatrixXd>> lu;
    if (n <= opt.dense_threshold) {
        rep.method = "dense";
        Eigen::EigenSolver<Eigen::MatrixXd> es(L, /*computeEigenvectors=*/false);
        if (es.info() != Eigen::Success)
            throw SolverError("spectrum: dense eigensolver failed");
        rep.kernel_dim = kernel_dim_dense(L, opt, &rep.sigma_max);
        rep.tol_rank = opt.tol_rank_factor * rep.sigma_max;
        std::vector<std::complex<double>> all;
        all.reserve(n);
        for (int i = 0; i < n; ++i) all.push_back(es.eigenvalues()[i]);
        for (const auto& ev : all) {
            if (std::abs(ev) <= opt.zero_tol) continue;
            rep.imag_axis_gap = std::min(rep.imag_axis_gap, std::abs(ev.real()));
            rep.spectral_gap = std::min(rep.spectral_gap, ev.real());
            if (ev.real() < -opt.tol_imag) ++rep.unstable_count;
        }
        std::sort(all.begin(), all.end(),
                  [](const std::complex<double>& a, const std::complex<double>& b) {
                      const double ma = std::abs(a.real()), mb = std::abs(b.real());
                      if (ma != mb) return ma < mb;
                      if (a.real() != b.real()) return a.real() < b.real();
                      return std::abs(a.imag()) < std::abs(b.imag());
                  });
        evs.assign(all.begin(), all.begin() + std::min<std::size_t>(k, all.size()));
    } else {
        rep.method = "arnoldi";
        rep.sigma_max = sigma_max_estimate(L);
        rep.tol_rank = opt.tol_rank_factor * rep.sigma_max;
        lu = std::make_unique<Eigen::PartialPivLU<Eigen::MatrixXd>>(
            L - opt.arnoldi_shift * Eigen::MatrixXd::Identity(n, n));
        int p = std::max(2 * k + 10, 60);
        ArnoldiOut ao;
        for (int attempt = 0; attempt < 3 && !ao.ok; ++attempt) {
            ao = arnoldi_nearest(*lu, opt.arnoldi_shift, n, k, p);
            if (!ao.ok) p = std::min(2 * p, n);
        }
        if (!ao.ok)
            throw SolverError("spectrum: Arnoldi failed to converge (subspace " +
                              std::to_string(p) + ")");
        evs = std::move(ao.lambda);
        for (const auto& ev : evs) {
            if (std::abs(ev) <= std::max(opt.zero_tol, rep.tol_rank)) {
                ++rep.kernel_dim;
                continue;
            }
            rep.imag_axis_gap = std::min(rep.imag_axis_gap, std::abs(ev.real()));
            rep.spectral_gap = std::min(rep.spectral_gap, ev.real());
            if (ev.real() < -opt.tol_imag) ++rep.unstable_count;
        }
    }

    std::sort(evs.begin(), evs.end(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                  if (a.real() != b.real()) return a.real() < b.real();
                  return a.imag() < b.imag();
              });
    rep.eigenvalues = std::move(evs);
    rep.kernel_range_angle =
        (rep.kernel_dim > 0)
            ? kernel_spaces_dim(L, rep.kernel_dim, opt, lu.get()).angle
            : 0.0;
    return rep;
}

KernelSpaces kernel_spaces(const Eigen::MatrixXd& L, const SpectrumOptions& opt) {
    const int n = static_cast<int>(L.rows());
    int dim;
    if (n <= opt.dense_threshold) {
        dim = kernel_dim_dense(L, opt, nullptr);
    } else {
        SpectrumReport rep = spectrum(L, std::min(n, 10), opt);
        dim = rep.kernel_dim;
    }
    return kernel_spaces_dim(L, dim, opt, nullptr);
}

SpectralProjections projections(const Eigen::MatrixXd& L, const SpectrumOptions& opt,
                                double angle_tol) {
    KernelSpaces ks = kernel_spaces(L, opt);
    if (ks.right.cols() == 0)
        throw std::domain_error("projections: kernel is trivial (dim 0)");
    if (!(ks.angle > angle_tol))
        throw std::domain_error(
            "projections: kernel/range angle " + std::to_string(ks.angle) +
            " below tolerance - the direct-sum decomposition does not hold");
    const Eigen::MatrixXd& R = ks.right;
    const Eigen::MatrixXd& Ll = ks.left;
    Eigen::MatrixXd small = Ll.transpose() * R;
    SpectralProjections pr;
    pr.angle = ks.angle;
    pr.Q = R * small.partialPivLu().solve(Ll.transpose());
    pr.P = Eigen::MatrixXd::Identity(L.rows(), L.cols()) - pr.Q;
    return pr;
}

Eigen::MatrixXd frac_power(const Eigen::MatrixXd& A0, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("frac_power: alpha must lie in [0, 1]");
    const double asym = (A0 - A0.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, A0.cwiseAbs().maxCoeff());
    if (asym > 1e-10 * scale)
        throw std::domain_error("frac_power: input not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> evd(A0);
    if (evd.info() != Eigen::Success)
        throw std::runtime_error("frac_power: eigendecomposition failed");
    if (!(evd.eigenvalues().minCoeff() > 0.0))
        throw std::domain_error("frac_power: input not positive definite");
    Eigen::VectorXd lam = evd.eigenvalues().array().pow(alpha);
    return evd.eigenvectors() * lam.asDiagonal() * evd.eigenvectors().transpose();
}

AlphaTools::AlphaTools(const DiscreteOperators& ops, const ReducedSpace& red,
                       const PhysicalParams& p)
    : ops_(&ops), red_(&red) {
    a0_ = assemble_A0(red, ops, p);
    evd_.compute(a0_);
    if (evd_.info() != Eigen::Success)
        throw std::runtime_error("alpha_tools: eigendecomposition failed");
    if (!(evd_.eigenvalues().minCoeff() > 0.0))
        throw std::runtime_error("alpha_tools: Stokes block not positive definite");
}

double AlphaTools::norm_v(const Eigen::VectorXd& v_int, double alpha) const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("alpha_norm: alpha must lie in [0, 1]");
    Eigen::VectorXd zeta = red_->to_reduced(v_int);
    Eigen::VectorXd y = evd_.eigenvectors().transpose() * zeta;
    return (evd_.eigenvalues().array().pow(alpha) * y.array()).matrix().norm();
}

double AlphaTools::norm_state(const CoupledState& s, double alpha) const {
    return norm_v(ops_->grid().gather(s.v), alpha) + std::abs(s.omega) +
           s.gamma.norm();
}

std::optional<double> kato_diagnostic(const DiscreteOperators& ops,
                                      const AlphaTools& at, const FaceField& v1,
                                      const FaceField& v2, double alpha) {
    const StaggeredGrid& g = ops.grid();
    Eigen::VectorXd d = g.gather(ops.advect(v1)) - g.gather(ops.advect(v2));
    const double num = std::sqrt(g.norm_w_sq(ops.project_int(d)));
    const double n1 = at.norm_v(g.gather(v1), alpha);
    const double n2 = at.norm_v(g.gather(v2), alpha);
    Eigen::VectorXd diff = g.gather(v1) - g.gather(v2);
    const double nd = at.norm_v(diff, alpha);
    const double denom = (n1 + n2) * nd;
    if (denom == 0.0) return std::nullopt;
    return num / denom;
}

}  // namespace pendlab
