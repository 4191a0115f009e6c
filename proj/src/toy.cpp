#include "pendlab/toy.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace pendlab {

namespace {

double pow_int(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

Eigen::VectorXd unit(int n, int i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[i] = 1.0;
    return e;
}

double slope_loglog(const std::vector<double>& lx, const std::vector<double>& ly) {
    const int n = static_cast<int>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double det = n * sxx - sx * sx;
    return (n * sxy - sx * sy) / det;
}

}  // namespace

Eigen::VectorXd ToySystem::nl(const Eigen::VectorXd& u) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (const auto& m : terms) {
        double v = m.coef;
        for (int i = 0; i < n; ++i)
            if (m.expo[i] != 0) v *= pow_int(u[i], m.expo[i]);
        out[m.out] += v;
    }
    return out;
}

ToySystem toy_preset(const std::string& name) {
    ToySystem sys;
    sys.name = name;
    if (name == "cubic3d") {
        // diag(0,1,2) with N = (u2 u3, u1 u2^2, u2^3): kernel span{e1},
        // gap 1, genuine kernel drift through the first component.
        sys.n = 3;
        sys.L = Eigen::Vector3d(0.0, 1.0, 2.0).asDiagonal();
        sys.terms = {{0, 1.0, {0, 1, 1}}, {1, 1.0, {1, 2, 0}}, {2, 1.0, {0, 3, 0}}};
        sys.kappa = Eigen::Vector3d(1.0, 1.0, 3.0);
        sys.mixed_ray.d0 = unit(3, 0);
        sys.mixed_ray.d1 = (unit(3, 1) + unit(3, 2)).normalized();
        sys.mixed_ray.expected_slope = 1.0 + sys.kappa[1];
        sys.pure_ray.d0 = Eigen::VectorXd::Zero(3);
        sys.pure_ray.d1 = unit(3, 1);
        sys.pure_ray.expected_slope = sys.kappa[2];
    } else if (name == "spiral4d") {
        // Complex stable pair 0.5 +- 2i: the gap (0.5) comes from a spiral,
        // exercising envelope fits of |u1|.
        sys.n = 4;
        sys.L = Eigen::MatrixXd::Zero(4, 4);
        sys.L(1, 1) = 0.5;
        sys.L(1, 2) = -2.0;
        sys.L(2, 1) = 2.0;
        sys.L(2, 2) = 0.5;
        sys.L(3, 3) = 2.0;
        sys.terms = {{0, 1.0, {0, 1, 0, 1}},
                     {1, 1.0, {1, 0, 2, 0}},
                     {2, -1.0, {0, 2, 0, 1}},
                     {3, 1.0, {0, 0, 3, 0}}};
        sys.kappa = Eigen::Vector3d(1.0, 1.0, 3.0);
        sys.mixed_ray.d0 = unit(4, 0);
        sys.mixed_ray.d1 = (unit(4, 1) + unit(4, 2) + unit(4, 3)).normalized();
        sys.mixed_ray.expected_slope = 1.0 + sys.kappa[1];
        sys.pure_ray.d0 = Eigen::VectorXd::Zero(4);
        sys.pure_ray.d1 = unit(4, 2);
        sys.pure_ray.expected_slope = sys.kappa[2];
    } else if (name == "unstable3d") {
        // One range eigenvalue with negative real part (-0.5): growth
        // e^{+0.5 t} from arbitrarily small data in the e2 direction.
        sys.n = 3;
        sys.L = Eigen::Vector3d(0.0, -0.5, 2.0).asDiagonal();
        sys.terms = {{0, 1.0, {0, 1, 1}}, {1, 1.0, {1, 2, 0}}, {2, 1.0, {0, 3, 0}}};
        sys.kappa = Eigen::Vector3d(1.0, 1.0, 3.0);
        sys.mixed_ray.d0 = unit(3, 0);
        sys.mixed_ray.d1 = (unit(3, 1) + unit(3, 2)).normalized();
        sys.mixed_ray.expected_slope = 1.0 + sys.kappa[1];
        sys.pure_ray.d0 = Eigen::VectorXd::Zero(3);
        sys.pure_ray.d1 = unit(3, 1);
        sys.pure_ray.expected_slope = sys.kappa[2];
    } else if (name == "jordan2d") {
        // Defective zero eigenvalue: N[L] and R[L] coincide (both span{e1}),
        // so the oblique projection does not exist; used as a negative
        // control for the direct-sum gate.
        sys.n = 2;
        sys.L = Eigen::MatrixXd::Zero(2, 2);
        sys.L(0, 1) = 1.0;
        sys.kappa = Eigen::Vector3d(1.0, 1.0, 2.0);
        sys.expect_jordan_refusal = true;
        sys.mixed_ray.d0 = unit(2, 0);
        sys.mixed_ray.d1 = unit(2, 1);
        sys.mixed_ray.expected_slope = 0.0;
        sys.pure_ray.d0 = Eigen::VectorXd::Zero(2);
        sys.pure_ray.d1 = unit(2, 1);
        sys.pure_ray.expected_slope = 0.0;
    } else {
        throw std::invalid_argument("toy_preset: unknown preset '" + name + "'");
    }
    for (const auto& m : sys.terms)
        if (static_cast<int>(m.expo.size()) != sys.n)
            throw std::logic_error("toy_preset: malformed monomial");
    return sys;
}

std::vector<std::string> toy_preset_names() {
    return {"cubic3d", "spiral4d", "unstable3d", "jordan2d"};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> split(const Eigen::VectorXd& u,
                                                  const SpectralProjections& proj) {
    return {proj.Q * u, proj.P * u};
}

ToyTrajectory integrate_toy(const ToySystem& sys, const SpectralProjections& proj,
                            const Eigen::VectorXd& u_init, double horizon,
                            double dt) {
    if (u_init.size() != sys.n)
        throw std::invalid_argument("integrate_toy: dimension mismatch");
    if (!(dt > 0) || !(horizon >= 0))
        throw std::invalid_argument("integrate_toy: bad dt/horizon");
    auto rhs = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
        return -(sys.L * u + sys.nl(u));
    };
    ToyTrajectory traj;
    const int n_steps = static_cast<int>(std::llround(horizon / dt));
    Eigen::VectorXd u = u_init;
    double t = 0.0;
    auto record = [&]() {
        traj.t.push_back(t);
        traj.u.push_back(u);
        traj.u0.push_back(proj.Q * u);
        traj.u1.push_back(proj.P * u);
        traj.max_split_err = std::max(
            traj.max_split_err,
            (traj.u0.back() + traj.u1.back() - u).cwiseAbs().maxCoeff());
    };
    record();
    for (int s = 0; s < n_steps; ++s) {
        Eigen::VectorXd k1 = rhs(u);
        Eigen::VectorXd k2 = rhs(u + 0.5 * dt * k1);
        Eigen::VectorXd k3 = rhs(u + 0.5 * dt * k2);
        Eigen::VectorXd k4 = rhs(u + dt * k3);
        u += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = (s + 1) * dt;
        if (!u.allFinite() || u.cwiseAbs().maxCoeff() > 1e6) {
            traj.blew_up = true;
            traj.blowup_t = t;
            break;
        }
        record();
    }
    // Residual of the projected kernel equation d(u0)/dt + Q N(u) = 0
    // (Q annihilates L u, which lies in R[L]); central differences.
    for (std::size_t i = 1; i + 1 < traj.t.size(); ++i) {
        Eigen::VectorXd d =
            (traj.u0[i + 1] - traj.u0[i - 1]) / (traj.t[i + 1] - traj.t[i - 1]);
        traj.max_kernel_resid =
            std::max(traj.max_kernel_resid,
                     (d + proj.Q * sys.nl(traj.u[i])).cwiseAbs().maxCoeff());
    }
    return traj;
}

double mild_residual(const ToySystem& sys, const SpectralProjections& proj,
                     const Eigen::VectorXd& u1_init, double t, double dt) {
    Eigen::VectorXd w0 = proj.P * u1_init;
    ToySystem lin = sys;
    lin.terms.clear();
    ToyTrajectory traj = integrate_toy(lin, proj, w0, t, dt);
    Eigen::MatrixXd expm = (-sys.L * t).exp();
    return (traj.u.back() - expm * w0).norm();
}

StructureReport verify_structure(const ToySystem& sys,
                                 const SpectralProjections& proj, int n_samples,
                                 double radius, unsigned seed) {
    StructureReport rep;
    rep.mixed_expected = sys.mixed_ray.expected_slope;
    rep.pure_expected = sys.pure_ray.expected_slope;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    auto sample = [&]() {
        Eigen::VectorXd u(sys.n);
        for (int i = 0; i < sys.n; ++i) u[i] = radius * uni(rng);
        return u;
    };

    double nl_scale = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        Eigen::VectorXd a = sample(), b = sample();
        nl_scale = std::max(nl_scale, sys.nl(a).norm());
        const double d = (a - b).norm();
        if (d > 1e-14)
            rep.lipschitz_max =
                std::max(rep.lipschitz_max, (sys.nl(a) - sys.nl(b)).norm() / d);
        Eigen::VectorXd k = proj.Q * sample();
        rep.kernel_nl_max = std::max(rep.kernel_nl_max, sys.nl(k).norm());
    }
    rep.trivial = nl_scale < 1e-300;
    rep.kernel_equilibria = rep.kernel_nl_max <= 1e-12 * std::max(1.0, nl_scale);

    if (rep.trivial) {
        rep.exponents_ok = true;  // all structure constants are zero
        rep.pass = rep.kernel_equilibria;
        return rep;
    }
    auto ray_slope = [&](const ToyRay& ray, double& out_slope) -> bool {
        std::vector<double> lx, ly;
        for (int j = 0; j < 20; ++j) {
            const double s = radius * std::pow(10.0, -3.0 + 3.0 * j / 19.0);
            Eigen::VectorXd u = s * ray.d0 + s * ray.d1;
            const double nn = sys.nl(u).norm();
            if (!(nn > 0.0)) return false;  // ray misses the nonlinearity
            lx.push_back(std::log(s * ray.d1.norm()));
            ly.push_back(std::log(nn));
        }
        out_slope = slope_loglog(lx, ly);
        return true;
    };
    const bool m_ok = ray_slope(sys.mixed_ray, rep.mixed_slope);
    const bool p_ok = ray_slope(sys.pure_ray, rep.pure_slope);
    rep.exponents_ok = m_ok && p_ok &&
                       std::abs(rep.mixed_slope - rep.mixed_expected) <= 0.1 &&
                       std::abs(rep.pure_slope - rep.pure_expected) <= 0.1;
    rep.pass = rep.exponents_ok && rep.kernel_equilibria &&
               std::isfinite(rep.lipschitz_max);
    return rep;
}

ToyVerdict theorem1_verdict(const ToySystem& sys,
                            const std::vector<Eigen::VectorXd>& u0_grid,
                            double b_factor, double horizon, double dt,
                            double epsilon) {
    ToyVerdict verdict;
    SpectrumOptions opt;
    SpectrumReport rep = spectrum(sys.L, sys.n, opt);
    verdict.gap = rep.spectral_gap;
    verdict.stable_system = (rep.unstable_count == 0) && (rep.spectral_gap > 0.0);
    verdict.b = b_factor * rep.spectral_gap;

    SpectralProjections proj;
    try {
        proj = projections(sys.L, opt);
    } catch (const std::domain_error& e) {
        verdict.refused = true;
        verdict.refusal_reason = e.what();
        verdict.pass = sys.expect_jordan_refusal;
        verdict.diagnostic = "projections refused the decomposition";
        return verdict;
    }
    if (sys.expect_jordan_refusal) {
        verdict.pass = false;
        verdict.diagnostic = "expected refusal did not happen";
        return verdict;
    }

    bool all_ok = true;
    for (const auto& u0 : u0_grid) {
        ToyTrajectory traj = integrate_toy(sys, proj, u0, horizon, dt);
        ToyRunResult run;
        run.u0_norm = u0.norm();
        for (std::size_t i = 0; i < traj.u.size(); ++i) {
            const double nn = traj.u[i].norm();
            run.sup_norm = std::max(run.sup_norm, nn);
            if (run.exit_time < 0 && nn >= 1.0) run.exit_time = traj.t[i];
        }
        run.exited_ball = traj.blew_up || run.exit_time >= 0;
        run.bounded = !traj.blew_up && run.sup_norm < epsilon;
        if (!traj.u.empty()) {
            run.ubar = traj.u0.back();
            run.ubar_drift = (run.ubar - traj.u0.front()).norm();
            run.ubar_kernel_resid = (sys.L * run.ubar).norm();
            run.final_u1_norm = traj.u1.back().norm();
        }

        if (verdict.stable_system) {
            const double u1n0 = traj.u1.empty() ? 0.0 : traj.u1.front().norm();
            bool converged = run.final_u1_norm <= std::max(1e-4 * u1n0, 1e-12);
            bool rate_ok = true;
            if (u1n0 > 0.0) {
                // Fit |u1(t)| down to where roundoff flattens the series.
                std::vector<double> ts, ys;
                double t_hi = traj.t.back();
                for (std::size_t i = 0; i < traj.u1.size(); ++i) {
                    ts.push_back(traj.t[i]);
                    ys.push_back(traj.u1[i].norm());
                    if (ys.back() < 1e-11 * u1n0) {
                        t_hi = traj.t[i];
                        break;
                    }
                }
                run.u1_fit = fit_exponential(ts, ys, 0.0, t_hi, "u1_norm");
                rate_ok = run.u1_fit.valid && run.u1_fit.kappa >= 0.8 * verdict.b;
                if (run.ubar_drift > 1e-6) verdict.kernel_drift_observed = true;
            }
            if (!(run.bounded && converged && rate_ok &&
                  run.ubar_kernel_resid <= 1e-6))
                all_ok = false;
        } else {
            if (!run.exited_ball) all_ok = false;
        }
        verdict.runs.push_back(std::move(run));
    }
    verdict.pass = all_ok && !u0_grid.empty();
    if (!verdict.pass && verdict.diagnostic.empty())
        verdict.diagnostic = verdict.stable_system
                                 ? "a run failed boundedness/convergence/rate"
                                 : "a run failed to exit the unit ball";
    return verdict;
}

}  // namespace pendlab
