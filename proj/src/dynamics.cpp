#include "pendlab/dynamics.hpp"

#include <cmath>
#include <vector>

namespace pendlab {

InertiaOperator::InertiaOperator(const DiscreteOperators& ops, const PhysicalParams& p)
    : ops_(&ops), p_(p) {
    pr_ = ops.project_int(ops.r_int());
    pr_norm_sq_ = ops.grid().norm_w_sq(pr_);
    schur_ = p_.c_total - p_.rho * pr_norm_sq_;
    if (!(schur_ > 0.0))
        throw std::runtime_error(
            "inertia: Schur complement C - rho ||P r||^2 not positive (C = " +
            std::to_string(p_.c_total) + ", got " + std::to_string(schur_) + ")");
}

HVector InertiaOperator::apply(const HVector& u) const {
    HVector f;
    f.v = p_.rho * u.v + (p_.rho * u.omega) * pr_;
    // <r, v>_W = <P r, v>_W for divergence-free v; use r directly so the
    // pairing is exact for any admissible field.
    f.omega = p_.c_total * u.omega + p_.rho * ops_->grid().inner_w(ops_->r_int(), u.v);
    f.gamma = u.gamma;
    return f;
}

HVector InertiaOperator::solve(const HVector& f) const {
    HVector u;
    u.gamma = f.gamma;
    if (p_.rho == 0.0) {
        // Degenerate preset: no fluid momentum; rigid block decouples.
        u.v = Eigen::VectorXd::Zero(f.v.size());
        u.omega = f.omega / p_.c_total;
        return u;
    }
    const double qf = ops_->grid().inner_w(pr_, f.v);
    u.omega = (f.omega - qf) / schur_;
    u.v = f.v / p_.rho - u.omega * pr_;
    return u;
}

double InertiaOperator::pairing(const HVector& f, const HVector& u) const {
    return ops_->grid().inner_w(f.v, u.v) + f.omega * u.omega + f.gamma.dot(u.gamma);
}

HVector apply_A(const DiscreteOperators& ops, const PhysicalParams& p,
                const HVector& u) {
    HVector f;
    f.v = -p.mu * ops.project_int(ops.lap() * u.v);
    f.omega = u.omega;
    f.gamma = u.gamma;
    return f;
}

HVector apply_B(const PhysicalParams& p, const HVector& u, EquilibriumSign xi) {
    HVector f;
    f.v = Eigen::VectorXd::Zero(u.v.size());
    f.omega = -p.beta_sq * u.gamma.y() - u.omega;
    // omega e3 x gamma0 - gamma with gamma0 = xi e1.
    f.gamma = Eigen::Vector2d(0.0, sign_value(xi) * u.omega) - u.gamma;
    return f;
}

HVector apply_N(const DiscreteOperators& ops, const PhysicalParams& p,
                const HVector& u) {
    const StaggeredGrid& g = ops.grid();
    FaceField v = g.scatter(u.v);
    FaceField nl = ops.advect(v);
    FaceField cor = ops.coriolis(v);
    Eigen::VectorXd force = g.gather(nl) + 2.0 * u.omega * g.gather(cor);
    HVector f;
    f.v = -p.rho * ops.project_int(force);
    f.omega = 0.0;
    // -omega e3 x gamma = (omega gamma_2, -omega gamma_1)
    f.gamma = Eigen::Vector2d(u.omega * u.gamma.y(), -u.omega * u.gamma.x());
    return f;
}

Stepper::Stepper(const DiscreteOperators& ops, const PhysicalParams& p,
                 EquilibriumSign xi, double dt, StepMode mode)
    : ops_(&ops), p_(p), xi_(sign_value(xi)), dt_(dt), mode_(mode) {
    if (!(dt > 0.0)) throw std::invalid_argument("stepper: dt must be positive");
    const StaggeredGrid& g = ops.grid();
    m_ = g.n_int();
    nc_ = g.n_cells();
    n_ = m_ + nc_ + 3;
    const int iw = m_ + nc_, ig1 = iw + 1, ig2 = iw + 2;
    const double cell = g.hx() * g.hy();

    std::vector<Eigen::Triplet<double>> tr;
    tr.reserve(static_cast<std::size_t>(ops.lap().nonZeros()) +
               static_cast<std::size_t>(ops.grad().nonZeros()) +
               static_cast<std::size_t>(ops.div().nonZeros()) + 3 * m_ + 16);

    // Momentum rows: rho v+ - (dt mu / 2) lap v+ + dt G p + rho r omega+ = rhs.
    for (int k = 0; k < m_; ++k) tr.emplace_back(k, k, p_.rho);
    if (p_.mu != 0.0) {
        const double c = -0.5 * dt_ * p_.mu;
        for (int k = 0; k < ops.lap().outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(ops.lap(), k); it; ++it)
                tr.emplace_back(static_cast<int>(it.row()),
                                static_cast<int>(it.col()), c * it.value());
    }
    for (int k = 0; k < ops.grad().outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(ops.grad(), k); it; ++it)
            tr.emplace_back(static_cast<int>(it.row()),
                            m_ + static_cast<int>(it.col()), dt_ * it.value());
    if (p_.rho != 0.0) {
        const Eigen::VectorXd& r = ops.r_int();
        for (int k = 0; k < m_; ++k)
            if (r[k] != 0.0) tr.emplace_back(k, iw, p_.rho * r[k]);
    }

    // Continuity rows (cell 0 replaced by the pressure gauge p_0 = 0; the
    // dropped equation is implied by the telescoping identity sum(div v) = 0).
    tr.emplace_back(m_, m_, 1.0);
    for (int k = 0; k < ops.div().outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(ops.div(), k); it; ++it)
            if (it.row() >= 1)
                tr.emplace_back(m_ + static_cast<int>(it.row()),
                                static_cast<int>(it.col()), it.value());

    // Angular momentum row: rho <r, v+>_W + C omega+ - (dt beta^2/2) gamma2+ = rhs.
    if (p_.rho != 0.0) {
        const Eigen::VectorXd& r = ops.r_int();
        for (int k = 0; k < m_; ++k)
            if (r[k] != 0.0) tr.emplace_back(iw, k, p_.rho * cell * r[k]);
    }
    tr.emplace_back(iw, iw, p_.c_total);
    tr.emplace_back(iw, ig2, -0.5 * dt_ * p_.beta_sq);

    // gamma rows: gamma1+ = rhs; gamma2+ + (dt xi / 2) omega+ = rhs.
    tr.emplace_back(ig1, ig1, 1.0);
    tr.emplace_back(ig2, ig2, 1.0);
    tr.emplace_back(ig2, iw, 0.5 * dt_ * xi_);

    mat_.resize(n_, n_);
    mat_.setFromTriplets(tr.begin(), tr.end());
    mat_.makeCompressed();
    lu_.compute(mat_);
    if (lu_.info() != Eigen::Success)
        throw SolverError("stepper: monolithic factorization failed");

    v_ = Eigen::VectorXd::Zero(m_);
    p_press_ = Eigen::VectorXd::Zero(nc_);
}

void Stepper::reset(const CoupledState& initial) {
    v_ = ops_->grid().gather(initial.v);
    // Establish the divergence-free invariant exactly at entry.
    v_ = ops_->project_int(v_);
    omega_ = initial.omega;
    phi_ = initial.phi;
    gamma_ = initial.gamma;
    t_ = initial.t;
    p_press_.setZero();
    have_hist_ = false;
}

CoupledState Stepper::current() const {
    CoupledState s;
    s.v = ops_->grid().scatter(v_);
    s.omega = omega_;
    s.phi = phi_;
    s.gamma = gamma_;
    s.t = t_;
    s.p = p_press_;
    return s;
}

void Stepper::check_cfl() const {
    const double vmax = v_.size() ? v_.cwiseAbs().maxCoeff() : 0.0;
    if (vmax == 0.0) return;
    const double h = std::min(ops_->grid().hx(), ops_->grid().hy());
    const double dt_max = 0.5 * h / vmax;
    if (dt_ > dt_max)
        throw CflError("stepper: advective CFL violated (dt = " + std::to_string(dt_) +
                           " > " + std::to_string(dt_max) + "); reduce dt",
                       dt_max);
}

Eigen::VectorXd Stepper::nonlinear_force() const {
    const StaggeredGrid& g = ops_->grid();
    FaceField v = g.scatter(v_);
    FaceField adv = ops_->advect(v);
    FaceField cor = ops_->coriolis(v);
    return p_.rho * (g.gather(adv) + 2.0 * omega_ * g.gather(cor));
}

Eigen::Vector2d Stepper::gamma_nonlinearity() const {
    return {omega_ * gamma_.y(), -omega_ * gamma_.x()};
}

void Stepper::advance() {
    const int iw = m_ + nc_, ig1 = iw + 1, ig2 = iw + 2;
    const double cell = ops_->grid().hx() * ops_->grid().hy();
    const Eigen::VectorXd& r = ops_->r_int();

    Eigen::VectorXd fv;
    Eigen::Vector2d fg = Eigen::Vector2d::Zero();
    if (mode_ == StepMode::nonlinear) {
        check_cfl();
        Eigen::VectorXd f_now = nonlinear_force();
        Eigen::Vector2d g_now = gamma_nonlinearity();
        if (have_hist_) {
            fv = 1.5 * f_now - 0.5 * fv_hist_;
            fg = 1.5 * g_now - 0.5 * fg_hist_;
        } else {
            fv = f_now;
            fg = g_now;
        }
        fv_hist_ = std::move(f_now);
        fg_hist_ = g_now;
        have_hist_ = true;
    }

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_);
    rhs.head(m_) = p_.rho * v_ + (p_.rho * omega_) * r;
    if (p_.mu != 0.0) rhs.head(m_) += 0.5 * dt_ * p_.mu * (ops_->lap() * v_);
    if (mode_ == StepMode::nonlinear) rhs.head(m_) -= dt_ * fv;
    // Continuity rows already zero (including the gauge row).
    rhs[iw] = p_.c_total * omega_ + p_.rho * cell * r.dot(v_) +
              0.5 * dt_ * p_.beta_sq * gamma_.y();
    rhs[ig1] = gamma_.x() + dt_ * fg.x();
    rhs[ig2] = gamma_.y() - 0.5 * dt_ * xi_ * omega_ + dt_ * fg.y();

    Eigen::VectorXd x = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success)
        throw SolverError("stepper: linear solve failed at t = " + std::to_string(t_));
    const double resid = (mat_ * x - rhs).norm();
    const double rhsn = rhs.norm();
    if (!(resid <= 1e-8 * (1.0 + rhsn)))
        throw SolverError("stepper: linear solve residual " + std::to_string(resid) +
                          " at t = " + std::to_string(t_));

    const double omega_new = x[iw];
    phi_ += 0.5 * dt_ * (omega_ + omega_new);
    omega_ = omega_new;
    v_ = x.head(m_);
    p_press_ = x.segment(m_, nc_);
    if (mode_ == StepMode::nonlinear) {
        // chi rebuilt trigonometrically: |chi| = 1 exact; the remainder
        // -omega e3 x gamma is absorbed by the exact rotation.
        gamma_ = chi_of(phi_) - xi_ * Eigen::Vector2d::UnitX();
    } else {
        gamma_ = {x[ig1], x[ig2]};
    }
    t_ += dt_;
}

Trajectory simulate(const DiscreteOperators& ops, const PhysicalParams& p,
                    EquilibriumSign xi, const CoupledState& initial, double horizon,
                    double dt, StepMode mode, const SimulateOptions& opt) {
    Trajectory traj;
    traj.meta.dt = dt;
    traj.meta.horizon = horizon;
    traj.meta.nx = ops.grid().nx();
    traj.meta.ny = ops.grid().ny();
    traj.meta.xi = sign_value(xi);
    traj.meta.mode = mode;
    traj.meta.output_stride = std::max(1, opt.output_stride);

    Stepper stepper(ops, p, xi, dt, mode);
    stepper.reset(initial);

    const long n_steps = static_cast<long>(std::llround(horizon / dt));
    Eigen::VectorXd v_prev = stepper.v_int();
    long rec_count = 0;

    auto record = [&](long step_idx) -> bool {
        CoupledState s = stepper.current();
        const Eigen::Vector2d chi = chi_of(s.phi);

        TrajectoryRecord r{};
        r.t = s.t;
        r.omega = s.omega;
        r.phi = s.phi;
        r.chi1 = chi.x();
        r.chi2 = chi.y();
        r.gamma1 = s.gamma.x();
        r.gamma2 = s.gamma.y();
        r.v_l2 = std::sqrt(ops.grid().norm_w_sq(s.v));
        r.v_alpha = opt.alpha_eval ? opt.alpha_eval(stepper.v_int()) : 0.0;
        if (p.rho > 0.0) {
            Eigen::VectorXd av = ops.project_int(ops.lap() * stepper.v_int());
            r.v_h2proxy = (p.mu / p.rho) * std::sqrt(ops.grid().norm_w_sq(av));
        }
        traj.records.push_back(r);

        FaceField vt;
        const FaceField* vtp = nullptr;
        if (step_idx > 0) {
            vt = ops.grid().scatter(
                Eigen::VectorXd((stepper.v_int() - v_prev) / dt));
            vtp = &vt;
        }
        traj.energy.push_back(energy_record(ops, p, s, vtp, xi, opt.convention));

        if (opt.snapshots && opt.snapshot_stride > 0 &&
            rec_count % opt.snapshot_stride == 0)
            opt.snapshots->emplace_back(s.t, s.v);
        ++rec_count;
        if (opt.observer && !opt.observer(s)) return false;
        return true;
    };

    if (!record(0)) {
        traj.meta.completed = false;
        traj.meta.halt_reason = "observer stop";
        traj.final_state = stepper.current();
        return traj;
    }

    for (long k = 1; k <= n_steps; ++k) {
        v_prev = stepper.v_int();
        try {
            stepper.advance();
        } catch (const CflError& e) {
            traj.meta.completed = false;
            traj.meta.halt_reason = e.what();
            break;
        } catch (const SolverError& e) {
            traj.meta.completed = false;
            traj.meta.halt_reason = e.what();
            break;
        }
        const bool finite = std::isfinite(stepper.omega()) &&
                            stepper.v_int().allFinite();
        if (!finite) {
            traj.meta.completed = false;
            traj.meta.halt_reason = "non-finite state at t = " +
                                    std::to_string(stepper.time());
            break;
        }
        if (k % traj.meta.output_stride == 0 || k == n_steps) {
            if (!record(k)) {
                traj.meta.completed = false;
                traj.meta.halt_reason = "observer stop";
                break;
            }
        }
    }
    traj.final_state = stepper.current();
    return traj;
}

}  // namespace pendlab
