#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pendlab/energy.hpp"
#include "pendlab/operators.hpp"

using namespace pendlab;

namespace {

struct Rig {
    PhysicalParams p;
    DiscreteOperators ops;
    Rig(double rho, double mu, double c_body, double beta_sq, int n)
        : p(), ops(make_geom(n)) {
        RawParams raw{rho, mu, c_body, beta_sq};
        p = derive_params(raw, make_geom(n));
    }
    static CavityGeometry make_geom(int n) {
        CavityGeometry g;
        g.nx = g.ny = n;
        return g;
    }
};

CoupledState rigid_state(const Rig& rig, double kappa, double omega, double phi,
                         EquilibriumSign xi) {
    CoupledState st;
    st.v = rig.ops.grid().rigid_field();
    st.v *= kappa;
    st.omega = omega;
    st.phi = phi;
    st.gamma = chi_of(phi) - sign_value(xi) * Eigen::Vector2d::UnitX();
    return st;
}

std::vector<EnergyRecord> synthetic(double dt, int n, double rate) {
    // kinetic = e^{-rate t}, dissipation = rate e^{-rate t}: the continuum
    // balance d(kinetic)/dt + dissipation = 0 holds exactly
    std::vector<EnergyRecord> rec(n);
    for (int k = 0; k < n; ++k) {
        rec[k].t = k * dt;
        rec[k].kinetic = std::exp(-rate * rec[k].t);
        rec[k].lyap_linear = rec[k].kinetic;
        rec[k].dissipation = rate * rec[k].kinetic;
    }
    return rec;
}

}  // namespace

TEST_CASE("energy record closed forms on the rotation field") {
    Rig rig(2.0, 0.5, 2.0, 3.0, 16);
    const PhysicalParams& p = rig.p;
    const double cl = p.c_liquid, C = p.c_total;
    const double kappa = 0.7, w = 1.3, phi = 0.4;

    CoupledState st = rigid_state(rig, kappa, w, phi, EquilibriumSign::plus);
    EnergyRecord r = energy_record(rig.ops, p, st, &st.v, EquilibriumSign::plus);

    // v = kappa r: ||v||_W^2 = kappa^2 c_liquid / rho (quadrature identity),
    // a = -kappa c_liquid / C, so E = kappa^2 c_liquid c_body / C exactly
    CHECK(r.a == doctest::Approx(-kappa * cl / C).epsilon(1e-12));
    const double E_exact = kappa * kappa * cl * (p.c_body / C);
    CHECK(r.E == doctest::Approx(E_exact).epsilon(1e-12));
    CHECK(r.E1 == doctest::Approx(E_exact).epsilon(1e-12));
    const double rel = w + kappa * cl / C;
    CHECK(r.kinetic == doctest::Approx(0.5 * (E_exact + C * rel * rel)).epsilon(1e-12));
    CHECK(r.potential == doctest::Approx(-p.beta_sq * std::cos(phi)).epsilon(1e-12));
    CHECK(r.dissipation == doctest::Approx(p.mu * rig.ops.grad_norm_sq(st.v)));
    const double g2 = -std::sin(phi);
    CHECK(r.lyap_linear ==
          doctest::Approx(r.kinetic + 0.5 * p.beta_sq * g2 * g2).epsilon(1e-12));

    EnergyRecord rp = energy_record(rig.ops, p, st, nullptr, EquilibriumSign::plus,
                                    EnergyConvention::paper);
    CHECK(rp.potential == doctest::Approx(-C * p.beta_sq * std::cos(phi)).epsilon(1e-12));
    CHECK(rp.E1 == 0.0);

    // inverted branch flips the sign of the gamma_2 quadratic
    EnergyRecord rm = energy_record(rig.ops, p, st, nullptr, EquilibriumSign::minus);
    CHECK(rm.lyap_linear ==
          doctest::Approx(rm.kinetic - 0.5 * p.beta_sq * g2 * g2).epsilon(1e-12));
}

TEST_CASE("zero velocity: shell-only energies") {
    Rig rig(1.0, 1.0, 1.5, 2.0, 8);
    CoupledState st(8, 8);
    st.omega = 0.6;
    st.phi = 1.1;
    EnergyRecord r = energy_record(rig.ops, rig.p, st, nullptr, EquilibriumSign::plus);
    CHECK(r.a == 0.0);
    CHECK(r.E == 0.0);
    CHECK(r.kinetic == doctest::Approx(0.5 * rig.p.c_total * 0.36).epsilon(1e-12));
    CHECK(r.potential == doctest::Approx(-2.0 * std::cos(1.1)).epsilon(1e-12));
    CHECK(r.dissipation == 0.0);
}

TEST_CASE("quadratic form E dominates the velocity norm on random fields") {
    // E = rho ||v||^2 - C a^2 >= (c_body / C) rho ||v||^2 is a weighted
    // Cauchy-Schwarz consequence that holds exactly for the shared face
    // quadrature; equality iff v is proportional to the rotation field.
    Rig rig(3.0, 1.0, 0.5, 1.0, 12);
    const PhysicalParams& p = rig.p;
    const double ratio_min = p.c_body / p.c_total;
    std::mt19937 rng(42);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        FaceField f(12, 12);
        for (Eigen::Index i = 0; i < f.u.size(); ++i) f.u.data()[i] = g(rng);
        for (Eigen::Index i = 0; i < f.v.size(); ++i) f.v.data()[i] = g(rng);
        CoupledState st;
        st.v = f;
        EnergyRecord r = energy_record(rig.ops, p, st, nullptr, EquilibriumSign::plus);
        const double v2 = p.rho * rig.ops.grid().norm_w_sq(f);
        CHECK(r.E >= ratio_min * v2 - 1e-12 * v2);
        CHECK(r.kinetic >= -1e-12 * v2);
    }
    // attainment on the rotation field itself
    CoupledState st = rigid_state(rig, 1.0, 0.0, 0.0, EquilibriumSign::plus);
    EnergyRecord r = energy_record(rig.ops, p, st, nullptr, EquilibriumSign::plus);
    const double v2 = p.rho * rig.ops.grid().norm_w_sq(st.v);
    CHECK(r.E == doctest::Approx(ratio_min * v2).epsilon(1e-12));
}

TEST_CASE("dissipation audit accepts the discretized exact balance") {
    const double dt = 0.01;
    SeiAudit a = sei_audit(synthetic(dt, 201, 2.0), dt);
    CHECK(a.pass);
    CHECK(a.worst_violation >= 0.0);
    CHECK(a.worst_violation < a.tol);
}

TEST_CASE("dissipation audit flags created energy") {
    auto rec = synthetic(0.01, 100, 2.0);
    rec[60].kinetic += 0.05;  // inject a bump well above the 10 dt^2 tolerance
    for (std::size_t k = 61; k < rec.size(); ++k) rec[k].kinetic += 0.05;
    SeiAudit a = sei_audit(rec, 0.01);
    CHECK_FALSE(a.pass);
    CHECK(a.worst_violation > 0.04);
    CHECK(a.at_record >= 60);
    CHECK(a.from_record < 60);
    CHECK_THROWS(sei_audit({rec[0]}, 0.01));
}

TEST_CASE("linear identity residual is second order in the record spacing") {
    auto res_at = [](double dt) {
        auto rec = synthetic(dt, static_cast<int>(2.0 / dt) + 1, 1.0);
        return linear_identity_residual(rec, true).max_abs;
    };
    const double r1 = res_at(0.02), r2 = res_at(0.01);
    // analytic residual for e^{-t}: e^{-dt/2} dt^2/12 at the first midpoint
    CHECK(r1 == doctest::Approx(0.02 * 0.02 / 12.0).epsilon(0.02).scale(0.0));
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.02));
    CHECK_THROWS(linear_identity_residual(synthetic(0.01, 10, 1.0), false));
    CHECK_THROWS(linear_identity_residual({EnergyRecord{}}, true));
}

TEST_CASE("basin membership closed form") {
    Rig rig(1.0, 1.0, 2.0, 1.5, 8);
    const PhysicalParams& p = rig.p;
    CoupledState st(8, 8);
    st.omega = 0.5;
    st.phi = 0.0;
    BasinCheck b = basin_check(rig.ops, p, st);
    CHECK(b.lhs == doctest::Approx(p.c_total * 0.25).epsilon(1e-12));
    CHECK(b.rhs == doctest::Approx(4.0 * p.beta_sq).epsilon(1e-12));
    CHECK(b.inside);

    BasinCheck bp = basin_check(rig.ops, p, st, EnergyConvention::paper);
    CHECK(bp.rhs == doctest::Approx(p.c_total * 4.0 * p.beta_sq).epsilon(1e-12));

    // at the inverted configuration the right-hand side collapses to zero
    st.phi = M_PI;
    st.omega = 0.1;
    BasinCheck binv = basin_check(rig.ops, p, st);
    CHECK(binv.rhs == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_FALSE(binv.inside);

    // threshold scaling: just below / above
    st.phi = 0.0;
    const double w_crit = std::sqrt(4.0 * p.beta_sq / p.c_total);
    st.omega = 0.999 * w_crit;
    CHECK(basin_check(rig.ops, p, st).inside);
    st.omega = 1.001 * w_crit;
    CHECK_FALSE(basin_check(rig.ops, p, st).inside);
}
