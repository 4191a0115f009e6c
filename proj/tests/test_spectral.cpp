#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "pendlab/runner.hpp"
#include "pendlab/spectral.hpp"

using namespace pendlab;

namespace {

ScenarioSetup setup_n(int n, double rho, EquilibriumSign xi) {
    Config cfg = Config::parse(
        "[physics]\nrho = " + std::to_string(rho) +
        "\n[grid]\nnx = " + std::to_string(n) + "\nny = " + std::to_string(n) +
        "\n[run]\nxi = " + std::to_string(sign_value(xi)) + "\n");
    return parse_scenario(cfg);
}

}  // namespace

TEST_CASE("rho = 0 rigid block: closed-form eigenvalues") {
    // 3x3 system in (omega, gamma1, gamma2): eigenvalues 0 and +-sqrt(-xi) b
    // with b = beta/sqrt(C). xi=+1 -> conjugate imaginary pair; xi=-1 -> real
    // pair, one unstable under du/dt + Lu = 0.
    for (EquilibriumSign xi : {EquilibriumSign::plus, EquilibriumSign::minus}) {
        ScenarioSetup s = setup_n(8, 0.0, xi);
        LabContext ctx(s);
        CHECK(ctx.red == nullptr);
        Eigen::MatrixXd L = assemble_L(ctx.ops, nullptr, s.params, xi);
        REQUIRE(L.rows() == 3);
        SpectrumOptions opt;
        opt.xi = sign_value(xi);
        SpectrumReport rep = spectrum(L, 3, opt);
        const double b = s.params.pendulum_freq();
        REQUIRE(rep.eigenvalues.size() == 3);
        CHECK(rep.kernel_dim == 1);
        if (xi == EquilibriumSign::plus) {
            CHECK(rep.unstable_count == 0);
            for (const auto& ev : rep.eigenvalues) {
                if (std::abs(ev) < 1e-12) continue;
                CHECK(std::abs(ev.real()) < 1e-12);
                CHECK(std::abs(std::abs(ev.imag()) - b) < 1e-12);
            }
        } else {
            CHECK(rep.unstable_count == 1);
            for (const auto& ev : rep.eigenvalues) {
                if (std::abs(ev) < 1e-12) continue;
                CHECK(std::abs(ev.imag()) < 1e-12);
                CHECK(std::abs(std::abs(ev.real()) - b) < 1e-12);
            }
        }
    }
}

TEST_CASE("kernel vector and angle on the coupled operator") {
    ScenarioSetup s = setup_n(16, 1.0, EquilibriumSign::plus);
    LabContext ctx(s);
    Eigen::MatrixXd L = assemble_L(ctx.ops, ctx.red.get(), s.params, s.xi);
    const int n = static_cast<int>(L.rows());
    REQUIRE(n == ctx.red->dim() + 3);

    // the gamma1 column and row of L vanish identically: e_{gamma1} spans both
    // the right and the left kernel
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[n - 2] = 1.0;
    CHECK((L * e).norm() == 0.0);
    CHECK((L.transpose() * e).norm() == 0.0);

    SpectrumReport rep = spectrum(L, 12, {});
    CHECK(rep.kernel_dim == 1);
    CHECK(rep.method == "dense");
    CHECK(rep.unstable_count == 0);
    CHECK(rep.spectral_gap > 0.0);
    // coincident left/right kernels make the kernel/range angle pi/2 (asin near
    // 1 amplifies SVD roundoff to ~1e-8, hence the loose tolerance)
    CHECK(rep.kernel_range_angle == doctest::Approx(M_PI / 2).epsilon(1e-5));

    KernelSpaces ks = kernel_spaces(L, {});
    REQUIRE(ks.right.cols() == 1);
    CHECK(std::abs(ks.right.col(0)[n - 2]) == doctest::Approx(1.0).epsilon(1e-10));

    SpectralProjections proj = projections(L, {});
    CHECK((proj.Q * proj.Q - proj.Q).norm() < 1e-10);
    CHECK((proj.Q + proj.P - Eigen::MatrixXd::Identity(n, n)).norm() < 1e-12);
    CHECK((L * proj.Q).norm() < 1e-8);
    CHECK((proj.Q * L).norm() < 1e-8);
}

TEST_CASE("dense and Arnoldi paths agree on the slow eigenvalues") {
    ScenarioSetup s = setup_n(16, 1.0, EquilibriumSign::plus);
    LabContext ctx(s);
    Eigen::MatrixXd L = assemble_L(ctx.ops, ctx.red.get(), s.params, s.xi);

    SpectrumReport dense = spectrum(L, 6, {});
    SpectrumOptions arn_opt;
    arn_opt.dense_threshold = 10;  // force shift-invert Arnoldi
    SpectrumReport arn = spectrum(L, 6, arn_opt);
    CHECK(arn.method == "arnoldi");
    CHECK(dense.method == "dense");
    CHECK(arn.kernel_dim == dense.kernel_dim);

    // compare the eigenvalue nearest the imaginary axis (the slow pair)
    auto slow = [](const SpectrumReport& r) {
        std::complex<double> best(1e300, 0.0);
        for (const auto& ev : r.eigenvalues) {
            if (std::abs(ev) < r.zero_tol) continue;
            if (std::abs(ev.real()) < std::abs(best.real()) ||
                (std::abs(ev.real()) == std::abs(best.real()) &&
                 ev.imag() > best.imag()))
                best = ev;
        }
        return best;
    };
    const auto d = slow(dense), a = slow(arn);
    CHECK(std::abs(d - a) < 1e-7 * std::abs(d));
    CHECK(arn.spectral_gap == doctest::Approx(dense.spectral_gap).epsilon(1e-4));
}

TEST_CASE("Jordan block is refused by the spectral projections") {
    Eigen::MatrixXd J(2, 2);
    J << 0, 1, 0, 0;
    SpectrumReport rep = spectrum(J, 2, {});
    CHECK(rep.kernel_dim == 1);
    CHECK(rep.kernel_range_angle < 1e-8);
    CHECK_THROWS_AS((void)projections(J, {}), std::domain_error);
}

TEST_CASE("fractional powers of the Stokes block") {
    ScenarioSetup s = setup_n(12, 1.0, EquilibriumSign::plus);
    LabContext ctx(s);
    Eigen::MatrixXd A = ctx.alpha->a0();
    const int n = static_cast<int>(A.rows());

    CHECK((frac_power(A, 1.0) - A).norm() < 1e-9 * A.norm());
    CHECK((frac_power(A, 0.0) - Eigen::MatrixXd::Identity(n, n)).norm() < 1e-10);
    Eigen::MatrixXd H = frac_power(A, 0.5);
    CHECK((H * H - A).norm() < 1e-9 * A.norm());
    CHECK_THROWS(frac_power(A, -0.5));
    CHECK_THROWS(frac_power(A, 1.5));
    Eigen::MatrixXd nonsym = A;
    nonsym(0, 1) += 1.0;
    CHECK_THROWS(frac_power(nonsym, 0.5));
    CHECK(ctx.alpha->lambda_min() > 0.0);

    // alpha = 0 norm is the plain W norm of the field
    Eigen::VectorXd z = Eigen::VectorXd::Zero(ctx.red->dim());
    z[0] = 1.0;
    z[3] = -0.5;
    Eigen::VectorXd v = ctx.red->to_int(z);
    CHECK(ctx.alpha->norm_v(v, 0.0) ==
          doctest::Approx(std::sqrt(ctx.ops.grid().norm_w_sq(v))).epsilon(1e-10));
}

TEST_CASE("norm_state composes the three components") {
    ScenarioSetup s = setup_n(12, 1.0, EquilibriumSign::plus);
    LabContext ctx(s);
    CoupledState st(12, 12);
    st.omega = 0.25;
    st.gamma = {0.3, -0.4};
    CHECK(ctx.alpha->norm_state(st, 0.75) ==
          doctest::Approx(0.25 + 0.5).epsilon(1e-12));
}

TEST_CASE("advective Lipschitz quotient stays bounded on random fields") {
    ScenarioSetup s = setup_n(12, 1.0, EquilibriumSign::plus);
    LabContext ctx(s);
    const StaggeredGrid& g = ctx.ops.grid();
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    double worst = 0.0;
    int used = 0;
    for (int k = 0; k < 24; ++k) {
        Eigen::VectorXd a(g.n_int()), b(g.n_int());
        for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = u(rng);
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = u(rng);
        FaceField fa = g.scatter(ctx.ops.project_int(a));
        FaceField fb = g.scatter(ctx.ops.project_int(b));
        auto q = kato_diagnostic(ctx.ops, *ctx.alpha, fa, fb, 0.75);
        if (!q) continue;
        ++used;
        CHECK(std::isfinite(*q));
        worst = std::max(worst, *q);
    }
    CHECK(used > 20);
    CHECK(worst > 0.0);
    CHECK(worst < 1e3);
}
