#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pendlab/operators.hpp"
#include "pendlab/runner.hpp"

using namespace pendlab;

namespace {

CavityGeometry small_geom() {
    CavityGeometry g;
    g.nx = 16;
    g.ny = 12;
    g.half_width = 0.4;
    g.half_height = 0.6;
    return g;
}

Eigen::VectorXd random_interior(const StaggeredGrid& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::VectorXd x(g.n_int());
    for (int i = 0; i < x.size(); ++i) x[i] = u(rng);
    return x;
}

}  // namespace

TEST_CASE("gather/scatter round trip on interior faces") {
    StaggeredGrid g(small_geom());
    Eigen::VectorXd x = random_interior(g, 1);
    FaceField f = g.scatter(x);
    CHECK((g.gather(f) - x).lpNorm<Eigen::Infinity>() == 0.0);
    // scatter puts nothing on wall-normal faces
    for (int j = 0; j < g.ny(); ++j) {
        CHECK(f.u(0, j) == 0.0);
        CHECK(f.u(g.nx(), j) == 0.0);
    }
    for (int i = 0; i < g.nx(); ++i) {
        CHECK(f.v(i, 0) == 0.0);
        CHECK(f.v(i, g.ny()) == 0.0);
    }
}

TEST_CASE("weighted inner product matches an explicit face sum") {
    StaggeredGrid g(small_geom());
    Eigen::VectorXd x = random_interior(g, 2);
    const double cell = g.hx() * g.hy();
    CHECK(g.norm_w_sq(x) ==
          doctest::Approx(cell * x.squaredNorm()).epsilon(1e-14));
}

TEST_CASE("discrete operators: divergence, Laplacian symmetry, projection") {
    CavityGeometry geom = small_geom();
    DiscreteOperators ops(geom);
    const StaggeredGrid& g = ops.grid();

    Eigen::VectorXd x = random_interior(g, 3);
    Eigen::VectorXd Px = ops.project_int(x);

    SUBCASE("projection is idempotent and kills divergence") {
        CHECK((ops.div() * Px).lpNorm<Eigen::Infinity>() < 1e-11);
        CHECK((ops.project_int(Px) - Px).lpNorm<Eigen::Infinity>() < 1e-11);
    }
    SUBCASE("projection annihilates discrete gradients") {
        std::mt19937 rng(4);
        std::uniform_real_distribution<double> u(-1, 1);
        Eigen::VectorXd q(g.n_cells());
        for (int i = 0; i < q.size(); ++i) q[i] = u(rng);
        Eigen::VectorXd gq = ops.grad() * q;
        CHECK(ops.project_int(gq).lpNorm<Eigen::Infinity>() < 1e-11 *
                  gq.lpNorm<Eigen::Infinity>());
    }
    SUBCASE("Laplacian is symmetric in the W inner product") {
        Eigen::VectorXd y = random_interior(g, 5);
        const double a = g.inner_w(Eigen::VectorXd(ops.lap() * x), y);
        const double b = g.inner_w(x, Eigen::VectorXd(ops.lap() * y));
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
    SUBCASE("dissipation quadrature equals the Laplacian pairing") {
        const double qa = ops.grad_norm_sq_int(Px);
        const double qb = -g.inner_w(Eigen::VectorXd(ops.lap() * Px), Px);
        CHECK(qa == doctest::Approx(qb).epsilon(1e-12));
        CHECK(ops.grad_norm_sq(g.scatter(Px)) ==
              doctest::Approx(qb).epsilon(1e-12));
    }
    SUBCASE("Poincare constant is positive and grid-stable") {
        CHECK(ops.poincare_min_eig() > 0.0);
    }
}

TEST_CASE("advection of a rigid rotation reproduces the centripetal field") {
    // (v . grad) v for v = omega e3 x r equals -omega^2 (x, y): check far from
    // walls where the one-sided boundary stencils do not intrude.
    CavityGeometry geom;
    geom.nx = 64;
    geom.ny = 64;
    DiscreteOperators ops(geom);
    const StaggeredGrid& g = ops.grid();
    FaceField adv = ops.advect(g.rigid_field());
    double worst = 0.0;
    for (int i = 16; i < 48; ++i)
        for (int j = 16; j < 48; ++j)
            worst = std::max(worst, std::abs(adv.u(i, j) - (-g.xu(i))));
    for (int i = 16; i < 48; ++i)
        for (int j = 16; j < 48; ++j)
            worst = std::max(worst, std::abs(adv.v(i, j) - (-g.yv(j))));
    CHECK(worst < 1e-10);
}

TEST_CASE("coriolis term is the rotated field") {
    // e3 x v on faces, averaged across the stagger: for the rigid field
    // e3 x (e3 x r) = -r, i.e. u-faces carry -x, v-faces carry -y.
    CavityGeometry geom;
    geom.nx = 32;
    geom.ny = 32;
    DiscreteOperators ops(geom);
    const StaggeredGrid& g = ops.grid();
    FaceField cor = ops.coriolis(g.rigid_field());
    double worst = 0.0;
    for (int i = 8; i < 24; ++i)
        for (int j = 8; j < 24; ++j) {
            worst = std::max(worst, std::abs(cor.u(i, j) - (-g.xu(i))));
            worst = std::max(worst, std::abs(cor.v(i, j) - (-g.yv(j))));
        }
    CHECK(worst < 1e-10);
}

TEST_CASE("stream-function fields are exactly divergence free") {
    CavityGeometry geom = small_geom();
    DiscreteOperators ops(geom);
    const StaggeredGrid& g = ops.grid();
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(geom.nx + 1, geom.ny + 1);
    for (int i = 1; i < geom.nx; ++i)
        for (int j = 1; j < geom.ny; ++j) psi(i, j) = u(rng);
    FaceField f = field_from_stream(g, psi);
    // face values are O(psi/h) ~ 60, the divergence sums four of them over h,
    // so exact telescoping still leaves ~eps * 2e3 of cancellation residue
    Eigen::VectorXd d = ops.div() * g.gather(f);
    CHECK(d.lpNorm<Eigen::Infinity>() < 1e-12);
    // wall-normal faces zero
    for (int j = 0; j < g.ny(); ++j) {
        CHECK(f.u(0, j) == 0.0);
        CHECK(f.u(g.nx(), j) == 0.0);
    }
    // projection leaves it untouched (already admissible)
    Eigen::VectorXd x = g.gather(f);
    CHECK((ops.project_int(x) - x).lpNorm<Eigen::Infinity>() <
          1e-11 * x.lpNorm<Eigen::Infinity>());
}

TEST_CASE("reduced space is a W-isometry onto divergence-free fields") {
    CavityGeometry geom = small_geom();
    DiscreteOperators ops(geom);
    ReducedSpace red(ops);
    const StaggeredGrid& g = ops.grid();
    Eigen::VectorXd x = ops.project_int(random_interior(g, 7));
    Eigen::VectorXd z = red.to_reduced(x);
    CHECK(z.size() == red.dim());
    CHECK((red.to_int(z) - x).lpNorm<Eigen::Infinity>() <
          1e-11 * x.lpNorm<Eigen::Infinity>());
    CHECK(z.squaredNorm() == doctest::Approx(g.norm_w_sq(x)).epsilon(1e-12));
}
