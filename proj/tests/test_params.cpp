#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pendlab/grid.hpp"
#include "pendlab/params.hpp"

using namespace pendlab;

TEST_CASE("geometry accessors and validation") {
    CavityGeometry g;
    CHECK(g.x_min() == -0.5);
    CHECK(g.x_max() == 0.5);
    CHECK(g.hx() == doctest::Approx(1.0 / 32).epsilon(1e-15));
    CHECK(g.area() == doctest::Approx(1.0));
    CHECK_NOTHROW(g.validate());

    CavityGeometry bad = g;
    bad.nx = 0;
    CHECK_THROWS(bad.validate());
    bad = g;
    bad.half_width = -1.0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("derive_params oracle: rectangle polar moment") {
    // continuum: rho * integral (x^2 + y^2) over [-a,a]x[-b,b] = rho*4ab(a^2+b^2)/3
    CavityGeometry g;
    g.nx = 64;
    g.ny = 64;
    RawParams raw;
    raw.rho = 2.0;
    const PhysicalParams p = derive_params(raw, g);
    const double a = 0.5, b = 0.5;
    const double exact = 2.0 * 4.0 * a * b * (a * a + b * b) / 3.0;
    CHECK(p.c_liquid == doctest::Approx(exact).epsilon(2e-4));
    CHECK(p.c_total == doctest::Approx(p.c_body + p.c_liquid).epsilon(1e-15));

    // refinement shrinks the quadrature error
    CavityGeometry g2 = g;
    g2.nx = 128;
    g2.ny = 128;
    const PhysicalParams p2 = derive_params(raw, g2);
    CHECK(std::abs(p2.c_liquid - exact) < std::abs(p.c_liquid - exact));
}

TEST_CASE("c_liquid equals the W-norm of the rigid rotation field exactly") {
    CavityGeometry geom;
    geom.nx = 24;
    geom.ny = 40;
    geom.half_width = 0.7;
    geom.half_height = 0.3;
    RawParams raw;
    raw.rho = 3.0;
    const PhysicalParams p = derive_params(raw, geom);
    StaggeredGrid g(geom);
    const double w = raw.rho * g.norm_w_sq(g.rigid_field());
    CHECK(p.c_liquid == doctest::Approx(w).epsilon(1e-14));
    CHECK(liquid_moment_faces(raw.rho, geom) ==
          doctest::Approx(liquid_moment_cells(raw.rho, geom)).epsilon(1e-12));
}

TEST_CASE("pendulum frequency") {
    RawParams raw;
    raw.beta_sq = 4.0;
    raw.c_body = 1.0;
    const PhysicalParams p = derive_params(raw, CavityGeometry{});
    CHECK(p.pendulum_freq() ==
          doctest::Approx(std::sqrt(4.0 / p.c_total)).epsilon(1e-15));
}

TEST_CASE("parameter validation") {
    RawParams raw;
    raw.rho = 0.0;
    CHECK_THROWS(derive_params(raw, CavityGeometry{}));
    CHECK_NOTHROW(derive_params(raw, CavityGeometry{}, true));
    raw.rho = -1.0;
    CHECK_THROWS(derive_params(raw, CavityGeometry{}, true));
    raw = RawParams{};
    raw.mu = -0.5;
    CHECK_THROWS(derive_params(raw, CavityGeometry{}));
    raw = RawParams{};
    raw.mu = 0.0;  // inviscid runs allowed
    CHECK_NOTHROW(derive_params(raw, CavityGeometry{}));
    raw = RawParams{};
    raw.beta_sq = 0.0;
    CHECK_THROWS(derive_params(raw, CavityGeometry{}));
}
