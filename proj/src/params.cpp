#include "pendlab/params.hpp"

#include <cmath>

namespace pendlab {

namespace {

void fail(const std::string& field, const std::string& why) {
    throw std::invalid_argument("params: " + field + " " + why);
}

}  // namespace

void CavityGeometry::validate() const {
    if (!(half_width > 0.0)) fail("half_width", "must be positive");
    if (!(half_height > 0.0)) fail("half_height", "must be positive");
    if (!std::isfinite(center_x) || !std::isfinite(center_y))
        fail("center", "must be finite");
    if (nx < 8 || ny < 8) fail("nx/ny", "must be at least 8");
}

double PhysicalParams::pendulum_freq() const {
    return std::sqrt(beta_sq / c_total);
}

double liquid_moment_faces(double rho, const CavityGeometry& g) {
    const int nx = g.nx, ny = g.ny;
    const double hx = g.hx(), hy = g.hy();
    // ||e3 x x||^2 under the face control-volume quadrature: the u component
    // samples y^2 at cell-center heights (midpoint in y; the trapezoid weights
    // along x sum to the exact width), the v component samples x^2 at
    // cell-center abscissae. Identical to the pressure-cell midpoint value.
    double sy2 = 0.0;
    for (int j = 0; j < ny; ++j) {
        const double y = g.y_min() + (j + 0.5) * hy;
        sy2 += hy * y * y;
    }
    double sx2 = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double x = g.x_min() + (i + 0.5) * hx;
        sx2 += hx * x * x;
    }
    return rho * (sy2 * (2.0 * g.half_width) + sx2 * (2.0 * g.half_height));
}

double liquid_moment_cells(double rho, const CavityGeometry& g) {
    const int nx = g.nx, ny = g.ny;
    const double hx = g.hx(), hy = g.hy();
    double s = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double x = g.x_min() + (i + 0.5) * hx;
        for (int j = 0; j < ny; ++j) {
            const double y = g.y_min() + (j + 0.5) * hy;
            s += (x * x + y * y) * hx * hy;
        }
    }
    return rho * s;
}

PhysicalParams derive_params(const RawParams& raw, const CavityGeometry& cavity,
                             bool allow_zero_density) {
    cavity.validate();
    if (!std::isfinite(raw.rho) || raw.rho < 0.0) fail("rho", "must be >= 0 and finite");
    if (raw.rho == 0.0 && !allow_zero_density)
        fail("rho", "must be positive (zero density only in degenerate presets)");
    if (!std::isfinite(raw.mu) || raw.mu < 0.0) fail("mu", "must be >= 0 and finite");
    if (!(raw.c_body > 0.0) || !std::isfinite(raw.c_body))
        fail("c_body", "must be positive and finite");
    if (!(raw.beta_sq > 0.0) || !std::isfinite(raw.beta_sq))
        fail("beta_sq", "must be positive and finite");

    PhysicalParams p;
    p.rho = raw.rho;
    p.mu = raw.mu;
    p.c_body = raw.c_body;
    p.beta_sq = raw.beta_sq;
    p.cavity = cavity;
    p.c_liquid = liquid_moment_faces(raw.rho, cavity);
    p.c_total = p.c_body + p.c_liquid;
    return p;
}

}  // namespace pendlab
