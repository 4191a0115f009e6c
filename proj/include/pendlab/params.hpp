#pragma once

#include <stdexcept>
#include <string>

namespace pendlab {

// Rectangular cavity, axis-aligned, described relative to the suspension point O.
// The discretization is a uniform MAC staggered grid with nx x ny pressure cells.
struct CavityGeometry {
    double half_width = 0.5;
    double half_height = 0.5;
    double center_x = 0.0;  // cavity center offset from O
    double center_y = 0.0;
    int nx = 32;
    int ny = 32;

    double x_min() const { return center_x - half_width; }
    double x_max() const { return center_x + half_width; }
    double y_min() const { return center_y - half_height; }
    double y_max() const { return center_y + half_height; }
    double hx() const { return 2.0 * half_width / nx; }
    double hy() const { return 2.0 * half_height / ny; }
    double area() const { return 4.0 * half_width * half_height; }

    void validate() const;
};

// Equilibrium branch selector: +1 linearizes about the hanging configuration
// (restoring torque), -1 about the inverted one.
enum class EquilibriumSign : int { plus = +1, minus = -1 };

inline int sign_value(EquilibriumSign s) { return static_cast<int>(s); }

struct RawParams {
    double rho = 1.0;      // liquid density
    double mu = 1.0;       // dynamic viscosity
    double c_body = 1.0;   // moment of inertia of the empty pendulum about O
    double beta_sq = 1.0;  // gravity torque coefficient beta^2 = m g l
};

// Raw inputs plus derived inertia constants. c_liquid is the polar moment of the
// liquid about O computed with the same face control-volume quadrature used for
// all discrete inner products, so that discrete Cauchy-Schwarz bounds relating
// kinetic energy to angular momentum hold exactly at any resolution.
struct PhysicalParams {
    double rho = 1.0;
    double mu = 1.0;
    double c_body = 1.0;
    double beta_sq = 1.0;
    CavityGeometry cavity;
    double c_liquid = 0.0;
    double c_total = 1.0;  // c_body + c_liquid

    double pendulum_freq() const;  // beta / sqrt(c_total)
};

// Validates inputs and fills in derived constants. rho = 0 is accepted only when
// allow_zero_density is set (degenerate rigid-limit presets); mu = 0 is accepted
// (inviscid conservation checks) but mu < 0 is not.
PhysicalParams derive_params(const RawParams& raw, const CavityGeometry& cavity,
                             bool allow_zero_density = false);

// Polar moment of the liquid about O via the face control-volume quadrature
// (the squared rotation field: u faces carry y^2, v faces carry x^2).
double liquid_moment_faces(double rho, const CavityGeometry& cavity);

// Same moment via the midpoint rule on pressure cells; on rectangles the two
// quadratures agree to rounding. Kept for cross-checks.
double liquid_moment_cells(double rho, const CavityGeometry& cavity);

}  // namespace pendlab
