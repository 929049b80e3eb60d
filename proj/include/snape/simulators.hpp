#pragma once

#include <array>
#include <optional>
#include <string>

#include "snape/field_data.hpp"

namespace snape {

enum class OdeKind {
    Duffing,    ///< x'' + th1 x' + th2 x + th3 x^3 = amplitude cos(frequency t)
    VanDerPol,  ///< x'' + th1 x' + th2 x^2 x' + th3 x = 0
};

struct OdeSetup {
    OdeKind kind = OdeKind::Duffing;
    std::array<double, 3> theta{0.5, -1.0, 1.0};
    double forcing_amplitude = 0.42;  ///< Duffing only
    double forcing_frequency = 1.0;   ///< Duffing only
    double x0 = 1.0;
    double v0 = 0.0;
    double t0 = 0.0;
    double t1 = 200.0;
    int samples = 4000;       ///< output times linspace(t0, t1, samples)
    double max_step = 1e-3;   ///< largest internal RK4 step

    /// Throws SetupError.
    void validate() const;
};

/// u_tt = th1 u_xx + th2 u_yy on [-1,1]^2 x [0, t_end], u = 0 at x = +-1, u_y = 0 at y = +-1.
struct WaveSetup {
    double theta1 = 1.0;
    double theta2 = 1.0;
    int nx = 50;
    int ny = 50;
    int nt = 100;
    double t_end = 10.0;
    /// Internal spatial refinement; output nodes are every refine-th internal node.
    int refine = 4;
    /// Internal time step; unset means the largest step <= 0.9 of the CFL bound
    /// that divides the output frame spacing.
    std::optional<double> dt;
    std::string initial_displacement = "3*sin(pi*x)*exp(sin(pi*y/2))";
    std::string initial_velocity = "atan(cos(pi*x/2))";

    /// Throws SetupError, including CFL violations.
    void validate() const;
    double internal_spacing_x() const;
    double internal_spacing_y() const;
    double internal_dt() const;
};

/// u_t + th1 u u_x + th2 u_xx = 0 on the periodic interval [x_min, x_max).
struct BurgersSetup {
    double theta1 = 1.0;
    double theta2 = -0.1;
    double x_min = -8.0;
    double x_max = 8.0;
    int nx = 256;  ///< output nodes x_min + i (x_max - x_min) / nx
    int nt = 101;
    double t_end = 10.0;
    int refine = 32;  ///< internal nodes per output cell
    double cfl = 0.5;
    std::string initial_profile = "exp(-(x+2)*(x+2))";

    /// Throws SetupError.
    void validate() const;
};

/// Classical RK4 on the first-order system. Field "u" over axis "t".
FieldData simulate_ode(const OdeSetup& setup);

/// Explicit leapfrog. Field "u" over axes x, y, t.
FieldData simulate_wave2d(const WaveSetup& setup);

/// Engquist-Osher upwind advection with Crank-Nicolson diffusion. Field "u" over axes x, t.
FieldData simulate_burgers(const BurgersSetup& setup);

}  // namespace snape
