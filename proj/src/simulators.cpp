#include "snape/simulators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "snape/errors.hpp"
#include "snape/expression.hpp"

namespace snape {

namespace {

bool all_finite(std::initializer_list<double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = i == n - 1 ? b : a + (b - a) * i / (n - 1);
    }
    return out;
}

/// Number of equal sub-steps of length <= max_step covering `interval`.
int substeps(double interval, double max_step) {
    const double ratio = interval / max_step;
    const double c = std::ceil(ratio - 1e-9 * ratio);
    return std::max(1, static_cast<int>(c));
}

Expression parse_setup_expression(const std::string& text, const std::vector<std::string>& vars,
                                  const char* what) {
    try {
        return Expression::parse(text, vars);
    } catch (const ParseError& e) {
        throw SetupError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

void OdeSetup::validate() const {
    if (samples < 2) {
        throw SetupError("ODE setup needs at least 2 samples");
    }
    if (!all_finite({theta[0], theta[1], theta[2], forcing_amplitude, forcing_frequency, x0, v0, t0, t1, max_step})) {
        throw SetupError("ODE setup parameters must be finite");
    }
    if (!(t1 > t0)) {
        throw SetupError("ODE time interval must satisfy t1 > t0");
    }
    if (!(max_step > 0.0)) {
        throw SetupError("ODE max_step must be positive");
    }
}

FieldData simulate_ode(const OdeSetup& setup) {
    setup.validate();
    const auto [th1, th2, th3] = setup.theta;
    auto accel = [&](double t, double x, double v) {
        if (setup.kind == OdeKind::Duffing) {
            return setup.forcing_amplitude * std::cos(setup.forcing_frequency * t) - th1 * v - th2 * x -
                   th3 * x * x * x;
        }
        return -th1 * v - th2 * x * x * v - th3 * x;
    };

    const std::vector<double> times = linspace(setup.t0, setup.t1, setup.samples);
    std::vector<double> out(times.size());
    double x = setup.x0;
    double v = setup.v0;
    out[0] = x;
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double interval = times[k] - times[k - 1];
        const int n = substeps(interval, setup.max_step);
        const double h = interval / n;
        for (int s = 0; s < n; ++s) {
            const double t = times[k - 1] + s * h;
            const double k1x = v;
            const double k1v = accel(t, x, v);
            const double k2x = v + 0.5 * h * k1v;
            const double k2v = accel(t + 0.5 * h, x + 0.5 * h * k1x, v + 0.5 * h * k1v);
            const double k3x = v + 0.5 * h * k2v;
            const double k3v = accel(t + 0.5 * h, x + 0.5 * h * k2x, v + 0.5 * h * k2v);
            const double k4x = v + h * k3v;
            const double k4v = accel(t + h, x + h * k3x, v + h * k3v);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        if (!std::isfinite(x) || !std::isfinite(v)) {
            throw SimulationError("ODE state became non-finite near t = " + std::to_string(times[k]));
        }
        out[k] = x;
    }
    return FieldData::single(Grid({Axis{"t", times}}), "u", std::move(out));
}

void WaveSetup::validate() const {
    if (nx < 3 || ny < 2 || nt < 2) {
        throw SetupError("wave grid needs nx >= 3, ny >= 2 and nt >= 2");
    }
    if (refine < 1) {
        throw SetupError("wave refine must be at least 1");
    }
    if (!all_finite({theta1, theta2, t_end}) || theta1 < 0.0 || theta2 < 0.0 || !(theta1 + theta2 > 0.0)) {
        throw SetupError("wave coefficients must be non-negative with a positive sum");
    }
    if (!(t_end > 0.0)) {
        throw SetupError("wave t_end must be positive");
    }
    const double bound = std::min(internal_spacing_x(), internal_spacing_y()) / std::sqrt(theta1 + theta2);
    if (dt) {
        if (!(*dt > 0.0) || *dt > bound) {
            throw SetupError("wave time step " + std::to_string(*dt) + " violates the CFL bound " +
                             std::to_string(bound));
        }
        const double ratio = t_end / (nt - 1) / *dt;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
            throw SetupError("wave time step must divide the output frame spacing");
        }
    }
}

double WaveSetup::internal_spacing_x() const { return 2.0 / ((nx - 1) * refine); }
double WaveSetup::internal_spacing_y() const { return 2.0 / ((ny - 1) * refine); }

double WaveSetup::internal_dt() const {
    const double frame = t_end / (nt - 1);
    if (dt) {
        return frame / std::round(frame / *dt);
    }
    const double bound = std::min(internal_spacing_x(), internal_spacing_y()) / std::sqrt(theta1 + theta2);
    return frame / substeps(frame, 0.9 * bound);
}

FieldData simulate_wave2d(const WaveSetup& setup) {
    setup.validate();
    const std::vector<std::string> vars{"x", "y"};
    const Expression disp = parse_setup_expression(setup.initial_displacement, vars, "initial displacement");
    const Expression vel = parse_setup_expression(setup.initial_velocity, vars, "initial velocity");

    const int nxi = (setup.nx - 1) * setup.refine + 1;
    const int nyi = (setup.ny - 1) * setup.refine + 1;
    const double hx = setup.internal_spacing_x();
    const double hy = setup.internal_spacing_y();
    const double dt = setup.internal_dt();
    const double frame = setup.t_end / (setup.nt - 1);
    const int per_frame = static_cast<int>(std::lround(frame / dt));
    const double cx = setup.theta1 / (hx * hx);
    const double cy = setup.theta2 / (hy * hy);
    const auto idx = [nyi](int i, int j) { return static_cast<std::size_t>(i) * nyi + j; };

    const std::vector<double> xs_i = linspace(-1.0, 1.0, nxi);
    const std::vector<double> ys_i = linspace(-1.0, 1.0, nyi);
    const std::size_t total = static_cast<std::size_t>(nxi) * nyi;
    std::vector<double> prev(total, 0.0), cur(total, 0.0), next(total, 0.0), v0(total, 0.0);
    for (int i = 1; i + 1 < nxi; ++i) {
        for (int j = 0; j < nyi; ++j) {
            const double p[2] = {xs_i[i], ys_i[j]};
            prev[idx(i, j)] = disp.evaluate(p);
            v0[idx(i, j)] = vel.evaluate(p);
        }
    }

    // L u with u = 0 on the x boundaries and mirrored ghosts at the y boundaries.
    auto laplacian = [&](const std::vector<double>& u, int i, int j) {
        const double c = u[idx(i, j)];
        const double uxx = u[idx(i - 1, j)] - 2.0 * c + u[idx(i + 1, j)];
        const double down = j > 0 ? u[idx(i, j - 1)] : u[idx(i, j + 1)];
        const double up = j + 1 < nyi ? u[idx(i, j + 1)] : u[idx(i, j - 1)];
        return cx * uxx + cy * (down - 2.0 * c + up);
    };

    const std::size_t npoints = static_cast<std::size_t>(setup.nx) * setup.ny * setup.nt;
    std::vector<double> out(npoints, 0.0);
    auto record = [&](const std::vector<double>& u, int k) {
        for (int a = 0; a < setup.nx; ++a) {
            for (int b = 0; b < setup.ny; ++b) {
                const std::size_t o = (static_cast<std::size_t>(a) * setup.ny + b) * setup.nt + k;
                out[o] = u[idx(a * setup.refine, b * setup.refine)];
            }
        }
    };
    record(prev, 0);

    for (int i = 1; i + 1 < nxi; ++i) {
        for (int j = 0; j < nyi; ++j) {
            cur[idx(i, j)] = prev[idx(i, j)] + dt * v0[idx(i, j)] + 0.5 * dt * dt * laplacian(prev, i, j);
        }
    }
    int step = 1;
    const int total_steps = per_frame * (setup.nt - 1);
    if (per_frame == 1) {
        record(cur, 1);
    }
    const double dt2 = dt * dt;
    while (step < total_steps) {
        for (int i = 1; i + 1 < nxi; ++i) {
            for (int j = 0; j < nyi; ++j) {
                next[idx(i, j)] = 2.0 * cur[idx(i, j)] - prev[idx(i, j)] + dt2 * laplacian(cur, i, j);
            }
        }
        std::swap(prev, cur);
        std::swap(cur, next);
        ++step;
        if (step % per_frame == 0) {
            const int k = step / per_frame;
            for (double value : cur) {
                if (!std::isfinite(value)) {
                    throw SimulationError("wave field became non-finite at frame " + std::to_string(k));
                }
            }
            record(cur, k);
        }
    }

    std::vector<Axis> axes{{"x", linspace(-1.0, 1.0, setup.nx)},
                           {"y", linspace(-1.0, 1.0, setup.ny)},
                           {"t", linspace(0.0, setup.t_end, setup.nt)}};
    return FieldData::single(Grid(std::move(axes)), "u", std::move(out));
}

void BurgersSetup::validate() const {
    if (nx < 4 || nt < 2 || refine < 1) {
        throw SetupError("Burgers grid needs nx >= 4, nt >= 2 and refine >= 1");
    }
    if (!all_finite({theta1, theta2, x_min, x_max, t_end, cfl}) || !(x_max > x_min) || !(t_end > 0.0)) {
        throw SetupError("Burgers domain must be finite and non-empty");
    }
    if (!(theta2 < 0.0)) {
        throw SetupError("Burgers diffusion -theta2 must be positive, got theta2 = " + std::to_string(theta2));
    }
    if (!(cfl > 0.0) || cfl > 1.0) {
        throw SetupError("Burgers cfl must lie in (0, 1]");
    }
}

FieldData simulate_burgers(const BurgersSetup& setup) {
    setup.validate();
    const Expression profile = parse_setup_expression(setup.initial_profile, {"x"}, "initial profile");
    const int n = setup.nx * setup.refine;
    const double length = setup.x_max - setup.x_min;
    const double dx = length / n;
    const double nu = -setup.theta2;
    const double c = setup.theta1;

    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) {
        const double x = setup.x_min + length * i / n;
        u[i] = profile.evaluate(std::span<const double>(&x, 1));
    }
    if (!u.allFinite()) {
        throw SetupError("Burgers initial profile is not finite on the grid");
    }
    const double umax = u.cwiseAbs().maxCoeff();
    const double range0 = std::max({u.maxCoeff() - u.minCoeff(), umax, std::numeric_limits<double>::min()});

    const double frame = setup.t_end / (setup.nt - 1);
    const double speed = std::abs(c) * umax;
    const int per_frame = speed > 0.0 ? substeps(frame, setup.cfl * dx / speed) : 1;
    const double dt = frame / per_frame;

    // (I - dt/2 nu L) on the periodic grid; symmetric positive definite.
    const double k = 0.5 * dt * nu / (dx * dx);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(3 * n));
    for (int i = 0; i < n; ++i) {
        trip.emplace_back(i, i, 1.0 + 2.0 * k);
        trip.emplace_back(i, (i + 1) % n, -k);
        trip.emplace_back(i, (i + n - 1) % n, -k);
    }
    Eigen::SparseMatrix<double> lhs(n, n);
    lhs.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(lhs);
    if (solver.info() != Eigen::Success) {
        throw SimulationError("Burgers diffusion matrix factorization failed");
    }

    // Engquist-Osher flux of c u^2 / 2 between left state a and right state b.
    auto flux = [c](double a, double b) {
        const double lo = c >= 0.0 ? std::max(a, 0.0) : std::min(a, 0.0);
        const double hi = c >= 0.0 ? std::min(b, 0.0) : std::max(b, 0.0);
        return 0.5 * c * (lo * lo + hi * hi);
    };

    std::vector<double> out(static_cast<std::size_t>(setup.nx) * setup.nt);
    auto record = [&](int frame_index) {
        for (int a = 0; a < setup.nx; ++a) {
            out[static_cast<std::size_t>(a) * setup.nt + frame_index] = u[a * setup.refine];
        }
    };
    record(0);

    Eigen::VectorXd rhs(n);
    std::vector<double> f(static_cast<std::size_t>(n));
    const double r = dt / dx;
    for (int fi = 1; fi < setup.nt; ++fi) {
        for (int s = 0; s < per_frame; ++s) {
            for (int i = 0; i < n; ++i) {
                f[static_cast<std::size_t>(i)] = flux(u[i], u[(i + 1) % n]);  // interface i + 1/2
            }
            for (int i = 0; i < n; ++i) {
                const double left = u[(i + n - 1) % n];
                const double right = u[(i + 1) % n];
                rhs[i] = u[i] + k * (left - 2.0 * u[i] + right) -
                         r * (f[static_cast<std::size_t>(i)] - f[static_cast<std::size_t>((i + n - 1) % n)]);
            }
            u = solver.solve(rhs);
        }
        if (!u.allFinite() || u.cwiseAbs().maxCoeff() > 10.0 * range0) {
            throw SimulationError("Burgers solution became unstable at frame " + std::to_string(fi));
        }
        record(fi);
    }

    std::vector<double> xs(static_cast<std::size_t>(setup.nx));
    for (int a = 0; a < setup.nx; ++a) {
        xs[static_cast<std::size_t>(a)] = setup.x_min + length * a / setup.nx;
    }
    std::vector<Axis> axes{{"x", std::move(xs)}, {"t", linspace(0.0, setup.t_end, setup.nt)}};
    return FieldData::single(Grid(std::move(axes)), "u", std::move(out));
}

}  // namespace snape
