#pragma once

// Independent reference implementations used only by the tests.

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "snape/tensor_basis.hpp"

namespace oracle {

/// Cox-de Boor recursion on the full knot sequence, straight from the
/// definition. Right-continuous; at x == t.back() the last non-empty span is used.
inline double bspline(const std::vector<double>& t, int i, int order, double x) {
    if (order == 1) {
        const double a = t[i];
        const double b = t[i + 1];
        if (a < b && a <= x && x < b) {
            return 1.0;
        }
        if (a < b && x == t.back() && b == t.back()) {
            return 1.0;
        }
        return 0.0;
    }
    double out = 0.0;
    const double d1 = t[i + order - 1] - t[i];
    const double d2 = t[i + order] - t[i + 1];
    if (d1 > 0.0) {
        out += (x - t[i]) / d1 * bspline(t, i, order - 1, x);
    }
    if (d2 > 0.0) {
        out += (t[i + order] - x) / d2 * bspline(t, i + 1, order - 1, x);
    }
    return out;
}

/// d-th derivative by repeated application of the derivative recurrence.
inline double bspline_derivative(const std::vector<double>& t, int i, int order, int d, double x) {
    if (d == 0) {
        return bspline(t, i, order, x);
    }
    double out = 0.0;
    const double d1 = t[i + order - 1] - t[i];
    const double d2 = t[i + order] - t[i + 1];
    if (d1 > 0.0) {
        out += (order - 1) / d1 * bspline_derivative(t, i, order - 1, d - 1, x);
    }
    if (d2 > 0.0) {
        out -= (order - 1) / d2 * bspline_derivative(t, i + 1, order - 1, d - 1, x);
    }
    return out;
}

/// Clamped full knot sequence of `order` with `k` uniform distinct knots on [a, b].
inline std::vector<double> clamped_uniform(double a, double b, int k, int order) {
    std::vector<double> t(static_cast<std::size_t>(order - 1), a);
    for (int i = 0; i < k; ++i) {
        t.push_back(i + 1 == k ? b : a + (b - a) * i / (k - 1));
    }
    t.insert(t.end(), static_cast<std::size_t>(order - 1), b);
    return t;
}

/// Minimizer of a quadratic function of x found from finite-difference
/// derivatives at `x0`; exact for quadratics up to rounding.
inline Eigen::VectorXd minimize_quadratic(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x0, double h = 1e-2) {
    const Eigen::Index n = x0.size();
    Eigen::VectorXd g(n);
    Eigen::MatrixXd hess(n, n);
    const double f0 = f(x0);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd xp = x0, xm = x0;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2 * h);
        hess(i, i) = (f(xp) - 2 * f0 + f(xm)) / (h * h);
        for (Eigen::Index j = 0; j < i; ++j) {
            Eigen::VectorXd pp = x0, pm = x0, mp = x0, mm = x0;
            pp[i] += h, pp[j] += h;
            pm[i] += h, pm[j] -= h;
            mp[i] -= h, mp[j] += h;
            mm[i] -= h, mm[j] -= h;
            hess(i, j) = hess(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4 * h * h);
        }
    }
    return x0 - hess.ldlt().solve(g);
}

/// Golden-section search for the minimum of a unimodal function on [a, b].
inline double golden_section(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Dense tensor-product matrix built point by point from the scalar recursion.
inline Eigen::MatrixXd naive_tensor(const snape::BasisSpec& spec, const snape::Grid& grid, const snape::DerivIndex& alpha) {
    const auto n = static_cast<Eigen::Index>(grid.point_count());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, spec.basis_count());
    std::vector<std::vector<double>> full;
    std::vector<int> counts;
    for (const snape::AxisBasis& a : spec.axes()) {
        full.push_back(a.knots.full_knots());
        counts.push_back(a.knots.basis_count());
    }
    for (Eigen::Index r = 0; r < n; ++r) {
        const std::vector<double> x = grid.point(static_cast<std::size_t>(r));
        for (Eigen::Index c = 0; c < spec.basis_count(); ++c) {
            Eigen::Index rem = c;
            double value = 1.0;
            for (std::size_t a = spec.dims(); a-- > 0;) {
                const int i = static_cast<int>(rem % counts[a]);
                rem /= counts[a];
                value *= oracle::bspline_derivative(full[a], i, spec.axes()[a].knots.order(), alpha[a], x[a]);
            }
            out(r, c) = value;
        }
    }
    return out;
}

}  // namespace oracle
