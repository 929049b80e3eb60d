#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace snape {

/// Clamped B-spline knot vector of a given order (order = degree + 1).
///
/// The full knot sequence repeats each end knot `order` times, so the first
/// and last basis functions attain 1 at the domain ends.
class KnotVector {
public:
    /// Throws ArgumentError unless `distinct` has >= 2 strictly increasing finite
    /// entries and order >= 1.
    KnotVector(std::vector<double> distinct, int order);

    int order() const noexcept { return order_; }
    const std::vector<double>& distinct_knots() const noexcept { return distinct_; }
    const std::vector<double>& full_knots() const noexcept { return full_; }

    /// Number of basis functions p = k + o - 2.
    int basis_count() const noexcept { return static_cast<int>(distinct_.size()) + order_ - 2; }

    double lower() const noexcept { return distinct_.front(); }
    double upper() const noexcept { return distinct_.back(); }

    bool operator==(const KnotVector&) const = default;

private:
    std::vector<double> distinct_;
    std::vector<double> full_;
    int order_;
};

/// k equally spaced distinct knots on [a, b].
KnotVector make_uniform_knots(double a, double b, int k, int order);

/// The `order` possibly-nonzero basis values at one point.
///
/// `values[i]` belongs to basis function `first + i`.
struct LocalBasis {
    int first = 0;
    std::vector<double> values;
};

/// Derivative of order `d` of the basis functions supported at `x`.
///
/// Interior knots use the right limit; x == upper() uses the left limit of the
/// last span. Throws DomainError outside [a, b] and DerivativeOrderError when
/// d >= order.
LocalBasis eval_local(const KnotVector& kv, double x, int d);

/// Dense (points x basis_count) matrix of d-th derivatives of every basis function.
Eigen::MatrixXd eval_basis(const KnotVector& kv, std::span<const double> points, int d);

}  // namespace snape
