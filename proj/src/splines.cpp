#include "snape/splines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "snape/errors.hpp"

namespace snape {

KnotVector::KnotVector(std::vector<double> distinct, int order)
    : distinct_(std::move(distinct)), order_(order) {
    if (order_ < 1) {
        throw ArgumentError("spline order must be >= 1, got " + std::to_string(order_));
    }
    if (distinct_.size() < 2) {
        throw ArgumentError("a knot vector needs at least 2 distinct knots");
    }
    for (std::size_t i = 0; i < distinct_.size(); ++i) {
        if (!std::isfinite(distinct_[i])) {
            throw ArgumentError("knots must be finite");
        }
        if (i > 0 && !(distinct_[i] > distinct_[i - 1])) {
            throw ArgumentError("distinct knots must be strictly increasing");
        }
    }
    full_.reserve(distinct_.size() + 2 * static_cast<std::size_t>(order_ - 1));
    full_.insert(full_.end(), static_cast<std::size_t>(order_ - 1), distinct_.front());
    full_.insert(full_.end(), distinct_.begin(), distinct_.end());
    full_.insert(full_.end(), static_cast<std::size_t>(order_ - 1), distinct_.back());
}

KnotVector make_uniform_knots(double a, double b, int k, int order) {
    if (!std::isfinite(a) || !std::isfinite(b)) {
        throw ArgumentError("knot bounds must be finite");
    }
    if (!(b > a)) {
        throw ArgumentError("knot interval must satisfy b > a");
    }
    if (k < 2) {
        throw ArgumentError("need at least 2 knots, got " + std::to_string(k));
    }
    if (order < 1) {
        throw ArgumentError("spline order must be >= 1, got " + std::to_string(order));
    }
    std::vector<double> t(static_cast<std::size_t>(k));
    const double h = (b - a) / (k - 1);
    for (int i = 0; i < k; ++i) {
        t[static_cast<std::size_t>(i)] = a + h * i;
    }
    t.back() = b;
    return KnotVector(std::move(t), order);
}

namespace {

// Index mu of the knot span [t_mu, t_mu+1) containing x, over the full knot
// vector. The last nonempty span is closed on the right.
int find_span(const KnotVector& kv, double x) {
    const auto& t = kv.full_knots();
    const int o = kv.order();
    const int p = kv.basis_count();
    if (x >= kv.upper()) {
        return p - 1;
    }
    // First knot strictly greater than x; the span starts one before it.
    const auto it = std::upper_bound(t.begin() + o - 1, t.begin() + p + 1, x);
    return static_cast<int>(it - t.begin()) - 1;
}

}  // namespace

LocalBasis eval_local(const KnotVector& kv, double x, int d) {
    const int o = kv.order();
    if (d < 0 || d >= o) {
        throw DerivativeOrderError("derivative order " + std::to_string(d) +
                                   " not available for spline order " + std::to_string(o));
    }
    if (!std::isfinite(x) || x < kv.lower() || x > kv.upper()) {
        throw DomainError("point " + std::to_string(x) + " outside spline domain [" +
                          std::to_string(kv.lower()) + ", " + std::to_string(kv.upper()) + "]");
    }
    const auto& t = kv.full_knots();
    const int deg = o - 1;
    const int span = find_span(kv, x);

    // Triangular table of all lower-order bases on this span (de Boor / Cox),
    // ndu(j, r) holds values, ndu(r, j) the knot differences.
    Eigen::MatrixXd ndu(o, o);
    std::vector<double> left(static_cast<std::size_t>(o)), right(static_cast<std::size_t>(o));
    ndu(0, 0) = 1.0;
    for (int j = 1; j <= deg; ++j) {
        left[j] = x - t[span + 1 - j];
        right[j] = t[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu(j, r) = right[r + 1] + left[j - r];
            const double tmp = ndu(r, j - 1) / ndu(j, r);
            ndu(r, j) = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        ndu(j, j) = saved;
    }

    LocalBasis out;
    out.first = span - deg;
    out.values.assign(static_cast<std::size_t>(o), 0.0);
    if (d == 0) {
        for (int j = 0; j <= deg; ++j) {
            out.values[j] = ndu(j, deg);
        }
        return out;
    }

    // Derivatives as signed combinations of order (o - d) splines.
    Eigen::MatrixXd a(2, o);
    for (int r = 0; r <= deg; ++r) {
        int s1 = 0;
        int s2 = 1;
        a(0, 0) = 1.0;
        double val = 0.0;
        for (int k = 1; k <= d; ++k) {
            val = 0.0;
            const int rk = r - k;
            const int pk = deg - k;
            if (r >= k) {
                a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
                val = a(s2, 0) * ndu(rk, pk);
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : deg - r;
            for (int j = j1; j <= j2; ++j) {
                a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
                val += a(s2, j) * ndu(rk + j, pk);
            }
            if (r <= pk) {
                a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
                val += a(s2, k) * ndu(r, pk);
            }
            std::swap(s1, s2);
        }
        out.values[r] = val;
    }
    // deg! / (deg - d)!
    double factor = 1.0;
    for (int k = 0; k < d; ++k) {
        factor *= deg - k;
    }
    for (auto& v : out.values) {
        v *= factor;
    }
    return out;
}

Eigen::MatrixXd eval_basis(const KnotVector& kv, std::span<const double> points, int d) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(points.size()), kv.basis_count());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const LocalBasis lb = eval_local(kv, points[i], d);
        for (std::size_t j = 0; j < lb.values.size(); ++j) {
            out(static_cast<Eigen::Index>(i), lb.first + static_cast<Eigen::Index>(j)) = lb.values[j];
        }
    }
    return out;
}

}  // namespace snape
