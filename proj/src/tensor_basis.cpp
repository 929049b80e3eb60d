#include "snape/tensor_basis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "snape/errors.hpp"

namespace snape {

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) {
        throw ArgumentError("a grid needs at least one axis");
    }
    std::set<std::string> names;
    point_count_ = 1;
    for (const auto& ax : axes_) {
        if (ax.name.empty()) {
            throw ArgumentError("axis names must be non-empty");
        }
        if (!names.insert(ax.name).second) {
            throw ArgumentError("duplicate axis name '" + ax.name + "'");
        }
        if (ax.coords.size() < 2) {
            throw ArgumentError("axis '" + ax.name + "' needs at least 2 coordinates");
        }
        for (std::size_t i = 0; i < ax.coords.size(); ++i) {
            if (!std::isfinite(ax.coords[i]) || (i > 0 && !(ax.coords[i] > ax.coords[i - 1]))) {
                throw ArgumentError("axis '" + ax.name + "' coordinates must be finite and strictly increasing");
            }
        }
        point_count_ *= ax.coords.size();
    }
}

std::size_t Grid::axis_index(const std::string& name) const {
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        if (axes_[i].name == name) {
            return i;
        }
    }
    throw MismatchError("grid has no axis named '" + name + "'");
}

bool Grid::has_axis(const std::string& name) const {
    return std::any_of(axes_.begin(), axes_.end(), [&](const Axis& a) { return a.name == name; });
}

std::vector<double> Grid::point(std::size_t flat) const {
    std::vector<double> x(axes_.size());
    for (std::size_t a = axes_.size(); a-- > 0;) {
        const std::size_t n = axes_[a].coords.size();
        x[a] = axes_[a].coords[flat % n];
        flat /= n;
    }
    return x;
}

BasisSpec::BasisSpec(std::vector<AxisBasis> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) {
        throw ArgumentError("a basis needs at least one axis");
    }
}

Eigen::Index BasisSpec::basis_count() const noexcept {
    if (axes_.empty()) {
        return 0;
    }
    Eigen::Index m = 1;
    for (const auto& ax : axes_) {
        m *= ax.knots.basis_count();
    }
    return m;
}

int default_knot_count(std::size_t n) {
    return std::clamp(static_cast<int>(n / 4), 10, 60);
}

int default_order(int max_derivative) {
    return std::max(max_derivative + 2, 4);
}

BasisSpec make_default_basis(const Grid& grid, std::span<const int> max_derivative, const BasisOptions& options) {
    if (max_derivative.size() != grid.dims()) {
        throw ArgumentError("max_derivative must have one entry per grid axis");
    }
    for (const auto& [name, k] : options.knots) {
        if (!grid.has_axis(name)) {
            throw ArgumentError("knot override for unknown axis '" + name + "'");
        }
    }
    for (const auto& [name, o] : options.orders) {
        if (!grid.has_axis(name)) {
            throw ArgumentError("order override for unknown axis '" + name + "'");
        }
    }
    std::vector<AxisBasis> axes;
    for (std::size_t a = 0; a < grid.dims(); ++a) {
        const Axis& ax = grid.axis(a);
        const auto kit = options.knots.find(ax.name);
        const auto oit = options.orders.find(ax.name);
        const int k = kit != options.knots.end() ? kit->second : default_knot_count(ax.coords.size());
        const int o = oit != options.orders.end() ? oit->second : default_order(max_derivative[a]);
        if (o < max_derivative[a] + 1) {
            throw ArgumentError("order " + std::to_string(o) + " on axis '" + ax.name +
                                "' cannot represent derivative order " + std::to_string(max_derivative[a]));
        }
        axes.push_back({ax.name, make_uniform_knots(ax.coords.front(), ax.coords.back(), k, o)});
    }
    return BasisSpec(std::move(axes));
}

namespace {

void check_alpha(const BasisSpec& spec, const DerivIndex& alpha) {
    if (alpha.size() != spec.dims()) {
        throw ArgumentError("derivative index has " + std::to_string(alpha.size()) + " entries, basis has " +
                            std::to_string(spec.dims()) + " axes");
    }
    for (std::size_t a = 0; a < alpha.size(); ++a) {
        const int o = spec.axes()[a].knots.order();
        if (alpha[a] < 0 || alpha[a] >= o) {
            throw DerivativeOrderError("derivative order " + std::to_string(alpha[a]) + " on axis '" +
                                       spec.axes()[a].name + "' needs spline order > " + std::to_string(alpha[a]) +
                                       ", have " + std::to_string(o));
        }
    }
}

// Coefficient strides: first axis slowest.
std::vector<Eigen::Index> coefficient_strides(const BasisSpec& spec) {
    std::vector<Eigen::Index> stride(spec.dims());
    Eigen::Index s = 1;
    for (std::size_t a = spec.dims(); a-- > 0;) {
        stride[a] = s;
        s *= spec.axes()[a].knots.basis_count();
    }
    return stride;
}

// Accumulates CSR arrays row by row. Each row is the Kronecker product of the
// per-axis local bases, emitted in increasing column order.
class CsrBuilder {
public:
    CsrBuilder(const BasisSpec& spec, std::size_t rows)
        : spec_(spec), stride_(coefficient_strides(spec)), local_(spec.dims(), 0) {
        row_nnz_ = 1;
        for (const auto& ax : spec.axes()) {
            row_nnz_ *= static_cast<std::size_t>(ax.knots.order());
        }
        outer_.reserve(rows + 1);
        outer_.push_back(0);
        inner_.reserve(rows * row_nnz_);
        values_.reserve(rows * row_nnz_);
    }

    void add_row(const std::vector<const LocalBasis*>& parts) {
        const std::size_t d = parts.size();
        std::fill(local_.begin(), local_.end(), 0);
        for (std::size_t e = 0; e < row_nnz_; ++e) {
            Eigen::Index col = 0;
            double v = 1.0;
            for (std::size_t a = 0; a < d; ++a) {
                col += (parts[a]->first + local_[a]) * stride_[a];
                v *= parts[a]->values[static_cast<std::size_t>(local_[a])];
            }
            inner_.push_back(static_cast<int>(col));
            values_.push_back(v);
            // odometer increment, last axis fastest
            for (std::size_t a = d; a-- > 0;) {
                if (++local_[a] < spec_.axes()[a].knots.order()) {
                    break;
                }
                local_[a] = 0;
            }
        }
        outer_.push_back(static_cast<int>(inner_.size()));
    }

    SparseRowMatrix finish() const {
        const auto rows = static_cast<Eigen::Index>(outer_.size() - 1);
        Eigen::Map<const SparseRowMatrix> view(rows, spec_.basis_count(), static_cast<Eigen::Index>(values_.size()),
                                               outer_.data(), inner_.data(), values_.data());
        return SparseRowMatrix(view);
    }

private:
    const BasisSpec& spec_;
    std::vector<Eigen::Index> stride_;
    std::vector<int> local_;
    std::size_t row_nnz_ = 1;
    std::vector<int> outer_;
    std::vector<int> inner_;
    std::vector<double> values_;
};

}  // namespace

SparseRowMatrix assemble_grid_matrix(const BasisSpec& spec, const Grid& grid, const DerivIndex& alpha) {
    if (spec.dims() != grid.dims()) {
        throw MismatchError("basis has " + std::to_string(spec.dims()) + " axes, grid has " +
                            std::to_string(grid.dims()));
    }
    for (std::size_t a = 0; a < spec.dims(); ++a) {
        if (spec.axes()[a].name != grid.axis(a).name) {
            throw MismatchError("basis axis '" + spec.axes()[a].name + "' does not match grid axis '" +
                                grid.axis(a).name + "'");
        }
    }
    check_alpha(spec, alpha);

    const std::size_t d = spec.dims();
    std::vector<std::vector<LocalBasis>> per_axis(d);
    for (std::size_t a = 0; a < d; ++a) {
        const auto& coords = grid.axis(a).coords;
        per_axis[a].reserve(coords.size());
        for (double x : coords) {
            per_axis[a].push_back(eval_local(spec.axes()[a].knots, x, alpha[a]));
        }
    }

    CsrBuilder builder(spec, grid.point_count());
    std::vector<std::size_t> idx(d, 0);
    std::vector<const LocalBasis*> parts(d);
    for (std::size_t row = 0; row < grid.point_count(); ++row) {
        for (std::size_t a = 0; a < d; ++a) {
            parts[a] = &per_axis[a][idx[a]];
        }
        builder.add_row(parts);
        for (std::size_t a = d; a-- > 0;) {
            if (++idx[a] < per_axis[a].size()) {
                break;
            }
            idx[a] = 0;
        }
    }
    return builder.finish();
}

SparseRowMatrix eval_at_points(const BasisSpec& spec, std::span<const std::vector<double>> points,
                               const DerivIndex& alpha) {
    check_alpha(spec, alpha);
    const std::size_t d = spec.dims();
    CsrBuilder builder(spec, points.size());
    std::vector<LocalBasis> local(d);
    std::vector<const LocalBasis*> parts(d);
    for (const auto& x : points) {
        if (x.size() != d) {
            throw ArgumentError("point has " + std::to_string(x.size()) + " coordinates, basis has " +
                                std::to_string(d) + " axes");
        }
        for (std::size_t a = 0; a < d; ++a) {
            local[a] = eval_local(spec.axes()[a].knots, x[a], alpha[a]);
            parts[a] = &local[a];
        }
        builder.add_row(parts);
    }
    return builder.finish();
}

}  // namespace snape
