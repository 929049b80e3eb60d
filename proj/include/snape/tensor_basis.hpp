#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "snape/splines.hpp"

namespace snape {

/// Row-major sparse matrix used for every basis and constraint operator.
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Axis {
    std::string name;
    std::vector<double> coords;  ///< strictly increasing, at least 2 entries

    bool operator==(const Axis&) const = default;
};

/// Rectangular grid. Points are flattened with the first axis varying slowest.
class Grid {
public:
    Grid() = default;
    explicit Grid(std::vector<Axis> axes);

    std::size_t dims() const noexcept { return axes_.size(); }
    const std::vector<Axis>& axes() const noexcept { return axes_; }
    const Axis& axis(std::size_t i) const { return axes_.at(i); }

    /// Position of a named axis; throws MismatchError if absent.
    std::size_t axis_index(const std::string& name) const;
    bool has_axis(const std::string& name) const;

    std::size_t point_count() const noexcept { return point_count_; }

    /// Coordinates of flattened point `flat`.
    std::vector<double> point(std::size_t flat) const;

    bool operator==(const Grid&) const = default;

private:
    std::vector<Axis> axes_;
    std::size_t point_count_ = 0;
};

struct AxisBasis {
    std::string name;
    KnotVector knots;

    bool operator==(const AxisBasis&) const = default;
};

/// Tensor-product B-spline basis; coefficients flatten first axis slowest.
class BasisSpec {
public:
    BasisSpec() = default;
    explicit BasisSpec(std::vector<AxisBasis> axes);

    std::size_t dims() const noexcept { return axes_.size(); }
    const std::vector<AxisBasis>& axes() const noexcept { return axes_; }

    /// m = product of per-axis basis counts.
    Eigen::Index basis_count() const noexcept;

    bool operator==(const BasisSpec&) const = default;

private:
    std::vector<AxisBasis> axes_;
};

/// Per-axis derivative orders, in the axis order of the BasisSpec.
using DerivIndex = std::vector<int>;

/// Per-axis overrides applied on top of the default basis rules.
struct BasisOptions {
    std::map<std::string, int> knots;   ///< distinct knot count per axis
    std::map<std::string, int> orders;  ///< spline order per axis
};

/// Default knot count for an axis with `n` samples: clamp(n / 4, 10, 60).
int default_knot_count(std::size_t n);

/// Default order for an axis whose highest required derivative is `max_derivative`.
int default_order(int max_derivative);

/// Uniform clamped basis covering each grid axis.
///
/// `max_derivative` gives the highest derivative the model needs per grid axis;
/// an explicit order below max_derivative + 1 is rejected.
BasisSpec make_default_basis(const Grid& grid, std::span<const int> max_derivative,
                             const BasisOptions& options = {});

/// n x m matrix whose row for grid point x is the Kronecker product of the
/// per-axis derivative rows. All matrices over the same spec and grid share one
/// sparsity pattern (structural zeros are kept).
SparseRowMatrix assemble_grid_matrix(const BasisSpec& spec, const Grid& grid, const DerivIndex& alpha);

/// Same row semantics as assemble_grid_matrix at arbitrary points.
SparseRowMatrix eval_at_points(const BasisSpec& spec, std::span<const std::vector<double>> points,
                               const DerivIndex& alpha);

}  // namespace snape
