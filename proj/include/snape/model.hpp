#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "snape/expression.hpp"
#include "snape/field_data.hpp"
#include "snape/tensor_basis.hpp"

namespace snape {

/// One multiplicative factor of a term: the target field (possibly
/// differentiated) or a measured exogenous field.
struct Factor {
    bool exogenous = false;
    std::string name;             ///< target or exogenous field name
    std::map<std::string, int> derivative;  ///< axis name -> order; empty for plain values

    int total_order() const;
    bool operator==(const Factor&) const = default;
};

/// coefficient * product(factors). Free terms carry a coefficient name and
/// contribute theta * fixed_value * product, where fixed_value is +1 or -1.
struct Term {
    std::optional<std::string> free_name;
    double fixed_value = 1.0;
    std::vector<Factor> factors;
    /// Index of the factor that keeps beta; the others are frozen or measured.
    std::size_t linear_factor = 0;

    bool is_free() const noexcept { return free_name.has_value(); }
};

/// Parsed differential equation: anchor + sum_j theta_j term_j + fixed terms = forcing.
struct ModelSpec {
    std::vector<std::string> axes;
    std::string target;
    std::vector<std::string> exogenous;
    Term anchor;
    std::vector<Term> fixed_terms;
    std::vector<Term> free_terms;  ///< declaration order = theta order
    Expression forcing;
    std::string source;

    std::vector<std::string> coefficient_names() const;
    /// Highest derivative order needed on each axis, in `axis_order`.
    std::vector<int> max_derivative(const std::vector<std::string>& axis_order) const;
    bool is_nonlinear() const;
};

/// Parses the model-spec grammar. Throws ParseError with line/column.
ModelSpec parse_model(std::string_view text);

/// A_fixed beta + sum_j theta_j A_j beta - f is the discretized residual F.
struct ConstraintMatrices {
    SparseRowMatrix basis;              ///< B (alpha = 0)
    SparseRowMatrix fixed;              ///< anchor plus fixed-coefficient terms
    std::vector<SparseRowMatrix> free;  ///< one per free coefficient
    Eigen::VectorXd forcing;            ///< f at grid points

    Eigen::Index rows() const noexcept { return basis.rows(); }
    Eigen::Index cols() const noexcept { return basis.cols(); }
};

/// Exogenous field name -> data on the fit grid.
using ExogenousFields = std::map<std::string, FieldData>;

/// Caches the derivative matrices of one (model, basis, grid) so that the
/// frozen-factor terms can be rebuilt cheaply for every new beta.
class ConstraintBuilder {
public:
    ConstraintBuilder(const ModelSpec& model, const BasisSpec& spec, const Grid& grid,
                      const ExogenousFields& exogenous = {});

    /// Throws ArgumentError if beta has the wrong length.
    ConstraintMatrices build(const Eigen::VectorXd& beta) const;

    const SparseRowMatrix& basis() const { return derivs_.at(DerivIndex(grid_.dims(), 0)); }
    const SparseRowMatrix& derivative(const DerivIndex& alpha) const { return derivs_.at(alpha); }
    const Eigen::VectorXd& forcing() const noexcept { return forcing_; }
    const Grid& grid() const noexcept { return grid_; }
    const BasisSpec& spec() const noexcept { return spec_; }
    const ModelSpec& model() const noexcept { return model_; }
    bool nonlinear() const noexcept { return nonlinear_; }

    /// Derivative index of a factor in grid axis order.
    DerivIndex index_of(const Factor& f) const;

private:
    SparseRowMatrix term_matrix(const Term& term, const Eigen::VectorXd& beta) const;

    ModelSpec model_;
    BasisSpec spec_;
    Grid grid_;
    std::map<DerivIndex, SparseRowMatrix> derivs_;
    std::map<std::string, Eigen::VectorXd> exogenous_;
    Eigen::VectorXd forcing_;
    bool nonlinear_ = false;
};

ConstraintMatrices build_constraint_matrices(const ModelSpec& model, const BasisSpec& spec, const Grid& grid,
                                             const ExogenousFields& exogenous, const Eigen::VectorXd& beta);

/// F = A_fixed beta + sum_j theta_j A_j beta - f.
Eigen::VectorXd constraint_residual(const ConstraintMatrices& m, const Eigen::VectorXd& beta,
                                    const Eigen::VectorXd& theta);

}  // namespace snape
