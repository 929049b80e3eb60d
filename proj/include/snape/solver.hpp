#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "snape/model.hpp"
#include "snape/tensor_basis.hpp"

namespace snape {

/// Penalty, step and stopping parameters of the ADMM iteration.
struct AdmmConfig {
    double rho = 1.0;    ///< augmented-Lagrangian penalty
    double mu = 1.0;     ///< weight of the auxiliary variable, (1 / 2mu) |r|^2
    double gamma = 1.0;  ///< dual step
    /// Ridge added to the normal equations; unset means 1e-10 * trace(B^T B) / m.
    std::optional<double> ridge;
    std::vector<double> theta0;  ///< empty means all zeros
    double tol_theta = 1e-8;
    double tol_primal = 1e-6;
    int max_iter = 5000;
    bool trace = false;  ///< keep the per-iteration theta trace

    /// Throws ArgumentError on out-of-range values.
    void validate() const;
};

struct AdmmState {
    Eigen::VectorXd beta;
    Eigen::VectorXd theta;
    Eigen::VectorXd r;
    Eigen::VectorXd u;
    int iter = 0;
};

struct FitResult {
    std::vector<std::string> theta_names;
    Eigen::VectorXd theta;
    Eigen::VectorXd beta;
    int iterations = 0;
    std::vector<double> primal_history;       ///< |F + r|_2 / sqrt(n) per iteration
    std::vector<Eigen::VectorXd> theta_trace;  ///< per iteration, only when cfg.trace
    double data_misfit = 0.0;                 ///< |y - B beta|_2
    double ridge = 0.0;
    bool converged = false;
};

enum class ConvergenceStatus { Continue, Converged, Exhausted };

/// Quantities of the last completed iteration.
struct IterationRecord {
    Eigen::VectorXd previous_theta;
    Eigen::VectorXd theta;
    double primal_residual = 0.0;  ///< |F + r|_2 / sqrt(n)
    int iter = 0;
};

/// 1e-10 * trace(B^T B) / m.
double default_ridge(const SparseRowMatrix& basis);
double resolve_ridge(const AdmmConfig& cfg, const SparseRowMatrix& basis);

/// r = -(mu rho / (1 + mu rho)) (F + u), the exact minimizer over r.
Eigen::VectorXd r_step(const AdmmState& state, const ConstraintMatrices& m, const AdmmConfig& cfg);

/// Solves (B^T B + rho C^T C + lambda I) beta = B^T y + rho C^T (f - r - u),
/// C = A_fixed + sum_j theta_j A_j. Throws NumericalError if the factorization fails.
Eigen::VectorXd beta_step(const AdmmState& state, const ConstraintMatrices& m, const Eigen::VectorXd& y,
                          const AdmmConfig& cfg);

/// Exact scalar minimizer of the Lagrangian in theta_j, using the current
/// values of the other coefficients. Throws DegenerateTermError when A_j beta
/// vanishes.
double theta_step(const AdmmState& state, const ConstraintMatrices& m, std::size_t j);

/// u + gamma (F + r).
Eigen::VectorXd dual_step(const AdmmState& state, const ConstraintMatrices& m, const AdmmConfig& cfg);

ConvergenceStatus check_convergence(const IterationRecord& record, const AdmmConfig& cfg);

/// Scaled augmented Lagrangian (without the ridge term).
double augmented_lagrangian(const AdmmState& state, const ConstraintMatrices& m, const Eigen::VectorXd& y,
                            const AdmmConfig& cfg);

/// Runs the ADMM iteration to a fixed point. Non-convergence is reported in
/// the result, not thrown.
FitResult fit(const Eigen::VectorXd& y, const ModelSpec& model, const BasisSpec& spec, const Grid& grid,
              const ExogenousFields& exogenous, const AdmmConfig& cfg);

/// Same as above with a prebuilt constraint builder (reused across bootstrap replicates).
FitResult fit(const Eigen::VectorXd& y, const ConstraintBuilder& builder, const AdmmConfig& cfg);

}  // namespace snape
