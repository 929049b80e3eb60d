#include "snape/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SparseCholesky>

#include "snape/detail/normal_equations.hpp"
#include "snape/errors.hpp"

namespace snape {

namespace {

/// A_fixed beta - f and A_j beta at one beta.
struct Products {
    Eigen::VectorXd rest;
    std::vector<Eigen::VectorXd> free;
};

Products products(const ConstraintMatrices& m, const Eigen::VectorXd& beta) {
    Products p;
    p.rest = m.fixed * beta - m.forcing;
    p.free.reserve(m.free.size());
    for (const auto& a : m.free) {
        p.free.push_back(a * beta);
    }
    return p;
}

Eigen::VectorXd residual_from(const Products& p, const Eigen::VectorXd& theta) {
    Eigen::VectorXd f = p.rest;
    for (std::size_t j = 0; j < p.free.size(); ++j) {
        f += theta[static_cast<Eigen::Index>(j)] * p.free[j];
    }
    return f;
}

void check_shapes(const AdmmState& state, const ConstraintMatrices& m) {
    const Eigen::Index n = m.rows();
    if (state.beta.size() != m.cols() || state.theta.size() != static_cast<Eigen::Index>(m.free.size()) ||
        state.r.size() != n || state.u.size() != n) {
        throw ArgumentError("ADMM state does not match the constraint matrices");
    }
}

/// Solves the scalar problem for theta_j given the products at the current beta.
double theta_from(const Products& p, const Eigen::VectorXd& theta, const Eigen::VectorXd& r,
                  const Eigen::VectorXd& u, std::size_t j, const std::string& name) {
    const Eigen::VectorXd& a = p.free[j];
    const double aa = a.squaredNorm();
    const double scale = std::max(p.rest.squaredNorm(), std::numeric_limits<double>::min());
    if (!(aa > 1e-14 * scale)) {
        throw DegenerateTermError("term '" + name + "' evaluates to zero on the grid; its coefficient is undetermined");
    }
    Eigen::VectorXd rest = p.rest + r + u;
    for (std::size_t l = 0; l < p.free.size(); ++l) {
        if (l != j) {
            rest += theta[static_cast<Eigen::Index>(l)] * p.free[l];
        }
    }
    return -a.dot(rest) / aa;
}

/// C = A_fixed + sum_j theta_j A_j, combined value-wise when the patterns agree.
SparseRowMatrix combined_operator(const ConstraintMatrices& m, const Eigen::VectorXd& theta) {
    bool shared = true;
    for (const auto& a : m.free) {
        shared = shared && detail::same_pattern(a, m.fixed);
    }
    if (shared && m.fixed.isCompressed()) {
        SparseRowMatrix c = m.fixed;
        const Eigen::Index nnz = c.nonZeros();
        Eigen::Map<Eigen::VectorXd> cv(c.valuePtr(), nnz);
        for (std::size_t j = 0; j < m.free.size(); ++j) {
            cv += theta[static_cast<Eigen::Index>(j)] *
                  Eigen::Map<const Eigen::VectorXd>(m.free[j].valuePtr(), nnz);
        }
        return c;
    }
    SparseRowMatrix c = m.fixed;
    for (std::size_t j = 0; j < m.free.size(); ++j) {
        c += theta[static_cast<Eigen::Index>(j)] * m.free[j];
    }
    c.makeCompressed();
    return c;
}

bool finite(const AdmmState& s) {
    return s.beta.allFinite() && s.theta.allFinite() && s.r.allFinite() && s.u.allFinite();
}

}  // namespace

void AdmmConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(rho)) {
        throw ArgumentError("rho must be positive, got " + std::to_string(rho));
    }
    if (!positive(mu)) {
        throw ArgumentError("mu must be positive, got " + std::to_string(mu));
    }
    if (!positive(gamma) || gamma > 2.0) {
        throw ArgumentError("gamma must lie in (0, 2], got " + std::to_string(gamma));
    }
    if (ridge && (!std::isfinite(*ridge) || *ridge < 0.0)) {
        throw ArgumentError("ridge must be non-negative");
    }
    if (!(tol_theta >= 0.0) || !(tol_primal >= 0.0)) {
        throw ArgumentError("tolerances must be non-negative");
    }
    if (max_iter < 1) {
        throw ArgumentError("max_iter must be at least 1");
    }
    for (double t : theta0) {
        if (!std::isfinite(t)) {
            throw ArgumentError("theta0 must be finite");
        }
    }
}

double default_ridge(const SparseRowMatrix& basis) {
    if (basis.cols() == 0) {
        return 0.0;
    }
    const Eigen::Map<const Eigen::VectorXd> v(basis.valuePtr(), basis.nonZeros());
    return 1e-10 * v.squaredNorm() / static_cast<double>(basis.cols());
}

double resolve_ridge(const AdmmConfig& cfg, const SparseRowMatrix& basis) {
    return cfg.ridge ? *cfg.ridge : default_ridge(basis);
}

Eigen::VectorXd r_step(const AdmmState& state, const ConstraintMatrices& m, const AdmmConfig& cfg) {
    check_shapes(state, m);
    const double k = cfg.mu * cfg.rho / (1.0 + cfg.mu * cfg.rho);
    return -k * (constraint_residual(m, state.beta, state.theta) + state.u);
}

Eigen::VectorXd beta_step(const AdmmState& state, const ConstraintMatrices& m, const Eigen::VectorXd& y,
                          const AdmmConfig& cfg) {
    check_shapes(state, m);
    if (y.size() != m.rows()) {
        throw ArgumentError("data vector length does not match the grid");
    }
    const SparseRowMatrix c = combined_operator(m, state.theta);
    const Eigen::SparseMatrix<double> bt = m.basis.transpose();
    const Eigen::SparseMatrix<double> ct = c.transpose();
    Eigen::SparseMatrix<double> lhs = bt * Eigen::SparseMatrix<double>(m.basis);
    lhs += cfg.rho * (ct * Eigen::SparseMatrix<double>(c));
    Eigen::SparseMatrix<double> id(lhs.rows(), lhs.cols());
    id.setIdentity();
    lhs += resolve_ridge(cfg, m.basis) * id;
    const Eigen::VectorXd rhs = bt * y + cfg.rho * (ct * (m.forcing - state.r - state.u));
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(lhs);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("normal equations are not positive definite; increase the ridge");
    }
    Eigen::VectorXd beta = llt.solve(rhs);
    if (!beta.allFinite()) {
        throw NumericalError("normal-equation solve produced non-finite coefficients");
    }
    return beta;
}

double theta_step(const AdmmState& state, const ConstraintMatrices& m, std::size_t j) {
    check_shapes(state, m);
    if (j >= m.free.size()) {
        throw ArgumentError("coefficient index out of range");
    }
    return theta_from(products(m, state.beta), state.theta, state.r, state.u, j,
                      "#" + std::to_string(j + 1));
}

Eigen::VectorXd dual_step(const AdmmState& state, const ConstraintMatrices& m, const AdmmConfig& cfg) {
    check_shapes(state, m);
    return state.u + cfg.gamma * (constraint_residual(m, state.beta, state.theta) + state.r);
}

ConvergenceStatus check_convergence(const IterationRecord& record, const AdmmConfig& cfg) {
    if (record.theta.size() != record.previous_theta.size()) {
        throw ArgumentError("theta vectors differ in length");
    }
    double change = 0.0;
    for (Eigen::Index j = 0; j < record.theta.size(); ++j) {
        const double prev = record.previous_theta[j];
        change = std::max(change, std::abs(record.theta[j] - prev) / std::max(1.0, std::abs(prev)));
    }
    if (change < cfg.tol_theta && record.primal_residual < cfg.tol_primal) {
        return ConvergenceStatus::Converged;
    }
    if (record.iter >= cfg.max_iter) {
        return ConvergenceStatus::Exhausted;
    }
    return ConvergenceStatus::Continue;
}

double augmented_lagrangian(const AdmmState& state, const ConstraintMatrices& m, const Eigen::VectorXd& y,
                            const AdmmConfig& cfg) {
    check_shapes(state, m);
    const Eigen::VectorXd misfit = y - m.basis * state.beta;
    const Eigen::VectorXd f = constraint_residual(m, state.beta, state.theta);
    return 0.5 * misfit.squaredNorm() + state.r.squaredNorm() / (2.0 * cfg.mu) +
           0.5 * cfg.rho * (f + state.r + state.u).squaredNorm() - 0.5 * cfg.rho * state.u.squaredNorm();
}

FitResult fit(const Eigen::VectorXd& y, const ModelSpec& model, const BasisSpec& spec, const Grid& grid,
              const ExogenousFields& exogenous, const AdmmConfig& cfg) {
    const ConstraintBuilder builder(model, spec, grid, exogenous);
    return fit(y, builder, cfg);
}

FitResult fit(const Eigen::VectorXd& y, const ConstraintBuilder& builder, const AdmmConfig& cfg) {
    cfg.validate();
    const SparseRowMatrix& b = builder.basis();
    const Eigen::Index n = b.rows();
    const std::vector<std::string> names = builder.model().coefficient_names();
    const auto nfree = static_cast<Eigen::Index>(names.size());
    if (y.size() != n) {
        throw ArgumentError("data vector has " + std::to_string(y.size()) + " entries, grid has " +
                            std::to_string(n));
    }
    if (!y.allFinite()) {
        throw ArgumentError("data contains non-finite values");
    }
    if (!cfg.theta0.empty() && static_cast<Eigen::Index>(cfg.theta0.size()) != nfree) {
        throw ArgumentError("theta0 has " + std::to_string(cfg.theta0.size()) + " entries, model has " +
                            std::to_string(nfree) + " free coefficients");
    }

    FitResult out;
    out.theta_names = names;
    out.ridge = resolve_ridge(cfg, b);

    detail::NormalSolver solver(b, builder.spec(), cfg.rho, out.ridge);
    const Eigen::VectorXd bty = b.transpose() * y;
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    const double shrink = cfg.mu * cfg.rho / (1.0 + cfg.mu * cfg.rho);

    AdmmState s;
    s.beta = solver.solve_data_only(bty);
    s.theta = cfg.theta0.empty() ? Eigen::VectorXd::Zero(nfree)
                                 : Eigen::Map<const Eigen::VectorXd>(cfg.theta0.data(), nfree).eval();
    s.r = Eigen::VectorXd::Zero(n);
    s.u = Eigen::VectorXd::Zero(n);

    ConstraintMatrices mats = builder.build(s.beta);
    IterationRecord rec;
    for (int k = 1; k <= cfg.max_iter; ++k) {
        if (builder.nonlinear() && k > 1) {
            mats = builder.build(s.beta);
        }
        Products p = products(mats, s.beta);
        s.r = -shrink * (residual_from(p, s.theta) + s.u);

        const SparseRowMatrix c = combined_operator(mats, s.theta);
        const Eigen::VectorXd rhs = bty + cfg.rho * (c.transpose() * (mats.forcing - s.r - s.u));
        s.beta = solver.solve(c, rhs);

        p = products(mats, s.beta);
        rec.previous_theta = s.theta;
        for (std::size_t j = 0; j < mats.free.size(); ++j) {
            s.theta[static_cast<Eigen::Index>(j)] = theta_from(p, s.theta, s.r, s.u, j, names[j]);
        }
        const Eigen::VectorXd fr = residual_from(p, s.theta) + s.r;
        s.u += cfg.gamma * fr;
        s.iter = k;

        rec.theta = s.theta;
        rec.primal_residual = fr.norm() / sqrt_n;
        rec.iter = k;
        out.primal_history.push_back(rec.primal_residual);
        if (cfg.trace) {
            out.theta_trace.push_back(s.theta);
        }
        if (!finite(s) || !std::isfinite(rec.primal_residual)) {
            throw NumericalError("ADMM iterate became non-finite at iteration " + std::to_string(k));
        }
        const ConvergenceStatus status = check_convergence(rec, cfg);
        if (status != ConvergenceStatus::Continue) {
            out.converged = status == ConvergenceStatus::Converged;
            break;
        }
    }
    out.theta = s.theta;
    out.beta = s.beta;
    out.iterations = s.iter;
    out.data_misfit = (y - b * s.beta).norm();
    return out;
}

}  // namespace snape
