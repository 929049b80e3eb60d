#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/CholmodSupport>
#include <Eigen/Sparse>

#include "snape/tensor_basis.hpp"

namespace snape::detail {

/// True when both matrices are compressed and store identical index arrays.
bool same_pattern(const SparseRowMatrix& a, const SparseRowMatrix& b);

/// Banded storage of the lower triangle of A^T A for matrices that carry the
/// canonical tensor-product row pattern produced by assemble_grid_matrix.
///
/// Row j of the band holds the entries (j, j + offset) for every per-axis
/// offset in (-(o_a - 1) .. o_a - 1), so a row of A contributes to fixed slots
/// that depend only on the local positions of its entries.
class TensorGram {
public:
    explicit TensorGram(const BasisSpec& spec);

    std::size_t band_size() const noexcept { return band_width_ * static_cast<std::size_t>(m_); }

    /// band += weight * lower(A^T A). A must have the canonical pattern.
    void accumulate(const SparseRowMatrix& a, double weight, std::vector<double>& band) const;

    /// Lower-triangular column-major pattern of the Gram and, per stored
    /// entry, its position in the band.
    const Eigen::SparseMatrix<double>& pattern() const noexcept { return pattern_; }
    const std::vector<std::size_t>& band_index() const noexcept { return band_index_; }
    const std::vector<std::size_t>& diagonal_entries() const noexcept { return diagonal_; }

private:
    Eigen::Index m_ = 0;
    std::size_t row_nnz_ = 0;
    std::size_t band_width_ = 0;
    std::vector<std::ptrdiff_t> entry_offset_;  ///< column offset of local entry e from the row's first column
    std::vector<std::size_t> pair_slot_;        ///< slot of pair (e, f <= e), packed lower-triangular
    Eigen::SparseMatrix<double> pattern_;
    std::vector<std::size_t> band_index_;
    std::vector<std::size_t> diagonal_;
};

/// Repeated solves of (B^T B + rho C^T C + lambda I) beta = rhs for a fixed
/// basis B and a constraint operator C whose values change between calls.
///
/// The Cholesky factor of the most recent constraint operator is kept and
/// used as a preconditioner for conjugate gradients on the next system; the
/// matrix is refactorized when the iteration stalls. After a stall, the next
/// `backoff` calls factorize directly; `backoff` doubles per consecutive stall
/// up to max_backoff and resets on success. Returned solutions satisfy
/// |step| <= refine_tolerance * |beta| at the last CG step.
class NormalSolver {
public:
    NormalSolver(const SparseRowMatrix& basis, const BasisSpec& spec, double rho, double ridge);

    /// rho = 0 variant: (B^T B + lambda I) beta = rhs.
    Eigen::VectorXd solve_data_only(const Eigen::VectorXd& rhs);

    Eigen::VectorXd solve(const SparseRowMatrix& c, const Eigen::VectorXd& rhs);

    /// Number of Cholesky factorizations performed so far.
    int factorizations() const noexcept { return factorizations_; }

    static constexpr double refine_tolerance = 1e-12;
    static constexpr int max_refine_steps = 6;
    static constexpr int max_backoff = 64;

private:
    std::optional<Eigen::VectorXd> refine(const SparseRowMatrix& c, const Eigen::VectorXd& rhs);
    void apply(const SparseRowMatrix& c, const Eigen::VectorXd& x, Eigen::VectorXd& out) const;

    Eigen::VectorXd factor_and_solve(const std::vector<double>* constraint_band, const Eigen::VectorXd& rhs);
    Eigen::VectorXd generic_solve(const SparseRowMatrix& c, const Eigen::VectorXd& rhs);

    const SparseRowMatrix& basis_;
    double rho_;
    double ridge_;
    TensorGram gram_;
    std::vector<double> basis_band_;
    std::vector<double> constraint_band_;
    Eigen::SparseMatrix<double> matrix_;
    Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>, Eigen::Lower> llt_;
    bool analyzed_ = false;
    bool constraint_factor_ = false;  ///< llt_ holds a factor that includes a constraint operator
    int backoff_ = 1;
    int skip_ = 0;                    ///< remaining calls that factorize without trying refinement
    int factorizations_ = 0;
};

}  // namespace snape::detail
