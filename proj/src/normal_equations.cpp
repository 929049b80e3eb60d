#include "snape/detail/normal_equations.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "snape/errors.hpp"

namespace snape::detail {

bool same_pattern(const SparseRowMatrix& a, const SparseRowMatrix& b) {
    if (!a.isCompressed() || !b.isCompressed() || a.rows() != b.rows() || a.cols() != b.cols() ||
        a.nonZeros() != b.nonZeros()) {
        return false;
    }
    const auto nnz = static_cast<std::size_t>(a.nonZeros());
    const auto outer = static_cast<std::size_t>(a.outerSize()) + 1;
    return std::memcmp(a.outerIndexPtr(), b.outerIndexPtr(), outer * sizeof(int)) == 0 &&
           std::memcmp(a.innerIndexPtr(), b.innerIndexPtr(), nnz * sizeof(int)) == 0;
}

TensorGram::TensorGram(const BasisSpec& spec) : m_(spec.basis_count()) {
    const std::size_t d = spec.dims();
    std::vector<int> order(d), count(d);
    std::vector<std::ptrdiff_t> stride(d), slot_stride(d);
    for (std::size_t a = 0; a < d; ++a) {
        order[a] = spec.axes()[a].knots.order();
        count[a] = spec.axes()[a].knots.basis_count();
    }
    std::ptrdiff_t s = 1;
    std::ptrdiff_t ss = 1;
    row_nnz_ = 1;
    for (std::size_t a = d; a-- > 0;) {
        stride[a] = s;
        slot_stride[a] = ss;
        s *= count[a];
        ss *= 2 * order[a] - 1;
        row_nnz_ *= static_cast<std::size_t>(order[a]);
    }
    band_width_ = static_cast<std::size_t>(ss);

    // local multi-index of each row entry, last axis fastest
    std::vector<std::vector<int>> local(row_nnz_, std::vector<int>(d, 0));
    for (std::size_t e = 1; e < row_nnz_; ++e) {
        local[e] = local[e - 1];
        for (std::size_t a = d; a-- > 0;) {
            if (++local[e][a] < order[a]) {
                break;
            }
            local[e][a] = 0;
        }
    }
    entry_offset_.resize(row_nnz_);
    for (std::size_t e = 0; e < row_nnz_; ++e) {
        std::ptrdiff_t off = 0;
        for (std::size_t a = 0; a < d; ++a) {
            off += local[e][a] * stride[a];
        }
        entry_offset_[e] = off;
    }
    pair_slot_.reserve(row_nnz_ * (row_nnz_ + 1) / 2);
    for (std::size_t e = 0; e < row_nnz_; ++e) {
        for (std::size_t f = 0; f <= e; ++f) {
            std::ptrdiff_t slot = 0;
            for (std::size_t a = 0; a < d; ++a) {
                slot += (local[f][a] - local[e][a] + order[a] - 1) * slot_stride[a];
            }
            pair_slot_.push_back(static_cast<std::size_t>(slot));
        }
    }

    // Lower-triangular pattern: slots whose offset is lexicographically <= 0.
    std::vector<Eigen::Triplet<double>> triplets;
    std::vector<int> jidx(d, 0);
    std::vector<int> delta(d);
    for (Eigen::Index j = 0; j < m_; ++j) {
        for (std::size_t slot = 0; slot < band_width_; ++slot) {
            std::size_t rem = slot;
            bool valid = true;
            int lex = 0;
            std::ptrdiff_t col = j;
            for (std::size_t a = d; a-- > 0;) {
                const auto width = static_cast<std::size_t>(2 * order[a] - 1);
                delta[a] = static_cast<int>(rem % width) - (order[a] - 1);
                rem /= width;
            }
            for (std::size_t a = 0; a < d; ++a) {
                if (lex == 0 && delta[a] != 0) {
                    lex = delta[a] < 0 ? -1 : 1;
                }
                const int target = jidx[a] + delta[a];
                if (target < 0 || target >= count[a]) {
                    valid = false;
                }
                col += delta[a] * stride[a];
            }
            if (!valid || lex > 0) {
                continue;
            }
            triplets.emplace_back(static_cast<int>(j), static_cast<int>(col),
                                  static_cast<double>(static_cast<std::size_t>(j) * band_width_ + slot));
        }
        for (std::size_t a = d; a-- > 0;) {
            if (++jidx[a] < count[a]) {
                break;
            }
            jidx[a] = 0;
        }
    }
    pattern_.resize(m_, m_);
    pattern_.setFromTriplets(triplets.begin(), triplets.end());
    pattern_.makeCompressed();
    band_index_.resize(static_cast<std::size_t>(pattern_.nonZeros()));
    for (Eigen::Index col = 0; col < pattern_.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(pattern_, col); it; ++it) {
            const auto k = static_cast<std::size_t>(&it.valueRef() - pattern_.valuePtr());
            band_index_[k] = static_cast<std::size_t>(it.value());
            if (it.row() == it.col()) {
                diagonal_.push_back(k);
            }
        }
    }
}

void TensorGram::accumulate(const SparseRowMatrix& a, double weight, std::vector<double>& band) const {
    const int* outer = a.outerIndexPtr();
    const int* inner = a.innerIndexPtr();
    const double* values = a.valuePtr();
    double* g = band.data();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const int start = outer[i];
        const double* v = values + start;
        const std::ptrdiff_t c0 = inner[start];
        const std::size_t* slot = pair_slot_.data();
        for (std::size_t e = 0; e < row_nnz_; ++e) {
            const double we = weight * v[e];
            double* row = g + static_cast<std::size_t>(c0 + entry_offset_[e]) * band_width_;
            for (std::size_t f = 0; f <= e; ++f) {
                row[*slot++] += we * v[f];
            }
        }
    }
}

NormalSolver::NormalSolver(const SparseRowMatrix& basis, const BasisSpec& spec, double rho, double ridge)
    : basis_(basis), rho_(rho), ridge_(ridge), gram_(spec) {
    if (basis.cols() != spec.basis_count()) {
        throw ArgumentError("basis matrix does not match the basis spec");
    }
    basis_band_.assign(gram_.band_size(), 0.0);
    constraint_band_.assign(gram_.band_size(), 0.0);
    gram_.accumulate(basis_, 1.0, basis_band_);
    matrix_ = gram_.pattern();
}

Eigen::VectorXd NormalSolver::factor_and_solve(const std::vector<double>* constraint_band,
                                               const Eigen::VectorXd& rhs) {
    double* values = matrix_.valuePtr();
    const auto& idx = gram_.band_index();
    if (constraint_band != nullptr) {
        for (std::size_t k = 0; k < idx.size(); ++k) {
            values[k] = basis_band_[idx[k]] + rho_ * (*constraint_band)[idx[k]];
        }
    } else {
        for (std::size_t k = 0; k < idx.size(); ++k) {
            values[k] = basis_band_[idx[k]];
        }
    }
    for (std::size_t k : gram_.diagonal_entries()) {
        values[k] += ridge_;
    }
    if (!analyzed_) {
        llt_.analyzePattern(matrix_);
        analyzed_ = true;
    }
    llt_.factorize(matrix_);
    ++factorizations_;
    constraint_factor_ = constraint_band != nullptr;
    if (llt_.info() != Eigen::Success) {
        throw NumericalError("normal equations are not positive definite; increase the ridge");
    }
    Eigen::VectorXd beta = llt_.solve(rhs);
    if (!beta.allFinite()) {
        throw NumericalError("normal-equation solve produced non-finite coefficients");
    }
    return beta;
}

Eigen::VectorXd NormalSolver::solve_data_only(const Eigen::VectorXd& rhs) {
    return factor_and_solve(nullptr, rhs);
}

Eigen::VectorXd NormalSolver::solve(const SparseRowMatrix& c, const Eigen::VectorXd& rhs) {
    if (!same_pattern(c, basis_)) {
        return generic_solve(c, rhs);
    }
    if (skip_ > 0) {
        --skip_;
    } else if (constraint_factor_) {
        if (auto beta = refine(c, rhs)) {
            backoff_ = 1;
            return *beta;
        }
        skip_ = backoff_;
        backoff_ = std::min(2 * backoff_, max_backoff);
    }
    std::fill(constraint_band_.begin(), constraint_band_.end(), 0.0);
    gram_.accumulate(c, 1.0, constraint_band_);
    return factor_and_solve(&constraint_band_, rhs);
}

void NormalSolver::apply(const SparseRowMatrix& c, const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    const Eigen::VectorXd bx = basis_ * x;
    const Eigen::VectorXd cx = c * x;
    out.noalias() = basis_.transpose() * bx;
    out.noalias() += rho_ * (c.transpose() * cx);
    out += ridge_ * x;
}

std::optional<Eigen::VectorXd> NormalSolver::refine(const SparseRowMatrix& c, const Eigen::VectorXd& rhs) {
    Eigen::VectorXd x = llt_.solve(rhs);
    Eigen::VectorXd ap(x.size());
    apply(c, x, ap);
    Eigen::VectorXd r = rhs - ap;
    Eigen::VectorXd z = llt_.solve(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    for (int step = 1; step <= max_refine_steps; ++step) {
        if (rz <= 0.0 || !std::isfinite(rz)) {
            return x.allFinite() && rz == 0.0 ? std::optional<Eigen::VectorXd>(x) : std::nullopt;
        }
        apply(c, p, ap);
        const double pap = p.dot(ap);
        if (!(pap > 0.0)) {
            return std::nullopt;
        }
        const double alpha = rz / pap;
        x += alpha * p;
        r -= alpha * ap;
        if (std::abs(alpha) * p.norm() <= refine_tolerance * x.norm()) {
            if (!x.allFinite()) {
                return std::nullopt;
            }
            return x;
        }
        z = llt_.solve(r);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    return std::nullopt;
}

Eigen::VectorXd NormalSolver::generic_solve(const SparseRowMatrix& c, const Eigen::VectorXd& rhs) {
    const Eigen::SparseMatrix<double> bt = basis_.transpose();
    const Eigen::SparseMatrix<double> ct = c.transpose();
    Eigen::SparseMatrix<double> m = bt * Eigen::SparseMatrix<double>(basis_);
    m += rho_ * (ct * Eigen::SparseMatrix<double>(c));
    Eigen::SparseMatrix<double> id(m.rows(), m.cols());
    id.setIdentity();
    m += ridge_ * id;
    Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>, Eigen::Lower> llt(m);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("normal equations are not positive definite; increase the ridge");
    }
    Eigen::VectorXd beta = llt.solve(rhs);
    if (!beta.allFinite()) {
        throw NumericalError("normal-equation solve produced non-finite coefficients");
    }
    return beta;
}

}  // namespace snape::detail
