#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "snape/errors.hpp"
#include "snape/splines.hpp"

namespace {

using snape::KnotVector;
using snape::make_uniform_knots;

TEST(KnotVector, FullKnotsAreClamped) {
    const KnotVector kv = make_uniform_knots(0.0, 1.0, 11, 4);
    ASSERT_EQ(kv.full_knots().size(), 11u + 2u * 3u);
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(kv.full_knots()[i], 0.0);
        EXPECT_EQ(kv.full_knots()[kv.full_knots().size() - 1 - i], 1.0);
    }
    EXPECT_EQ(kv.basis_count(), 13);
}

TEST(KnotVector, RejectsBadInput) {
    EXPECT_THROW(KnotVector({0.0}, 3), snape::ArgumentError);
    EXPECT_THROW(KnotVector({0.0, 0.5, 0.5, 1.0}, 3), snape::ArgumentError);
    EXPECT_THROW(KnotVector({0.0, 1.0}, 0), snape::ArgumentError);
    EXPECT_THROW(make_uniform_knots(1.0, 0.0, 5, 3), snape::ArgumentError);
}

TEST(KnotVector, BasisCountAcrossRandomSizes) {
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> kd(2, 40), od(1, 7);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = kd(rng);
        const int o = od(rng);
        const KnotVector kv = make_uniform_knots(-2.0, 3.0, k, o);
        EXPECT_EQ(kv.basis_count(), k + o - 2);
        const std::vector<double> pts{-2.0, 0.1, 3.0};
        EXPECT_EQ(snape::eval_basis(kv, pts, 0).cols(), k + o - 2);
    }
}

TEST(EvalBasis, OrderTwoHatsPeakAtTheirKnots) {
    const KnotVector kv = make_uniform_knots(0.0, 1.0, 5, 2);
    ASSERT_EQ(kv.basis_count(), 5);
    const std::vector<double> knots{0.0, 0.25, 0.5, 0.75, 1.0};
    const Eigen::MatrixXd v = snape::eval_basis(kv, knots, 0);
    EXPECT_TRUE(v.isApprox(Eigen::MatrixXd::Identity(5, 5), 0.0));
    const std::vector<double> mid{0.125};
    const Eigen::MatrixXd h = snape::eval_basis(kv, mid, 0);
    EXPECT_DOUBLE_EQ(h(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(h(0, 1), 0.5);
    EXPECT_EQ((h.array() != 0.0).count(), 2);
}

TEST(EvalBasis, HatAtInteriorKnotHasOneNonzero) {
    const KnotVector kv = make_uniform_knots(0.0, 1.0, 5, 2);
    const std::vector<double> p{0.25};
    const Eigen::MatrixXd v = snape::eval_basis(kv, p, 0);
    EXPECT_EQ((v.array() != 0.0).count(), 1);
    EXPECT_EQ(v(0, 1), 1.0);
}

TEST(EvalBasis, PartitionOfUnity) {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> kd(2, 30), od(1, 6);
    for (int trial = 0; trial < 50; ++trial) {
        const KnotVector kv = make_uniform_knots(-1.0, 2.5, kd(rng), od(rng));
        std::uniform_real_distribution<double> xd(-1.0, 2.5);
        std::vector<double> pts(100);
        for (double& x : pts) {
            x = xd(rng);
        }
        pts.push_back(-1.0);
        pts.push_back(2.5);
        const Eigen::MatrixXd v = snape::eval_basis(kv, pts, 0);
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
            EXPECT_NEAR(v.row(r).sum(), 1.0, 1e-12);
            EXPECT_GE(v.row(r).minCoeff(), -1e-15);
        }
        const Eigen::MatrixXd d1 = snape::eval_basis(kv, pts, std::min(1, kv.order() - 1));
        if (kv.order() > 1) {
            EXPECT_LT(d1.rowwise().sum().cwiseAbs().maxCoeff(), 1e-9);
        }
    }
}

TEST(EvalBasis, MatchesCoxDeBoorRecursion) {
    std::mt19937 rng(5);
    for (int order = 1; order <= 6; ++order) {
        for (int k : {2, 3, 7, 12}) {
            const KnotVector kv = make_uniform_knots(0.0, 2.0, k, order);
            const std::vector<double> t = oracle::clamped_uniform(0.0, 2.0, k, order);
            std::uniform_real_distribution<double> xd(0.0, 2.0);
            std::vector<double> pts{0.0, 2.0};
            for (int i = 0; i < 20; ++i) {
                pts.push_back(xd(rng));
            }
            for (int d = 0; d < order; ++d) {
                const Eigen::MatrixXd v = snape::eval_basis(kv, pts, d);
                for (std::size_t r = 0; r < pts.size(); ++r) {
                    for (int i = 0; i < kv.basis_count(); ++i) {
                        const double expected = oracle::bspline_derivative(t, i, order, d, pts[r]);
                        EXPECT_NEAR(v(static_cast<Eigen::Index>(r), i), expected,
                                    1e-10 * (1.0 + std::abs(expected)))
                            << "order " << order << " k " << k << " d " << d << " x " << pts[r];
                    }
                }
            }
        }
    }
}

TEST(EvalBasis, DerivativeMatchesFiniteDifference) {
    std::mt19937 rng(17);
    for (int order = 2; order <= 6; ++order) {
        const KnotVector kv = make_uniform_knots(0.0, 1.0, 9, order);
        const double spacing = 1.0 / 8.0;
        std::uniform_real_distribution<double> xd(0.0, 1.0);
        for (int trial = 0; trial < 30; ++trial) {
            double x = xd(rng);
            const double rel = std::fmod(x, spacing);
            if (rel < 0.05 * spacing || rel > 0.95 * spacing) {
                continue;  // keep the stencil inside one span
            }
            const double h = 1e-6;
            const std::vector<double> pts{x - h, x, x + h};
            for (int d = 1; d < order; ++d) {
                const Eigen::MatrixXd lower = snape::eval_basis(kv, pts, d - 1);
                const Eigen::MatrixXd v = snape::eval_basis(kv, pts, d);
                const Eigen::RowVectorXd fd = (lower.row(2) - lower.row(0)) / (2 * h);
                const double scale = std::max(1.0, v.row(1).cwiseAbs().maxCoeff());
                EXPECT_LT((fd - v.row(1)).cwiseAbs().maxCoeff() / scale, 1e-5)
                    << "order " << order << " d " << d << " x " << x;
            }
        }
    }
}

TEST(EvalBasis, RightLimitAtInteriorKnotAndLeftLimitAtEnd) {
    // Order 2: the first derivative jumps at every knot.
    const KnotVector kv = make_uniform_knots(0.0, 1.0, 3, 2);
    const std::vector<double> at{0.5, 1.0};
    const Eigen::MatrixXd d = snape::eval_basis(kv, at, 1);
    // right of 0.5, hat 1 descends with slope -2 and hat 2 rises with slope 2
    EXPECT_DOUBLE_EQ(d(0, 1), -2.0);
    EXPECT_DOUBLE_EQ(d(0, 2), 2.0);
    // at b the last span [0.5, 1] is used
    EXPECT_DOUBLE_EQ(d(1, 1), -2.0);
    EXPECT_DOUBLE_EQ(d(1, 2), 2.0);
}

TEST(EvalBasis, RejectsOutOfDomainAndTooHighDerivative) {
    const KnotVector kv = make_uniform_knots(0.0, 1.0, 4, 3);
    const std::vector<double> outside{1.5};
    const std::vector<double> inside{0.5};
    EXPECT_THROW(snape::eval_basis(kv, outside, 0), snape::DomainError);
    EXPECT_THROW(snape::eval_basis(kv, inside, 3), snape::DerivativeOrderError);
    EXPECT_THROW(snape::eval_local(kv, -0.1, 0), snape::DomainError);
}

TEST(EvalLocal, AgreesWithDenseRows) {
    const KnotVector kv = make_uniform_knots(0.0, 3.0, 7, 4);
    for (double x : {0.0, 0.3, 1.0, 2.2, 3.0}) {
        const std::vector<double> p{x};
        const Eigen::MatrixXd dense = snape::eval_basis(kv, p, 1);
        const snape::LocalBasis local = snape::eval_local(kv, x, 1);
        ASSERT_EQ(local.values.size(), 4u);
        for (std::size_t i = 0; i < local.values.size(); ++i) {
            EXPECT_DOUBLE_EQ(local.values[i], dense(0, local.first + static_cast<int>(i)));
        }
    }
}

}  // namespace
