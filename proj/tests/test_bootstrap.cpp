#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "snape/bootstrap.hpp"
#include "snape/errors.hpp"

namespace {

using snape::Axis;
using snape::FieldData;
using snape::Grid;

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = i + 1 == n ? b : a + (b - a) * i / (n - 1);
    }
    return out;
}

FieldData heat_data(double k) {
    const Grid grid({Axis{"x", linspace(0, 1, 31)}, Axis{"t", linspace(0, 0.2, 31)}});
    std::vector<double> v(grid.point_count());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto p = grid.point(i);
        v[i] = std::exp(-k * std::numbers::pi * std::numbers::pi * p[1]) * std::sin(std::numbers::pi * p[0]);
    }
    return FieldData::single(grid, "u", std::move(v));
}

const snape::ModelSpec& heat_model() {
    static const snape::ModelSpec m =
        snape::parse_model("axes x, t;\nfield u;\nanchor D(u,t,1);\nterm k: -D(u,x,2);\n");
    return m;
}

TEST(AddNoise, ScalesWithPopulationSd) {
    const Grid grid({Axis{"i", linspace(0, 1, 200000)}});
    std::vector<double> clean(grid.point_count());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        clean[i] = i % 2 == 0 ? 1.0 : -1.0;  // population sd exactly 1
    }
    const FieldData d = FieldData::single(grid, "u", clean);
    const FieldData noisy = snape::add_noise(d, {0.25, 42});
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double e = noisy.values[0][i] - clean[i];
        s += e;
        s2 += e * e;
    }
    const double n = static_cast<double>(clean.size());
    EXPECT_NEAR(s / n, 0.0, 5.0 * 0.25 / std::sqrt(n));
    EXPECT_NEAR(std::sqrt(s2 / n), 0.25, 0.005);
}

TEST(AddNoise, DeterministicPerSeed) {
    const FieldData d = heat_data(0.5);
    EXPECT_EQ(snape::add_noise(d, {0.1, 7}), snape::add_noise(d, {0.1, 7}));
    EXPECT_NE(snape::add_noise(d, {0.1, 7}), snape::add_noise(d, {0.1, 8}));
    EXPECT_EQ(snape::add_noise(d, {0.0, 7}), d);
    EXPECT_THROW(snape::add_noise(d, {-0.1, 7}), snape::ArgumentError);
}

TEST(Summarize, MeanAndSampleCoefficientOfVariation) {
    const snape::ReplicateSummary s =
        snape::summarize({Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 2), Eigen::Vector2d(5, 2)});
    EXPECT_DOUBLE_EQ(s.mean[0], 3.0);
    EXPECT_DOUBLE_EQ(s.mean[1], 2.0);
    EXPECT_NEAR(s.cov_percent[0], 200.0 / 3.0, 1e-12);
    EXPECT_EQ(s.cov_percent[1], 0.0);
}

TEST(Summarize, SingleReplicateAndErrors) {
    const snape::ReplicateSummary s = snape::summarize({Eigen::Vector2d(-4, 2)});
    EXPECT_EQ(s.mean[0], -4.0);
    EXPECT_EQ(s.cov_percent[0], 0.0);
    EXPECT_THROW(snape::summarize({}), snape::ArgumentError);
    EXPECT_THROW(snape::summarize({Eigen::Vector2d(1, 2), Eigen::Vector3d(1, 2, 3)}), snape::ArgumentError);
}

TEST(Summarize, IsInvariantUnderReordering) {
    std::vector<Eigen::VectorXd> a{Eigen::Vector2d(1.5, -2), Eigen::Vector2d(0.5, -1), Eigen::Vector2d(2.0, -4)};
    std::vector<Eigen::VectorXd> b{a[2], a[0], a[1]};
    const auto sa = snape::summarize(a);
    const auto sb = snape::summarize(b);
    EXPECT_NEAR(sa.mean[0], sb.mean[0], 1e-15);
    EXPECT_NEAR(sa.cov_percent[1], sb.cov_percent[1], 1e-12);
}

TEST(BootstrapMode, ParsesNames) {
    EXPECT_EQ(snape::parse_bootstrap_mode("fresh"), snape::BootstrapMode::FreshNoise);
    EXPECT_EQ(snape::parse_bootstrap_mode("residual"), snape::BootstrapMode::Residual);
    EXPECT_EQ(snape::to_string(snape::BootstrapMode::Residual), "residual");
    EXPECT_THROW(snape::parse_bootstrap_mode("jackknife"), snape::ArgumentError);
}

class HeatBootstrap : public ::testing::Test {
protected:
    FieldData data = heat_data(0.5);
    snape::BasisSpec spec = snape::make_default_basis(data.grid, heat_model().max_derivative({"x", "t"}));
    snape::AdmmConfig cfg = [] {
        snape::AdmmConfig c;
        c.rho = 0.01;
        c.mu = 100.0;
        return c;
    }();
};

TEST_F(HeatBootstrap, FreshNoiseRecoversCoefficient) {
    snape::BootstrapOptions opt;
    opt.replicates = 4;
    opt.noise = {0.01, 100};
    const snape::BootstrapResult r = snape::bootstrap(data, heat_model(), spec, cfg, opt);
    ASSERT_EQ(r.replicates.size(), 4u);
    EXPECT_EQ(r.seeds, (std::vector<std::uint64_t>{100, 101, 102, 103}));
    for (bool c : r.converged) {
        EXPECT_TRUE(c);
    }
    EXPECT_NEAR(r.theta_mean[0], 0.5, 0.025);
    EXPECT_GT(r.cov_percent[0], 0.0);
    // replicates differ because their noise differs
    EXPECT_NE(r.replicates[0][0], r.replicates[1][0]);
}

TEST_F(HeatBootstrap, ResultDoesNotDependOnWorkerCount) {
    snape::BootstrapOptions opt;
    opt.replicates = 3;
    opt.noise = {0.05, 9};
    const auto serial = snape::bootstrap(data, heat_model(), spec, cfg, opt);
    opt.jobs = 3;
    const auto parallel = snape::bootstrap(data, heat_model(), spec, cfg, opt);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(serial.replicates[i], parallel.replicates[i]);
    }
    EXPECT_EQ(serial.theta_mean, parallel.theta_mean);
}

TEST_F(HeatBootstrap, ReplicateMatchesSingleFitOnSameNoise) {
    snape::BootstrapOptions opt;
    opt.replicates = 2;
    opt.noise = {0.02, 50};
    const auto r = snape::bootstrap(data, heat_model(), spec, cfg, opt);
    const FieldData noisy = snape::add_noise(data, {0.02, 51});
    const auto& f = noisy.field("u");
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    const auto single = snape::fit(y, heat_model(), spec, data.grid, {}, cfg);
    EXPECT_EQ(r.replicates[1][0], single.theta[0]);
}

TEST_F(HeatBootstrap, ResidualModeRuns) {
    snape::BootstrapOptions opt;
    opt.mode = snape::BootstrapMode::Residual;
    opt.replicates = 3;
    opt.noise = {0.0, 5};
    const FieldData noisy = snape::add_noise(data, {0.02, 1});
    const auto r = snape::bootstrap(noisy, heat_model(), spec, cfg, opt);
    EXPECT_EQ(r.mode, snape::BootstrapMode::Residual);
    EXPECT_NEAR(r.theta_mean[0], 0.5, 0.05);
}

TEST_F(HeatBootstrap, MajorityFailureThrows) {
    cfg.max_iter = 1;
    snape::BootstrapOptions opt;
    opt.replicates = 3;
    opt.noise = {0.01, 0};
    EXPECT_THROW(snape::bootstrap(data, heat_model(), spec, cfg, opt), snape::BootstrapError);
}

}  // namespace
