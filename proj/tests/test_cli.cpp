#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "snape/cli.hpp"
#include "snape/datasets.hpp"

namespace {

namespace fs = std::filesystem;
using snape::Axis;
using snape::FieldData;
using snape::Grid;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "snape");
    std::ostringstream out, err;
    const int code = snape::cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("snape_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    std::string write_text(const std::string& name, const std::string& text) const {
        std::ofstream(dir / name) << text;
        return path(name);
    }

    // u = x^2 + t^2 + x t lies in the cubic spline space and solves u_xx + k u_tt = 0 with k = -1.
    std::string quadratic_fixture() const {
        const Grid g({Axis{"x", snape::uniform_coordinates(0, 1, 15)}, Axis{"t", snape::uniform_coordinates(0, 2, 12)}});
        std::vector<double> v(g.point_count());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto p = g.point(i);
            v[i] = p[0] * p[0] + p[1] * p[1] + p[0] * p[1];
        }
        snape::write_grid(FieldData::single(g, "u", v), fs::path(path("quad.grd")));
        write_text("quad.model", "axes x, t;\nfield u;\nanchor D(u,x,2);\nterm k: D(u,t,2);\n");
        return path("quad.grd");
    }
};

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, snape::cli::kUsage);
    EXPECT_EQ(run({"frobnicate"}).code, snape::cli::kUsage);
    EXPECT_EQ(run({"fit", "--data", "x.grd"}).code, snape::cli::kUsage);
    EXPECT_EQ(run({"--help"}).code, snape::cli::kSuccess);
}

TEST_F(Cli, MissingModelFileIsUsageErrorNamingTheFile) {
    const std::string data = quadratic_fixture();
    const Outcome r = run({"fit", "--data", data, "--model", path("missing.model"), "--out", path("r.json")});
    EXPECT_EQ(r.code, snape::cli::kUsage);
    EXPECT_NE(r.err.find("missing.model"), std::string::npos) << r.err;
}

TEST_F(Cli, DataAndModelErrorsExitTwo) {
    const std::string data = quadratic_fixture();
    const std::string bad_model = write_text("bad.model", "axes x, t;\nfield u;\nterm k: u;\n");
    EXPECT_EQ(run({"fit", "--data", data, "--model", bad_model, "--out", path("r.json")}).code,
              snape::cli::kDataError);
    const std::string garbage = write_text("garbage.grd", "SNAPEGRID 7\n");
    EXPECT_EQ(run({"fit", "--data", garbage, "--model", path("quad.model"), "--rho", "0.01", "--mu", "100", "--out", path("r.json")}).code,
              snape::cli::kDataError);
    EXPECT_EQ(run({"inspect", "--data", path("nothing.grd")}).code, snape::cli::kDataError);
    const std::string wrong_axes = write_text("wave.model", "axes x, y, t;\nfield u;\nanchor D(u,t,2);\nterm a: u;\n");
    EXPECT_EQ(run({"fit", "--data", data, "--model", wrong_axes, "--out", path("r.json")}).code,
              snape::cli::kDataError);
}

TEST_F(Cli, FitWritesResultAndTrace) {
    const std::string data = quadratic_fixture();
    const Outcome r = run({"fit", "--data", data, "--model", path("quad.model"), "--rho", "0.01", "--mu", "100", "--out", path("fit.json"), "--trace"});
    ASSERT_EQ(r.code, snape::cli::kSuccess) << r.err;
    const snape::ResultDocument doc = snape::read_result(fs::path(path("fit.json")));
    EXPECT_EQ(doc.kind, "fit");
    ASSERT_EQ(doc.theta_mean.size(), 1u);
    EXPECT_NEAR(doc.theta_mean[0], -1.0, 1e-6);
    EXPECT_EQ(doc.config.at("rho").get<double>(), 0.01);
    const std::string trace = slurp(path("fit.json.trace.csv"));
    EXPECT_EQ(trace.substr(0, trace.find('\n')), "iter,theta_1,primal_residual");
}

TEST_F(Cli, NonConvergenceExitsThreeAfterWriting) {
    const std::string data = quadratic_fixture();
    const Outcome r = run({"fit", "--data", data, "--model", path("quad.model"), "--rho", "0.01", "--mu", "100", "--out", path("fit.json"), "--max-iter",
                       "1", "--tol-primal", "0"});
    EXPECT_EQ(r.code, snape::cli::kNotConverged);
    EXPECT_TRUE(fs::exists(path("fit.json")));
}

TEST_F(Cli, ReconstructReproducesExactFixture) {
    const std::string data = quadratic_fixture();
    ASSERT_EQ(run({"fit", "--data", data, "--model", path("quad.model"), "--rho", "0.01", "--mu", "100", "--ridge", "0", "--tol-primal", "1e-12",
                   "--out", path("fit.json")})
                  .code,
              0);
    const Outcome r = run({"reconstruct", "--fit", path("fit.json"), "--data", data, "--out", path("rec.grd")});
    ASSERT_EQ(r.code, snape::cli::kSuccess) << r.err;
    const FieldData in = snape::read_grid(fs::path(data));
    const FieldData rec = snape::read_grid(fs::path(path("rec.grd")));
    ASSERT_EQ(rec.grid, in.grid);
    for (std::size_t i = 0; i < in.grid.point_count(); ++i) {
        EXPECT_NEAR(rec.field("u")[i], in.field("u")[i], 1e-8);
    }

    const std::string pts = write_text("pts.csv", "t,x\n0.5,0.25\n1.5,0.75\n");
    ASSERT_EQ(run({"reconstruct", "--fit", path("fit.json"), "--points", pts, "--out", path("p.grd")}).code, 0);
    const FieldData p = snape::read_grid(fs::path(path("p.grd")));
    EXPECT_EQ(p.grid.axis(0).name, "index");
    EXPECT_NEAR(p.field("u")[0], 0.0625 + 0.25 + 0.125, 1e-8);
    EXPECT_NEAR(p.field("u")[1], 0.5625 + 2.25 + 1.125, 1e-8);
    EXPECT_EQ(p.field("x")[1], 0.75);
}

TEST_F(Cli, SimulateAndInspect) {
    const Outcome s = run({"simulate", "burgers", "--nx", "32", "--nt", "11", "--t-end", "1", "--refine", "2", "--out",
                       path("b.grd")});
    ASSERT_EQ(s.code, snape::cli::kSuccess) << s.err;
    const Outcome i = run({"inspect", "--data", path("b.grd")});
    ASSERT_EQ(i.code, snape::cli::kSuccess);
    EXPECT_NE(i.out.find("points 352"), std::string::npos) << i.out;
    EXPECT_NE(i.out.find("x 32"), std::string::npos) << i.out;
    EXPECT_EQ(run({"simulate", "duffing", "--samples", "100", "--t1", "10", "--out", path("d.grd")}).code, 0);
    EXPECT_EQ(run({"simulate", "vanderpol", "--samples", "100", "--t1", "5", "--out", path("v.grd")}).code, 0);
    EXPECT_EQ(run({"simulate", "wave2d", "--nx", "6", "--ny", "5", "--nt", "4", "--t-end", "0.5", "--out",
                   path("w.grd")})
                  .code,
              0);
    EXPECT_EQ(run({"simulate", "wave2d", "--dt", "5", "--out", path("w2.grd")}).code, snape::cli::kUsage);
}

TEST_F(Cli, BootstrapIsByteReproducibleAndIndependentOfJobs) {
    const std::string data = quadratic_fixture();
    auto boot = [&](const std::string& out, const std::string& seed, const std::string& jobs) {
        return run({"bootstrap", "--data", data, "--model", path("quad.model"), "--rho", "0.01", "--mu", "100", "--replicates", "3", "--noise",
                    "0.01", "--mode", "fresh", "--seed", seed, "--jobs", jobs, "--out", path(out)});
    };
    ASSERT_EQ(boot("a.json", "4", "1").code, 0);
    ASSERT_EQ(boot("b.json", "4", "1").code, 0);
    ASSERT_EQ(boot("c.json", "4", "2").code, 0);
    ASSERT_EQ(boot("d.json", "5", "1").code, 0);
    EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
    EXPECT_EQ(slurp(path("a.json")), slurp(path("c.json")));
    EXPECT_NE(slurp(path("a.json")), slurp(path("d.json")));
    const snape::ResultDocument doc = snape::read_result(fs::path(path("a.json")));
    EXPECT_EQ(doc.seeds, (std::vector<std::uint64_t>{4, 5, 6}));
    EXPECT_EQ(doc.replicates.size(), 3u);
    EXPECT_EQ(doc.config.at("mode").get<std::string>(), "fresh");
}

TEST_F(Cli, BootstrapRejectsUnknownMode) {
    const std::string data = quadratic_fixture();
    EXPECT_EQ(run({"bootstrap", "--data", data, "--model", path("quad.model"), "--mode", "jackknife", "--out",
                   path("a.json")})
                  .code,
              snape::cli::kUsage);
}

}  // namespace
