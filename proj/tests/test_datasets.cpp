#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "snape/datasets.hpp"
#include "snape/errors.hpp"

namespace {

using snape::Axis;
using snape::FieldData;
using snape::FormatError;
using snape::FormatErrorKind;
using snape::Grid;

std::string to_bytes(const FieldData& d) {
    std::ostringstream out(std::ios::binary);
    snape::write_grid(d, out);
    return out.str();
}

FieldData from_bytes(const std::string& s) {
    std::istringstream in(s, std::ios::binary);
    return snape::read_grid(in);
}

FormatErrorKind error_kind(const std::string& s, std::size_t* line = nullptr) {
    try {
        from_bytes(s);
    } catch (const FormatError& e) {
        if (line != nullptr) {
            *line = e.line();
        }
        return e.kind();
    }
    ADD_FAILURE() << "no FormatError for input";
    return FormatErrorKind::Io;
}

std::string payload(std::initializer_list<double> values) {
    std::string out;
    for (double v : values) {
        char b[8];
        std::memcpy(b, &v, 8);
        out.append(b, 8);
    }
    return out;
}

TEST(Grd, PayloadIsLittleEndianFloat64) {
    const FieldData d = FieldData::single(Grid({Axis{"t", {0.0, 1.0}}}), "u", {1.0, -2.0});
    const std::string bytes = to_bytes(d);
    const std::string head = "SNAPEGRID 1\naxes 1\naxis t 2 uniform 0 1\nfields 1 u\ndata f64le rowmajor\n";
    ASSERT_EQ(bytes.substr(0, head.size()), head);
    const std::string body = bytes.substr(head.size());
    ASSERT_EQ(body.size(), 16u);
    const unsigned char one[8] = {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xF0, 0x3F};
    EXPECT_EQ(std::memcmp(body.data(), one, 8), 0);
    const unsigned char minus_two[8] = {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xC0};
    EXPECT_EQ(std::memcmp(body.data() + 8, minus_two, 8), 0);
}

TEST(Grd, RoundTripIsBitExact) {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Axis> axes;
        const int dims = 1 + trial % 3;
        for (int a = 0; a < dims; ++a) {
            const std::size_t n = 2 + static_cast<std::size_t>(rng() % 6);
            std::vector<double> c(n);
            if (trial % 2 == 0) {
                c = snape::uniform_coordinates(-1.0 / 3.0, 2.0 + a, n);
            } else {
                double x = nd(rng);
                for (double& v : c) {
                    v = x;
                    x += 0.01 + std::abs(nd(rng));
                }
            }
            axes.push_back(Axis{std::string(1, static_cast<char>('a' + a)), c});
        }
        FieldData d;
        d.grid = Grid(axes);
        d.names = {"u", "v"};
        for (int f = 0; f < 2; ++f) {
            std::vector<double> v(d.grid.point_count());
            for (double& x : v) {
                x = nd(rng) * 1e3;
            }
            d.values.push_back(v);
        }
        const FieldData back = from_bytes(to_bytes(d));
        EXPECT_EQ(back, d) << "trial " << trial;
    }
}

TEST(Grd, UniformAxesAreWrittenCompactly) {
    const auto c = snape::uniform_coordinates(0.0, 10.0, 101);
    EXPECT_EQ(c.back(), 10.0);
    const FieldData d = FieldData::single(Grid({Axis{"t", c}}), "u", std::vector<double>(101, 0.0));
    EXPECT_NE(to_bytes(d).find("axis t 101 uniform 0 10\n"), std::string::npos);
}

TEST(Grd, MalformedInputsHaveDistinctKinds) {
    const std::string ok_head = "SNAPEGRID 1\naxes 1\naxis t 2 explicit 0 1\nfields 1 u\ndata f64le rowmajor\n";
    EXPECT_NO_THROW(from_bytes(ok_head + payload({1.0, 2.0})));
    EXPECT_EQ(error_kind("SNAPEGRID 2\n"), FormatErrorKind::BadMagic);
    EXPECT_EQ(error_kind("NOTAGRID\n"), FormatErrorKind::BadMagic);
    EXPECT_EQ(error_kind(ok_head + payload({1.0})), FormatErrorKind::Truncated);
    EXPECT_EQ(error_kind(ok_head + payload({1.0, 2.0, 3.0})), FormatErrorKind::SizeMismatch);
    EXPECT_EQ(error_kind("SNAPEGRID 1\naxes 1\naxis t 3 explicit 0 2 1\nfields 1 u\ndata f64le rowmajor\n" +
                         payload({1, 2, 3})),
              FormatErrorKind::NonMonotoneAxis);
    EXPECT_EQ(error_kind("SNAPEGRID 1\naxes 1\naxis t 2 uniform 1 0\nfields 1 u\ndata f64le rowmajor\n" +
                         payload({1, 2})),
              FormatErrorKind::NonMonotoneAxis);
    EXPECT_EQ(error_kind(ok_head + payload({1.0, std::nan("")})), FormatErrorKind::NonFinite);
    EXPECT_EQ(error_kind("SNAPEGRID 1\naxes 1\n"), FormatErrorKind::Truncated);
}

TEST(Grd, ExtraAxisLineIsReportedWithItsLine) {
    const std::string s =
        "SNAPEGRID 1\naxes 2\naxis x 2 uniform 0 1\naxis y 2 uniform 0 1\naxis t 2 uniform 0 1\nfields 1 u\n"
        "data f64le rowmajor\n";
    std::size_t line = 0;
    EXPECT_EQ(error_kind(s, &line), FormatErrorKind::BadHeader);
    EXPECT_EQ(line, 5u);
}

TEST(Grd, RefusesToWriteNonFinite) {
    const FieldData d = FieldData::single(Grid({Axis{"t", {0.0, 1.0}}}), "u", {1.0, INFINITY});
    std::ostringstream out;
    try {
        snape::write_grid(d, out);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.kind(), FormatErrorKind::NonFinite);
    }
}

TEST(Grd, MissingFileIsIoError) {
    try {
        snape::read_grid(std::filesystem::path("/nonexistent/none.grd"));
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.kind(), FormatErrorKind::Io);
    }
}

TEST(Subsample, KeepsEveryStepThPoint) {
    const Grid g({Axis{"x", {0, 1, 2, 3, 4}}, Axis{"t", {0, 1, 2}}});
    std::vector<double> v(15);
    for (std::size_t i = 0; i < 15; ++i) {
        v[i] = static_cast<double>(i);
    }
    const FieldData s = snape::subsample(FieldData::single(g, "u", v), {{"x", 2}});
    EXPECT_EQ(s.grid.axis(0).coords, (std::vector<double>{0, 2, 4}));
    EXPECT_EQ(s.values[0], (std::vector<double>{0, 1, 2, 6, 7, 8, 12, 13, 14}));
    EXPECT_THROW(snape::subsample(FieldData::single(g, "u", v), {{"y", 2}}), snape::ArgumentError);
    EXPECT_THROW(snape::subsample(FieldData::single(g, "u", v), {{"t", 3}}), snape::ArgumentError);
}

class TempDir : public ::testing::Test {
protected:
    std::filesystem::path dir;
    void SetUp() override {
        dir = std::filesystem::temp_directory_path() /
              ("snape_ds_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        std::filesystem::create_directories(dir);
    }
    void TearDown() override { std::filesystem::remove_all(dir); }
    std::filesystem::path write(const std::string& name, const std::string& text) const {
        const auto p = dir / name;
        std::ofstream(p) << text;
        return p;
    }
};

TEST_F(TempDir, CsvGridImport) {
    const auto p = write("g.csv", "x,t,u\n0,0,1\n0,1,2\n1,0,3\n1,1,4\n2,0,5\n2,1,6\n");
    const FieldData d = snape::read_csv_grid(p);
    EXPECT_EQ(d.grid.axis(0).coords, (std::vector<double>{0, 1, 2}));
    EXPECT_EQ(d.grid.axis(1).coords, (std::vector<double>{0, 1}));
    EXPECT_EQ(d.values[0], (std::vector<double>{1, 2, 3, 4, 5, 6}));

    const auto shuffled = write("s.csv", "x,t,u\n2,1,6\n0,0,1\n1,1,4\n0,1,2\n2,0,5\n1,0,3\n");
    EXPECT_EQ(snape::read_csv_grid(shuffled), d);

    const auto missing = write("m.csv", "x,t,u\n0,0,1\n0,1,2\n1,0,3\n");
    EXPECT_THROW(snape::read_csv_grid(missing), FormatError);
}

TEST_F(TempDir, CsvPoints) {
    const auto p = write("p.csv", "x,t\n0.5,1\n-1,2.25\n");
    const snape::PointTable t = snape::read_csv_points(p);
    EXPECT_EQ(t.names, (std::vector<std::string>{"x", "t"}));
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[1], (std::vector<double>{-1, 2.25}));
}

snape::ResultDocument sample_document() {
    snape::ResultDocument doc;
    doc.kind = "bootstrap";
    doc.model_source = "axes x, t;\nfield u;\n";
    doc.theta_names = {"th1", "th2"};
    doc.theta_mean = {1.01, -0.10};
    doc.cov_percent = {0.1234567890123, 5.5};
    doc.replicates = {{1.0, -0.1}, {1.02, -0.1 + 1e-17}};
    doc.converged_flags = {true, true};
    doc.seeds = {7, 8};
    doc.config = {{"rho", 1.0}, {"mu", 1.0}};
    return doc;
}

TEST(ResultDocument, RoundTripsExactly) {
    const snape::ResultDocument doc = sample_document();
    const snape::ResultDocument back = snape::parse_result(snape::serialize_result(doc));
    EXPECT_EQ(back, doc);
    EXPECT_EQ(snape::serialize_result(back), snape::serialize_result(doc));
}

TEST(ResultDocument, RandomDoublesRoundTrip) {
    std::mt19937_64 rng(5);
    snape::ResultDocument doc = sample_document();
    for (int trial = 0; trial < 200; ++trial) {
        double v;
        do {
            const std::uint64_t bits = rng();
            std::memcpy(&v, &bits, 8);
        } while (!std::isfinite(v));
        doc.theta_mean = {v, -v};
        const auto back = snape::parse_result(snape::serialize_result(doc));
        EXPECT_EQ(std::memcmp(&back.theta_mean[0], &v, 8), 0);
    }
}

TEST(ResultDocument, FitKindCarriesBasisAndBeta) {
    snape::ResultDocument doc = sample_document();
    doc.kind = "fit";
    doc.replicates = {{1.01, -0.1}};
    doc.converged_flags = {true};
    doc.seeds = {};
    doc.beta = {0.5, 0.25, -1.0};
    doc.basis = {snape::StoredAxisBasis{"x", 3, {0.0, 0.5, 1.0}}};
    doc.iterations = 12;
    doc.data_misfit = 0.001;
    doc.final_primal_residual = 1e-7;
    const auto back = snape::parse_result(snape::serialize_result(doc));
    EXPECT_EQ(back, doc);
    const snape::BasisSpec spec = snape::restore_basis(back.basis);
    EXPECT_EQ(spec.basis_count(), 4);
}

TEST(ResultDocument, MissingKeyIsNamed) {
    nlohmann::json j = nlohmann::json::parse(snape::serialize_result(sample_document()));
    j.erase("theta_mean");
    try {
        snape::parse_result(j.dump());
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.kind(), FormatErrorKind::MissingKey);
        EXPECT_NE(std::string(e.what()).find("theta_mean"), std::string::npos);
    }
}

TEST(ResultDocument, VersionMismatchAndGarbage) {
    nlohmann::json j = nlohmann::json::parse(snape::serialize_result(sample_document()));
    j["format_version"] = 99;
    try {
        snape::parse_result(j.dump());
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.kind(), FormatErrorKind::VersionMismatch);
    }
    EXPECT_THROW(snape::parse_result("{not json"), FormatError);
    EXPECT_THROW(snape::parse_result("[1,2]"), FormatError);
}

TEST(ResultDocument, NonFiniteBecomesNull) {
    snape::ResultDocument doc = sample_document();
    doc.replicates[1][0] = std::nan("");
    const std::string text = snape::serialize_result(doc);
    EXPECT_NE(text.find("null"), std::string::npos);
    const auto back = snape::parse_result(text);
    EXPECT_TRUE(std::isnan(back.replicates[1][0]));
}

}  // namespace
