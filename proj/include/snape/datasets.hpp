#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "snape/bootstrap.hpp"
#include "snape/field_data.hpp"
#include "snape/solver.hpp"
#include "snape/tensor_basis.hpp"

namespace snape {

enum class FormatErrorKind {
    Io,
    BadMagic,
    BadHeader,
    NonMonotoneAxis,
    Truncated,
    SizeMismatch,
    NonFinite,
    MissingKey,
    VersionMismatch,
    BadValue,
};

std::string to_string(FormatErrorKind kind);

/// Malformed or unreadable GRD, CSV or result file. `line()` is 0 when not
/// tied to a header line.
class FormatError : public std::runtime_error {
public:
    FormatError(FormatErrorKind kind, const std::string& message, std::size_t line = 0);

    FormatErrorKind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }

private:
    FormatErrorKind kind_;
    std::size_t line_;
};

/// Coordinates a + (b - a) i / (count - 1), with the last one exactly b.
std::vector<double> uniform_coordinates(double a, double b, std::size_t count);

void write_grid(const FieldData& data, std::ostream& out);
void write_grid(const FieldData& data, const std::filesystem::path& path);
FieldData read_grid(std::istream& in);
FieldData read_grid(const std::filesystem::path& path);

/// Keeps every step-th point along the named axes (the first point is kept).
/// Throws ArgumentError for unknown axes, steps < 1, or fewer than 2 remaining points.
FieldData subsample(const FieldData& data, const std::map<std::string, int>& step);

/// 1D or 2D tensor grid from a CSV whose header names the axes then one
/// field, e.g. `x,t,u`. Every grid point must appear exactly once.
FieldData read_csv_grid(const std::filesystem::path& path);

/// Points from a CSV with a header naming coordinates; no grid structure required.
struct PointTable {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
};
PointTable read_csv_points(const std::filesystem::path& path);

/// Per-axis basis description stored with a fit.
struct StoredAxisBasis {
    std::string name;
    int order = 4;
    std::vector<double> knots;  ///< distinct knots

    bool operator==(const StoredAxisBasis&) const = default;
};

/// Persistent form of a fit or a bootstrap run.
struct ResultDocument {
    static constexpr int kFormatVersion = 1;

    std::string kind = "bootstrap";  ///< "fit" or "bootstrap"
    std::string model_source;
    std::vector<std::string> theta_names;
    std::vector<double> theta_mean;
    std::vector<double> cov_percent;
    std::vector<std::vector<double>> replicates;
    std::vector<bool> converged_flags;
    nlohmann::json config = nlohmann::json::object();
    std::vector<std::uint64_t> seeds;

    // Present for kind == "fit".
    std::vector<double> beta;
    std::vector<StoredAxisBasis> basis;
    std::optional<int> iterations;
    std::optional<double> data_misfit;
    std::optional<double> final_primal_residual;

    bool operator==(const ResultDocument&) const = default;
};

std::vector<StoredAxisBasis> store_basis(const BasisSpec& spec);
/// Throws FormatError(BadValue) when the stored knots are invalid.
BasisSpec restore_basis(const std::vector<StoredAxisBasis>& stored);

ResultDocument make_result(const FitResult& fit, const BasisSpec& spec, const std::string& model_source,
                           const nlohmann::json& config);
ResultDocument make_result(const BootstrapResult& result, const std::string& model_source,
                           const nlohmann::json& config);

/// Sorted keys, shortest round-trip numbers, non-finite numbers as null.
std::string serialize_result(const ResultDocument& doc);
ResultDocument parse_result(const std::string& text);

void write_result(const ResultDocument& doc, const std::filesystem::path& path);
ResultDocument read_result(const std::filesystem::path& path);

}  // namespace snape
