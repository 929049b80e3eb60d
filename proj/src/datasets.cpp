#include "snape/datasets.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "snape/errors.hpp"

namespace snape {

namespace {

using json = nlohmann::json;

constexpr const char* kMagic = "SNAPEGRID 1";

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream in(line);
    return {std::istream_iterator<std::string>(in), std::istream_iterator<std::string>()};
}

double parse_double(const std::string& s, std::size_t line, FormatErrorKind kind = FormatErrorKind::BadHeader) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw FormatError(kind, "malformed number '" + s + "'", line);
    }
    return v;
}

std::size_t parse_count(const std::string& s, std::size_t line) {
    std::size_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw FormatError(FormatErrorKind::BadHeader, "malformed count '" + s + "'", line);
    }
    return v;
}

bool is_uniform(const std::vector<double>& c) {
    const std::vector<double> u = uniform_coordinates(c.front(), c.back(), c.size());
    return std::memcmp(u.data(), c.data(), c.size() * sizeof(double)) == 0;
}

void put_f64le(std::string& out, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
        out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
    }
}

double get_f64le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) {
        bits = (bits << 8) | p[b];
    }
    double v = 0.0;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

/// Reads one '\n'-terminated header line; throws Truncated at end of input.
std::string header_line(std::istream& in, std::size_t line_no) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError(FormatErrorKind::Truncated, "unexpected end of header", line_no);
    }
    if (in.eof()) {
        throw FormatError(FormatErrorKind::Truncated, "header line is not terminated", line_no);
    }
    return line;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(FormatErrorKind::Io, "cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            const auto b = cell.find_first_not_of(" \t");
            const auto e = cell.find_last_not_of(" \t");
            cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) {
        throw FormatError(FormatErrorKind::BadHeader, "CSV file '" + path.string() + "' is empty", 1);
    }
    return rows;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) {
        a.push_back(number_or_null(x));
    }
    return a;
}

const json& require(const json& doc, const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end()) {
        throw FormatError(FormatErrorKind::MissingKey, std::string("result is missing key '") + key + "'");
    }
    return *it;
}

double json_double(const json& v, const std::string& what) {
    if (v.is_null()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (!v.is_number()) {
        throw FormatError(FormatErrorKind::BadValue, "'" + what + "' must be numeric");
    }
    return v.get<double>();
}

std::vector<double> json_vector(const json& v, const std::string& what) {
    if (!v.is_array()) {
        throw FormatError(FormatErrorKind::BadValue, "'" + what + "' must be an array");
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        out.push_back(json_double(x, what));
    }
    return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string to_string(FormatErrorKind kind) {
    switch (kind) {
        case FormatErrorKind::Io:
            return "io";
        case FormatErrorKind::BadMagic:
            return "bad-magic";
        case FormatErrorKind::BadHeader:
            return "bad-header";
        case FormatErrorKind::NonMonotoneAxis:
            return "non-monotone-axis";
        case FormatErrorKind::Truncated:
            return "truncated";
        case FormatErrorKind::SizeMismatch:
            return "size-mismatch";
        case FormatErrorKind::NonFinite:
            return "non-finite";
        case FormatErrorKind::MissingKey:
            return "missing-key";
        case FormatErrorKind::VersionMismatch:
            return "version-mismatch";
        case FormatErrorKind::BadValue:
            return "bad-value";
    }
    return "unknown";
}

FormatError::FormatError(FormatErrorKind kind, const std::string& message, std::size_t line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      kind_(kind),
      line_(line) {}

std::vector<double> uniform_coordinates(double a, double b, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = i + 1 == count ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return out;
}

void write_grid(const FieldData& data, std::ostream& out) {
    data.validate();
    std::string buf = std::string(kMagic) + "\n";
    buf += "axes " + std::to_string(data.grid.dims()) + "\n";
    for (const Axis& a : data.grid.axes()) {
        buf += "axis " + a.name + " " + std::to_string(a.coords.size());
        if (is_uniform(a.coords)) {
            buf += " uniform " + format_double(a.coords.front()) + " " + format_double(a.coords.back());
        } else {
            buf += " explicit";
            for (double c : a.coords) {
                buf += " " + format_double(c);
            }
        }
        buf += "\n";
    }
    buf += "fields " + std::to_string(data.names.size());
    for (const auto& n : data.names) {
        buf += " " + n;
    }
    buf += "\ndata f64le rowmajor\n";
    for (const auto& field : data.values) {
        for (double v : field) {
            if (!std::isfinite(v)) {
                throw FormatError(FormatErrorKind::NonFinite, "field values must be finite to be written");
            }
            put_f64le(buf, v);
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw FormatError(FormatErrorKind::Io, "write failed");
    }
}

void write_grid(const FieldData& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError(FormatErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    }
    write_grid(data, out);
}

FieldData read_grid(std::istream& in) {
    std::size_t line_no = 1;
    if (header_line(in, line_no) != kMagic) {
        throw FormatError(FormatErrorKind::BadMagic, "expected 'SNAPEGRID 1'", line_no);
    }
    auto tokens = split_ws(header_line(in, ++line_no));
    if (tokens.size() != 2 || tokens[0] != "axes") {
        throw FormatError(FormatErrorKind::BadHeader, "expected 'axes <d>'", line_no);
    }
    const std::size_t d = parse_count(tokens[1], line_no);
    if (d < 1) {
        throw FormatError(FormatErrorKind::BadHeader, "a grid needs at least one axis", line_no);
    }
    std::vector<Axis> axes;
    std::set<std::string> names;
    for (std::size_t a = 0; a < d; ++a) {
        tokens = split_ws(header_line(in, ++line_no));
        if (tokens.empty() || tokens[0] != "axis") {
            throw FormatError(FormatErrorKind::BadHeader,
                              "expected axis line " + std::to_string(a + 1) + " of " + std::to_string(d), line_no);
        }
        if (tokens.size() < 4) {
            throw FormatError(FormatErrorKind::BadHeader, "axis line needs a name, a count and a layout", line_no);
        }
        Axis axis;
        axis.name = tokens[1];
        if (!names.insert(axis.name).second) {
            throw FormatError(FormatErrorKind::BadHeader, "duplicate axis '" + axis.name + "'", line_no);
        }
        const std::size_t count = parse_count(tokens[2], line_no);
        if (count < 2) {
            throw FormatError(FormatErrorKind::BadHeader, "axis '" + axis.name + "' needs at least 2 points",
                              line_no);
        }
        if (tokens[3] == "uniform") {
            if (tokens.size() != 6) {
                throw FormatError(FormatErrorKind::BadHeader, "uniform axis needs exactly <a> <b>", line_no);
            }
            const double lo = parse_double(tokens[4], line_no);
            const double hi = parse_double(tokens[5], line_no);
            if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
                throw FormatError(FormatErrorKind::NonMonotoneAxis,
                                  "uniform axis '" + axis.name + "' needs finite a < b", line_no);
            }
            axis.coords = uniform_coordinates(lo, hi, count);
        } else if (tokens[3] == "explicit") {
            if (tokens.size() != 4 + count) {
                throw FormatError(FormatErrorKind::SizeMismatch,
                                  "axis '" + axis.name + "' declares " + std::to_string(count) + " points but lists " +
                                      std::to_string(tokens.size() - 4),
                                  line_no);
            }
            for (std::size_t i = 0; i < count; ++i) {
                axis.coords.push_back(parse_double(tokens[4 + i], line_no));
            }
        } else {
            throw FormatError(FormatErrorKind::BadHeader, "axis layout must be 'uniform' or 'explicit'", line_no);
        }
        for (std::size_t i = 0; i < axis.coords.size(); ++i) {
            if (!std::isfinite(axis.coords[i]) || (i > 0 && !(axis.coords[i] > axis.coords[i - 1]))) {
                throw FormatError(FormatErrorKind::NonMonotoneAxis,
                                  "axis '" + axis.name + "' is not strictly increasing", line_no);
            }
        }
        axes.push_back(std::move(axis));
    }
    tokens = split_ws(header_line(in, ++line_no));
    if (tokens.empty() || tokens[0] != "fields") {
        throw FormatError(FormatErrorKind::BadHeader, "expected 'fields <c> <names...>' after " +
                                                          std::to_string(d) + " axis lines",
                          line_no);
    }
    if (tokens.size() < 2) {
        throw FormatError(FormatErrorKind::BadHeader, "fields line needs a count", line_no);
    }
    const std::size_t c = parse_count(tokens[1], line_no);
    if (c < 1 || tokens.size() != 2 + c) {
        throw FormatError(FormatErrorKind::BadHeader, "fields line must list exactly " + tokens[1] + " names",
                          line_no);
    }
    FieldData data;
    data.names.assign(tokens.begin() + 2, tokens.end());
    if (std::set<std::string>(data.names.begin(), data.names.end()).size() != c) {
        throw FormatError(FormatErrorKind::BadHeader, "duplicate field name", line_no);
    }
    if (header_line(in, ++line_no) != "data f64le rowmajor") {
        throw FormatError(FormatErrorKind::BadHeader, "expected 'data f64le rowmajor'", line_no);
    }
    data.grid = Grid(std::move(axes));

    const std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::size_t n = data.grid.point_count();
    const std::size_t expected = c * n * 8;
    if (payload.size() < expected) {
        throw FormatError(FormatErrorKind::Truncated, "payload has " + std::to_string(payload.size()) +
                                                          " bytes, expected " + std::to_string(expected));
    }
    if (payload.size() > expected) {
        throw FormatError(FormatErrorKind::SizeMismatch, "payload has " + std::to_string(payload.size() - expected) +
                                                             " trailing bytes");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
    data.values.assign(c, std::vector<double>(n));
    for (std::size_t f = 0; f < c; ++f) {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = get_f64le(p + 8 * (f * n + i));
            if (!std::isfinite(v)) {
                throw FormatError(FormatErrorKind::NonFinite, "field '" + data.names[f] + "' has a non-finite value");
            }
            data.values[f][i] = v;
        }
    }
    return data;
}

FieldData read_grid(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    return read_grid(in);
}

PointTable read_csv_points(const std::filesystem::path& path) {
    const auto rows = csv_rows(path);
    PointTable table;
    table.names = rows.front();
    for (const auto& n : table.names) {
        if (n.empty()) {
            throw FormatError(FormatErrorKind::BadHeader, "empty column name", 1);
        }
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != table.names.size()) {
            throw FormatError(FormatErrorKind::SizeMismatch,
                              "expected " + std::to_string(table.names.size()) + " columns", r + 1);
        }
        std::vector<double> row;
        for (const auto& cell : rows[r]) {
            const double v = parse_double(cell, r + 1, FormatErrorKind::BadValue);
            if (!std::isfinite(v)) {
                throw FormatError(FormatErrorKind::NonFinite, "non-finite value", r + 1);
            }
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

FieldData read_csv_grid(const std::filesystem::path& path) {
    const PointTable t = read_csv_points(path);
    const std::size_t cols = t.names.size();
    if (cols != 2 && cols != 3) {
        throw FormatError(FormatErrorKind::BadHeader, "CSV grid import supports 1 or 2 axes plus one field", 1);
    }
    const std::size_t d = cols - 1;
    std::vector<std::set<double>> coords(d);
    for (const auto& row : t.rows) {
        for (std::size_t a = 0; a < d; ++a) {
            coords[a].insert(row[a]);
        }
    }
    std::vector<Axis> axes;
    for (std::size_t a = 0; a < d; ++a) {
        if (coords[a].size() < 2) {
            throw FormatError(FormatErrorKind::SizeMismatch, "axis '" + t.names[a] + "' needs at least 2 values");
        }
        axes.push_back(Axis{t.names[a], std::vector<double>(coords[a].begin(), coords[a].end())});
    }
    Grid grid(std::move(axes));
    const std::size_t n = grid.point_count();
    if (t.rows.size() != n) {
        throw FormatError(FormatErrorKind::SizeMismatch, "CSV has " + std::to_string(t.rows.size()) +
                                                             " rows but the tensor grid has " + std::to_string(n) +
                                                             " points");
    }
    std::vector<double> values(n);
    std::vector<bool> seen(n, false);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::size_t flat = 0;
        for (std::size_t a = 0; a < d; ++a) {
            const auto& c = grid.axis(a).coords;
            const auto idx = static_cast<std::size_t>(std::lower_bound(c.begin(), c.end(), t.rows[r][a]) - c.begin());
            flat = flat * c.size() + idx;
        }
        if (seen[flat]) {
            throw FormatError(FormatErrorKind::SizeMismatch, "duplicate grid point", r + 2);
        }
        seen[flat] = true;
        values[flat] = t.rows[r][d];
    }
    return FieldData::single(std::move(grid), t.names[d], std::move(values));
}

FieldData subsample(const FieldData& data, const std::map<std::string, int>& step) {
    data.validate();
    for (const auto& [name, s] : step) {
        if (!data.grid.has_axis(name)) {
            throw ArgumentError("cannot subsample unknown axis '" + name + "'");
        }
        if (s < 1) {
            throw ArgumentError("subsample step for axis '" + name + "' must be at least 1");
        }
    }
    const std::size_t d = data.grid.dims();
    std::vector<std::vector<std::size_t>> keep(d);
    std::vector<Axis> axes;
    for (std::size_t a = 0; a < d; ++a) {
        const Axis& axis = data.grid.axis(a);
        const auto it = step.find(axis.name);
        const std::size_t s = it == step.end() ? 1 : static_cast<std::size_t>(it->second);
        Axis out{axis.name, {}};
        for (std::size_t i = 0; i < axis.coords.size(); i += s) {
            keep[a].push_back(i);
            out.coords.push_back(axis.coords[i]);
        }
        if (out.coords.size() < 2) {
            throw ArgumentError("subsampling leaves fewer than 2 points on axis '" + axis.name + "'");
        }
        axes.push_back(std::move(out));
    }
    FieldData result;
    result.grid = Grid(std::move(axes));
    result.names = data.names;
    const std::size_t n = result.grid.point_count();
    std::vector<std::size_t> source(n);
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t p = 0; p < n; ++p) {
        std::size_t flat = 0;
        for (std::size_t a = 0; a < d; ++a) {
            flat = flat * data.grid.axis(a).coords.size() + keep[a][idx[a]];
        }
        source[p] = flat;
        for (std::size_t a = d; a-- > 0;) {
            if (++idx[a] < keep[a].size()) {
                break;
            }
            idx[a] = 0;
        }
    }
    for (const auto& field : data.values) {
        std::vector<double> v(n);
        for (std::size_t p = 0; p < n; ++p) {
            v[p] = field[source[p]];
        }
        result.values.push_back(std::move(v));
    }
    return result;
}

std::vector<StoredAxisBasis> store_basis(const BasisSpec& spec) {
    std::vector<StoredAxisBasis> out;
    for (const auto& a : spec.axes()) {
        out.push_back(StoredAxisBasis{a.name, a.knots.order(), a.knots.distinct_knots()});
    }
    return out;
}

BasisSpec restore_basis(const std::vector<StoredAxisBasis>& stored) {
    try {
        std::vector<AxisBasis> axes;
        for (const auto& a : stored) {
            axes.push_back(AxisBasis{a.name, KnotVector(a.knots, a.order)});
        }
        return BasisSpec(std::move(axes));
    } catch (const std::invalid_argument& e) {
        throw FormatError(FormatErrorKind::BadValue, std::string("invalid stored basis: ") + e.what());
    }
}

ResultDocument make_result(const FitResult& fit, const BasisSpec& spec, const std::string& model_source,
                           const json& config) {
    ResultDocument doc;
    doc.kind = "fit";
    doc.model_source = model_source;
    doc.theta_names = fit.theta_names;
    doc.theta_mean = to_std(fit.theta);
    doc.cov_percent.assign(doc.theta_mean.size(), 0.0);
    doc.replicates = {doc.theta_mean};
    doc.converged_flags = {fit.converged};
    doc.config = config;
    doc.beta = to_std(fit.beta);
    doc.basis = store_basis(spec);
    doc.iterations = fit.iterations;
    doc.data_misfit = fit.data_misfit;
    doc.final_primal_residual = fit.primal_history.empty() ? 0.0 : fit.primal_history.back();
    return doc;
}

ResultDocument make_result(const BootstrapResult& result, const std::string& model_source, const json& config) {
    ResultDocument doc;
    doc.kind = "bootstrap";
    doc.model_source = model_source;
    doc.theta_names = result.theta_names;
    doc.theta_mean = to_std(result.theta_mean);
    doc.cov_percent = to_std(result.cov_percent);
    for (const auto& r : result.replicates) {
        doc.replicates.push_back(to_std(r));
    }
    doc.converged_flags = result.converged;
    doc.config = config;
    doc.config["mode"] = to_string(result.mode);
    doc.seeds = result.seeds;
    return doc;
}

std::string serialize_result(const ResultDocument& doc) {
    json j;
    j["format_version"] = ResultDocument::kFormatVersion;
    j["kind"] = doc.kind;
    j["model_source"] = doc.model_source;
    j["theta_names"] = doc.theta_names;
    j["theta_mean"] = vector_json(doc.theta_mean);
    j["cov_percent"] = vector_json(doc.cov_percent);
    json reps = json::array();
    for (const auto& r : doc.replicates) {
        reps.push_back(vector_json(r));
    }
    j["replicates"] = reps;
    j["converged_flags"] = doc.converged_flags;
    j["config"] = doc.config;
    j["seeds"] = doc.seeds;
    if (doc.kind == "fit") {
        j["beta"] = vector_json(doc.beta);
        json basis = json::array();
        for (const auto& a : doc.basis) {
            basis.push_back({{"name", a.name}, {"order", a.order}, {"knots", vector_json(a.knots)}});
        }
        j["basis"] = basis;
    }
    if (doc.iterations) {
        j["iterations"] = *doc.iterations;
    }
    if (doc.data_misfit) {
        j["data_misfit"] = number_or_null(*doc.data_misfit);
    }
    if (doc.final_primal_residual) {
        j["final_primal_residual"] = number_or_null(*doc.final_primal_residual);
    }
    return j.dump(2) + "\n";
}

ResultDocument parse_result(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(FormatErrorKind::BadValue, std::string("result is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw FormatError(FormatErrorKind::BadValue, "result must be a JSON object");
    }
    try {
        const json& version = require(j, "format_version");
        if (!version.is_number_integer() || version.get<int>() != ResultDocument::kFormatVersion) {
            throw FormatError(FormatErrorKind::VersionMismatch,
                              "unsupported result format_version " + version.dump() + " (expected " +
                                  std::to_string(ResultDocument::kFormatVersion) + ")");
        }
        ResultDocument doc;
        doc.model_source = require(j, "model_source").get<std::string>();
        doc.theta_names = require(j, "theta_names").get<std::vector<std::string>>();
        doc.theta_mean = json_vector(require(j, "theta_mean"), "theta_mean");
        doc.cov_percent = json_vector(require(j, "cov_percent"), "cov_percent");
        const json& reps = require(j, "replicates");
        if (!reps.is_array()) {
            throw FormatError(FormatErrorKind::BadValue, "'replicates' must be an array");
        }
        for (const auto& r : reps) {
            doc.replicates.push_back(json_vector(r, "replicates"));
        }
        doc.converged_flags = require(j, "converged_flags").get<std::vector<bool>>();
        doc.config = require(j, "config");
        doc.seeds = require(j, "seeds").get<std::vector<std::uint64_t>>();
        doc.kind = j.value("kind", std::string("bootstrap"));
        if (doc.kind != "fit" && doc.kind != "bootstrap") {
            throw FormatError(FormatErrorKind::BadValue, "unknown result kind '" + doc.kind + "'");
        }
        const std::size_t m = doc.theta_names.size();
        if (doc.theta_mean.size() != m || doc.cov_percent.size() != m) {
            throw FormatError(FormatErrorKind::SizeMismatch, "theta vectors do not match theta_names");
        }
        if (doc.converged_flags.size() != doc.replicates.size()) {
            throw FormatError(FormatErrorKind::SizeMismatch, "converged_flags does not match replicates");
        }
        for (const auto& r : doc.replicates) {
            if (r.size() != m) {
                throw FormatError(FormatErrorKind::SizeMismatch, "replicate length does not match theta_names");
            }
        }
        if (doc.kind == "fit") {
            doc.beta = json_vector(require(j, "beta"), "beta");
            const json& basis = require(j, "basis");
            if (!basis.is_array()) {
                throw FormatError(FormatErrorKind::BadValue, "'basis' must be an array");
            }
            for (const auto& a : basis) {
                doc.basis.push_back(StoredAxisBasis{require(a, "name").get<std::string>(),
                                                    require(a, "order").get<int>(),
                                                    json_vector(require(a, "knots"), "knots")});
            }
        }
        if (j.contains("iterations")) {
            doc.iterations = j["iterations"].get<int>();
        }
        if (j.contains("data_misfit")) {
            doc.data_misfit = json_double(j["data_misfit"], "data_misfit");
        }
        if (j.contains("final_primal_residual")) {
            doc.final_primal_residual = json_double(j["final_primal_residual"], "final_primal_residual");
        }
        return doc;
    } catch (const json::exception& e) {
        throw FormatError(FormatErrorKind::BadValue, std::string("result has a value of the wrong type: ") + e.what());
    }
}

void write_result(const ResultDocument& doc, const std::filesystem::path& path) {
    const std::string text = serialize_result(doc);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError(FormatErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw FormatError(FormatErrorKind::Io, "write to '" + path.string() + "' failed");
    }
}

ResultDocument read_result(const std::filesystem::path& path) { return parse_result(read_file(path)); }

}  // namespace snape
