#include "snape/cli.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "snape/bootstrap.hpp"
#include "snape/datasets.hpp"
#include "snape/errors.hpp"
#include "snape/model.hpp"
#include "snape/simulators.hpp"
#include "snape/solver.hpp"

namespace snape::cli {

namespace {

using json = nlohmann::json;

/// Bad flag values, missing inputs the user named, and similar command-line mistakes.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-convergence reported after the result file was written.
class NotConverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::map<std::string, int> parse_axis_ints(const std::vector<std::string>& items, const char* flag) {
    std::map<std::string, int> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        int v = 0;
        const char* first = item.data() + (eq == std::string::npos ? 0 : eq + 1);
        const char* last = item.data() + item.size();
        const auto res = std::from_chars(first, last, v);
        if (eq == std::string::npos || eq == 0 || res.ec != std::errc() || res.ptr != last) {
            throw UsageError(std::string(flag) + " expects axis=integer, got '" + item + "'");
        }
        out[item.substr(0, eq)] = v;
    }
    return out;
}

std::string read_model_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot read model file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

FieldData load_data(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw FormatError(FormatErrorKind::Io, "data file '" + path + "' does not exist");
    }
    if (std::filesystem::path(path).extension() == ".csv") {
        return read_csv_grid(path);
    }
    return read_grid(std::filesystem::path(path));
}

std::vector<std::string> axis_names(const Grid& grid) {
    std::vector<std::string> out;
    for (const auto& a : grid.axes()) {
        out.push_back(a.name);
    }
    return out;
}

struct EstimationFlags {
    std::string data;
    std::string model;
    std::string out;
    std::vector<std::string> knots;
    std::vector<std::string> orders;
    std::vector<std::string> subsample;
    AdmmConfig cfg;
    double ridge = -1.0;
};

void add_estimation_flags(CLI::App* app, EstimationFlags& f) {
    app->add_option("--data", f.data, "Input GRD (or 1D/2D CSV) file")->required();
    app->add_option("--model", f.model, "Model-spec file")->required();
    app->add_option("--out", f.out, "Result JSON file")->required();
    app->add_option("--knots", f.knots, "Distinct knot count per axis, axis=k (default clamp(n/4, 10, 60))");
    app->add_option("--order", f.orders, "Spline order per axis, axis=o (default max(d+2, 4))");
    app->add_option("--subsample", f.subsample, "Keep every s-th grid point along an axis, axis=s");
    app->add_option("--rho", f.cfg.rho, "Augmented-Lagrangian penalty")->capture_default_str();
    app->add_option("--mu", f.cfg.mu, "Weight of the auxiliary variable")->capture_default_str();
    app->add_option("--gamma", f.cfg.gamma, "Dual step")->capture_default_str();
    app->add_option("--ridge", f.ridge, "Normal-equation ridge (default 1e-10 trace(B^T B)/m)");
    app->add_option("--tol-theta", f.cfg.tol_theta, "Relative theta-change tolerance")->capture_default_str();
    app->add_option("--tol-primal", f.cfg.tol_primal, "Primal residual tolerance")->capture_default_str();
    app->add_option("--max-iter", f.cfg.max_iter, "Iteration limit")->capture_default_str();
    app->add_option("--theta0", f.cfg.theta0, "Initial coefficients (default all zero)")->expected(1, -1);
}

struct Prepared {
    ModelSpec model;
    std::string model_text;
    FieldData data;
    BasisSpec spec;
    std::map<std::string, int> subsample;
};

Prepared prepare(EstimationFlags& f) {
    Prepared p;
    p.model_text = read_model_text(f.model);
    p.model = parse_model(p.model_text);
    p.subsample = parse_axis_ints(f.subsample, "--subsample");
    BasisOptions options;
    options.knots = parse_axis_ints(f.knots, "--knots");
    options.orders = parse_axis_ints(f.orders, "--order");
    p.data = load_data(f.data);
    if (!p.subsample.empty()) {
        p.data = subsample(p.data, p.subsample);
    }
    const std::vector<int> maxd = p.model.max_derivative(axis_names(p.data.grid));
    p.spec = make_default_basis(p.data.grid, maxd, options);
    if (f.ridge >= 0.0) {
        f.cfg.ridge = f.ridge;
    }
    return p;
}

json config_json(const Prepared& p, const AdmmConfig& cfg, double ridge) {
    json c;
    c["rho"] = cfg.rho;
    c["mu"] = cfg.mu;
    c["gamma"] = cfg.gamma;
    c["ridge"] = ridge;
    c["tol_theta"] = cfg.tol_theta;
    c["tol_primal"] = cfg.tol_primal;
    c["max_iter"] = cfg.max_iter;
    c["theta0"] = cfg.theta0;
    json knots = json::object();
    json orders = json::object();
    for (const auto& a : p.spec.axes()) {
        knots[a.name] = a.knots.distinct_knots().size();
        orders[a.name] = a.knots.order();
    }
    c["knots"] = knots;
    c["orders"] = orders;
    c["subsample"] = p.subsample;
    json grid = json::object();
    for (const auto& a : p.data.grid.axes()) {
        grid[a.name] = a.coords.size();
    }
    c["grid"] = grid;
    return c;
}

Eigen::VectorXd target_of(const Prepared& p) {
    const std::vector<double>& v = p.data.field(p.model.target);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void print_theta(std::ostream& out, const std::vector<std::string>& names, const Eigen::VectorXd& theta) {
    for (std::size_t j = 0; j < names.size(); ++j) {
        out << names[j] << " = " << format_double(theta[static_cast<Eigen::Index>(j)]) << "\n";
    }
}

void write_trace(const std::string& path, const FitResult& r) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError(FormatErrorKind::Io, "cannot open '" + path + "' for writing");
    }
    out << "iter";
    for (std::size_t j = 0; j < r.theta_names.size(); ++j) {
        out << ",theta_" << (j + 1);
    }
    out << ",primal_residual\n";
    for (std::size_t k = 0; k < r.theta_trace.size(); ++k) {
        out << (k + 1);
        for (Eigen::Index j = 0; j < r.theta_trace[k].size(); ++j) {
            out << "," << format_double(r.theta_trace[k][j]);
        }
        out << "," << format_double(r.primal_history[k]) << "\n";
    }
}

int run_fit(EstimationFlags& f, bool trace, std::ostream& out) {
    Prepared p = prepare(f);
    f.cfg.trace = trace;
    const FitResult r = fit(target_of(p), p.model, p.spec, p.data.grid, exogenous_from(p.data, p.model), f.cfg);
    write_result(make_result(r, p.spec, p.model_text, config_json(p, f.cfg, r.ridge)), f.out);
    if (trace) {
        write_trace(f.out + ".trace.csv", r);
    }
    print_theta(out, r.theta_names, r.theta);
    out << "iterations = " << r.iterations << (r.converged ? " (converged)" : " (not converged)") << "\n";
    if (!r.converged) {
        throw NotConverged("ADMM did not converge within " + std::to_string(r.iterations) +
                           " iterations; the result file records the last iterate");
    }
    return kSuccess;
}

struct BootstrapFlags {
    int replicates = 10;
    double noise = 0.0;
    std::string mode = "fresh";
    std::uint64_t seed = 0;
    int jobs = 1;
};

int run_bootstrap(EstimationFlags& f, const BootstrapFlags& b, std::ostream& out) {
    Prepared p = prepare(f);
    BootstrapOptions o;
    o.mode = parse_bootstrap_mode(b.mode);
    o.replicates = b.replicates;
    o.noise = NoiseSpec{b.noise, b.seed};
    o.jobs = b.jobs;
    const BootstrapResult r = bootstrap(p.data, p.model, p.spec, f.cfg, o);
    json config = config_json(p, f.cfg, resolve_ridge(f.cfg, assemble_grid_matrix(p.spec, p.data.grid,
                                                                                    DerivIndex(p.data.grid.dims(), 0))));
    config["noise"] = b.noise;
    config["replicates"] = b.replicates;
    config["seed"] = b.seed;
    write_result(make_result(r, p.model_text, config), f.out);
    print_theta(out, r.theta_names, r.theta_mean);
    const auto failed = std::count(r.converged.begin(), r.converged.end(), false);
    out << "converged replicates = " << (r.converged.size() - static_cast<std::size_t>(failed)) << " of "
        << r.converged.size() << "\n";
    return kSuccess;
}

struct ReconstructFlags {
    std::string fit;
    std::string data;
    std::string points;
    std::string out;
};

int run_reconstruct(const ReconstructFlags& f, std::ostream& out) {
    const ResultDocument doc = read_result(f.fit);
    if (doc.kind != "fit" || doc.basis.empty()) {
        throw FormatError(FormatErrorKind::BadValue, "'" + f.fit + "' is not a fit result with stored coefficients");
    }
    const BasisSpec spec = restore_basis(doc.basis);
    if (static_cast<Eigen::Index>(doc.beta.size()) != spec.basis_count()) {
        throw FormatError(FormatErrorKind::SizeMismatch, "stored coefficients do not match the stored basis");
    }
    const Eigen::Map<const Eigen::VectorXd> beta(doc.beta.data(), static_cast<Eigen::Index>(doc.beta.size()));
    std::string target = "u";
    try {
        target = parse_model(doc.model_source).target;
    } catch (const ParseError&) {
    }
    const std::string source = f.points.empty() ? f.data : f.points;
    if (source.empty()) {
        throw UsageError("reconstruct needs --points or --data");
    }
    const std::size_t d = spec.dims();
    std::vector<std::vector<double>> points;
    FieldData result;
    if (std::filesystem::path(source).extension() == ".csv") {
        const PointTable table = read_csv_points(source);
        std::vector<std::size_t> column(d);
        for (std::size_t a = 0; a < d; ++a) {
            const auto it = std::find(table.names.begin(), table.names.end(), spec.axes()[a].name);
            if (it == table.names.end()) {
                throw MismatchError("points file has no column for axis '" + spec.axes()[a].name + "'");
            }
            column[a] = static_cast<std::size_t>(it - table.names.begin());
        }
        if (table.rows.size() < 2) {
            throw ArgumentError("points file must list at least 2 points");
        }
        for (const auto& row : table.rows) {
            std::vector<double> pt(d);
            for (std::size_t a = 0; a < d; ++a) {
                pt[a] = row[column[a]];
            }
            points.push_back(std::move(pt));
        }
        std::vector<double> index(points.size());
        for (std::size_t i = 0; i < index.size(); ++i) {
            index[i] = static_cast<double>(i);
        }
        result.grid = Grid({Axis{"index", index}});
        for (std::size_t a = 0; a < d; ++a) {
            result.names.push_back(spec.axes()[a].name);
            std::vector<double> coord;
            for (const auto& pt : points) {
                coord.push_back(pt[a]);
            }
            result.values.push_back(std::move(coord));
        }
    } else {
        const FieldData grid_data = load_data(source);
        const Grid& g = grid_data.grid;
        if (g.dims() != d) {
            throw MismatchError("points grid has " + std::to_string(g.dims()) + " axes, the fit has " +
                                std::to_string(d));
        }
        std::vector<std::size_t> axis_of(d);
        for (std::size_t a = 0; a < d; ++a) {
            axis_of[a] = g.axis_index(spec.axes()[a].name);
        }
        for (std::size_t i = 0; i < g.point_count(); ++i) {
            const std::vector<double> gp = g.point(i);
            std::vector<double> pt(d);
            for (std::size_t a = 0; a < d; ++a) {
                pt[a] = gp[axis_of[a]];
            }
            points.push_back(std::move(pt));
        }
        result.grid = g;
    }
    const SparseRowMatrix b = eval_at_points(spec, points, DerivIndex(d, 0));
    const Eigen::VectorXd values = b * beta;
    result.names.push_back(target);
    result.values.emplace_back(values.data(), values.data() + values.size());
    write_grid(result, std::filesystem::path(f.out));
    out << "reconstructed " << points.size() << " points into '" << f.out << "'\n";
    return kSuccess;
}

int run_inspect(const std::string& path, std::ostream& out) {
    const FieldData data = load_data(path);
    out << "points " << data.grid.point_count() << "\n";
    out << "axes " << data.grid.dims() << "\n";
    for (const auto& a : data.grid.axes()) {
        const bool uniform = a.coords == uniform_coordinates(a.coords.front(), a.coords.back(), a.coords.size());
        out << "  " << a.name << " " << a.coords.size() << " [" << format_double(a.coords.front()) << ", "
            << format_double(a.coords.back()) << "] " << (uniform ? "uniform" : "explicit") << "\n";
    }
    out << "fields " << data.names.size() << "\n";
    for (std::size_t f = 0; f < data.names.size(); ++f) {
        const auto& v = data.values[f];
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        double mean = 0.0;
        for (double x : v) {
            mean += x;
        }
        mean /= static_cast<double>(v.size());
        out << "  " << data.names[f] << " min " << format_double(*lo) << " max " << format_double(*hi) << " mean "
            << format_double(mean) << "\n";
    }
    return kSuccess;
}

struct OdeFlags {
    OdeSetup setup;
    std::string out;
};

CLI::App* add_ode_command(CLI::App* sim, const char* name, OdeKind kind, OdeFlags& f) {
    f.setup.kind = kind;
    if (kind == OdeKind::VanDerPol) {
        f.setup.theta = {-8.0, 8.0, 1.0};
        f.setup.t1 = 50.0;
        f.setup.samples = 5000;
    }
    auto* c = sim->add_subcommand(name, kind == OdeKind::Duffing
                                            ? "x'' + th1 x' + th2 x + th3 x^3 = amplitude cos(omega t)"
                                            : "x'' + th1 x' + th2 x^2 x' + th3 x = 0");
    c->add_option("--theta1", f.setup.theta[0])->capture_default_str();
    c->add_option("--theta2", f.setup.theta[1])->capture_default_str();
    c->add_option("--theta3", f.setup.theta[2])->capture_default_str();
    if (kind == OdeKind::Duffing) {
        c->add_option("--amplitude", f.setup.forcing_amplitude, "Forcing amplitude")->capture_default_str();
        c->add_option("--omega", f.setup.forcing_frequency, "Forcing frequency")->capture_default_str();
    }
    c->add_option("--x0", f.setup.x0, "Initial position")->capture_default_str();
    c->add_option("--v0", f.setup.v0, "Initial velocity")->capture_default_str();
    c->add_option("--t0", f.setup.t0)->capture_default_str();
    c->add_option("--t1", f.setup.t1)->capture_default_str();
    c->add_option("--samples", f.setup.samples, "Output samples on [t0, t1]")->capture_default_str();
    c->add_option("--max-step", f.setup.max_step, "Largest internal RK4 step")->capture_default_str();
    c->add_option("--out", f.out, "Output GRD file")->required();
    return c;
}

std::vector<std::string> reversed_args(const std::vector<std::string>& args) {
    std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rev.begin(), rev.end());
    return rev;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simultaneous spline fitting and differential-equation parameter estimation"};
    app.name(args.empty() ? "snape" : std::filesystem::path(args.front()).filename().string());
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "Generate a reference dataset");
    sim->require_subcommand(1);
    OdeFlags duffing;
    OdeFlags vdp;
    auto* duffing_cmd = add_ode_command(sim, "duffing", OdeKind::Duffing, duffing);
    auto* vdp_cmd = add_ode_command(sim, "vanderpol", OdeKind::VanDerPol, vdp);

    WaveSetup wave;
    std::string wave_out;
    auto* wave_cmd = sim->add_subcommand("wave2d", "u_tt = th1 u_xx + th2 u_yy on [-1,1]^2");
    wave_cmd->add_option("--theta1", wave.theta1)->capture_default_str();
    wave_cmd->add_option("--theta2", wave.theta2)->capture_default_str();
    wave_cmd->add_option("--nx", wave.nx)->capture_default_str();
    wave_cmd->add_option("--ny", wave.ny)->capture_default_str();
    wave_cmd->add_option("--nt", wave.nt)->capture_default_str();
    wave_cmd->add_option("--t-end", wave.t_end)->capture_default_str();
    wave_cmd->add_option("--refine", wave.refine, "Internal spatial refinement")->capture_default_str();
    double wave_dt = 0.0;
    wave_cmd->add_option("--dt", wave_dt, "Internal time step (default: CFL-derived)");
    wave_cmd->add_option("--initial-displacement", wave.initial_displacement)->capture_default_str();
    wave_cmd->add_option("--initial-velocity", wave.initial_velocity)->capture_default_str();
    wave_cmd->add_option("--out", wave_out, "Output GRD file")->required();

    BurgersSetup burgers;
    std::string burgers_out;
    auto* burgers_cmd = sim->add_subcommand("burgers", "u_t + th1 u u_x + th2 u_xx = 0, periodic in x");
    burgers_cmd->add_option("--theta1", burgers.theta1)->capture_default_str();
    burgers_cmd->add_option("--theta2", burgers.theta2)->capture_default_str();
    burgers_cmd->add_option("--x-min", burgers.x_min)->capture_default_str();
    burgers_cmd->add_option("--x-max", burgers.x_max)->capture_default_str();
    burgers_cmd->add_option("--nx", burgers.nx)->capture_default_str();
    burgers_cmd->add_option("--nt", burgers.nt)->capture_default_str();
    burgers_cmd->add_option("--t-end", burgers.t_end)->capture_default_str();
    burgers_cmd->add_option("--refine", burgers.refine, "Internal nodes per output cell")->capture_default_str();
    burgers_cmd->add_option("--cfl", burgers.cfl)->capture_default_str();
    burgers_cmd->add_option("--initial", burgers.initial_profile, "Initial profile in x")->capture_default_str();
    burgers_cmd->add_option("--out", burgers_out, "Output GRD file")->required();

    EstimationFlags fit_flags;
    bool trace = false;
    auto* fit_cmd = app.add_subcommand("fit", "Estimate coefficients from one dataset");
    add_estimation_flags(fit_cmd, fit_flags);
    fit_cmd->add_flag("--trace", trace, "Write theta per iteration to <out>.trace.csv");

    EstimationFlags boot_flags;
    BootstrapFlags boot;
    auto* boot_cmd = app.add_subcommand("bootstrap", "Repeat the estimation over noise replicates");
    add_estimation_flags(boot_cmd, boot_flags);
    boot_cmd->add_option("--replicates", boot.replicates)->capture_default_str();
    boot_cmd->add_option("--noise", boot.noise, "Noise level as a fraction of the field's sd")->capture_default_str();
    boot_cmd->add_option("--mode", boot.mode, "fresh or residual")->capture_default_str();
    boot_cmd->add_option("--seed", boot.seed, "Base seed; replicate i uses seed + i")->capture_default_str();
    boot_cmd->add_option("--jobs", boot.jobs, "Worker threads")->capture_default_str();

    ReconstructFlags rec;
    auto* rec_cmd = app.add_subcommand("reconstruct", "Evaluate a fitted spline surface");
    rec_cmd->add_option("--fit", rec.fit, "Fit result JSON")->required();
    rec_cmd->add_option("--data", rec.data, "GRD whose grid is used when --points is absent");
    rec_cmd->add_option("--points", rec.points, "CSV of points or a GRD grid");
    rec_cmd->add_option("--out", rec.out, "Output GRD file")->required();

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a GRD file");
    inspect_cmd->add_option("--data", inspect_path, "GRD file")->required();

    try {
        app.parse(reversed_args(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        if (duffing_cmd->parsed()) {
            write_grid(simulate_ode(duffing.setup), std::filesystem::path(duffing.out));
        } else if (vdp_cmd->parsed()) {
            write_grid(simulate_ode(vdp.setup), std::filesystem::path(vdp.out));
        } else if (wave_cmd->parsed()) {
            if (wave_cmd->count("--dt") > 0) {
                wave.dt = wave_dt;
            }
            write_grid(simulate_wave2d(wave), std::filesystem::path(wave_out));
        } else if (burgers_cmd->parsed()) {
            write_grid(simulate_burgers(burgers), std::filesystem::path(burgers_out));
        } else if (fit_cmd->parsed()) {
            return run_fit(fit_flags, trace, out);
        } else if (boot_cmd->parsed()) {
            return run_bootstrap(boot_flags, boot, out);
        } else if (rec_cmd->parsed()) {
            return run_reconstruct(rec, out);
        } else if (inspect_cmd->parsed()) {
            return run_inspect(inspect_path, out);
        }
        return kSuccess;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const NotConverged& e) {
        err << "error: " << e.what() << "\n";
        return kNotConverged;
    } catch (const BootstrapError& e) {
        err << "error: " << e.what() << "\n";
        return kNotConverged;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const SimulationError& e) {
        err << "simulation failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const ParseError& e) {
        err << "model error: " << e.what() << "\n";
        return kDataError;
    } catch (const FormatError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const MismatchError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const DomainError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kNumerical;
    }
}

}  // namespace snape::cli
