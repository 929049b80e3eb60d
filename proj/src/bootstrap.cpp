#include "snape/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <thread>

#include "snape/errors.hpp"

namespace snape {

namespace {

double population_sd(const std::vector<double>& v) {
    if (v.empty()) {
        return 0.0;
    }
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(v.size()));
}

Eigen::VectorXd target_vector(const FieldData& data, const ModelSpec& model) {
    const std::vector<double>& v = data.field(model.target);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct ReplicateOutcome {
    Eigen::VectorXd theta;
    bool converged = false;
    int iterations = 0;
    std::string failure;
};

template <class Fn>
void run_parallel(int count, int jobs, Fn&& fn) {
    const int workers = std::max(1, std::min(jobs, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                fn(i);
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
}

}  // namespace

void NoiseSpec::validate() const {
    if (!std::isfinite(level) || level < 0.0) {
        throw ArgumentError("noise level must be a non-negative finite fraction");
    }
}

FieldData add_noise(const FieldData& clean, const NoiseSpec& noise) {
    noise.validate();
    clean.validate();
    FieldData out = clean;
    std::mt19937_64 rng(noise.seed);
    for (auto& field : out.values) {
        for (double v : field) {
            if (!std::isfinite(v)) {
                throw ArgumentError("clean data contains non-finite values");
            }
        }
        if (noise.level == 0.0) {
            continue;
        }
        const double sigma = noise.level * population_sd(field);
        std::normal_distribution<double> dist(0.0, 1.0);
        for (double& v : field) {
            v += sigma * dist(rng);
        }
    }
    return out;
}

std::string to_string(BootstrapMode mode) {
    return mode == BootstrapMode::FreshNoise ? "fresh" : "residual";
}

BootstrapMode parse_bootstrap_mode(const std::string& text) {
    if (text == "fresh") {
        return BootstrapMode::FreshNoise;
    }
    if (text == "residual") {
        return BootstrapMode::Residual;
    }
    throw ArgumentError("unknown bootstrap mode '" + text + "' (expected fresh or residual)");
}

ReplicateSummary summarize(const std::vector<Eigen::VectorXd>& thetas) {
    if (thetas.empty()) {
        throw ArgumentError("no replicates to summarize");
    }
    const Eigen::Index m = thetas.front().size();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
    for (const auto& t : thetas) {
        if (t.size() != m) {
            throw ArgumentError("replicates differ in length");
        }
        sum += t;
    }
    const auto count = static_cast<double>(thetas.size());
    ReplicateSummary s;
    s.mean = sum / count;
    s.cov_percent = Eigen::VectorXd::Zero(m);
    if (thetas.size() < 2) {
        return s;
    }
    Eigen::VectorXd ss = Eigen::VectorXd::Zero(m);
    for (const auto& t : thetas) {
        ss += (t - s.mean).cwiseAbs2();
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        const double sd = std::sqrt(ss[j] / (count - 1.0));
        const double mean = std::abs(s.mean[j]);
        if (sd == 0.0) {
            s.cov_percent[j] = 0.0;
        } else {
            s.cov_percent[j] = mean > 0.0 ? 100.0 * sd / mean : std::numeric_limits<double>::infinity();
        }
    }
    return s;
}

ExogenousFields exogenous_from(const FieldData& data, const ModelSpec& model) {
    ExogenousFields out;
    for (const auto& name : model.exogenous) {
        out.emplace(name, FieldData::single(data.grid, name, data.field(name)));
    }
    return out;
}

BootstrapResult bootstrap(const FieldData& data, const ModelSpec& model, const BasisSpec& spec,
                          const AdmmConfig& cfg, const BootstrapOptions& options) {
    if (options.replicates < 1) {
        throw ArgumentError("bootstrap needs at least one replicate");
    }
    if (options.jobs < 1) {
        throw ArgumentError("bootstrap jobs must be at least 1");
    }
    options.noise.validate();
    cfg.validate();
    data.validate();

    const int reps = options.replicates;
    BootstrapResult result;
    result.mode = options.mode;
    result.theta_names = model.coefficient_names();
    result.seeds.resize(static_cast<std::size_t>(reps));
    for (int i = 0; i < reps; ++i) {
        result.seeds[static_cast<std::size_t>(i)] = options.noise.seed + static_cast<std::uint64_t>(i);
    }

    // Fields the replicates perturb: the target and, in fresh mode, the exogenous inputs.
    std::vector<std::string> used{model.target};
    used.insert(used.end(), model.exogenous.begin(), model.exogenous.end());
    FieldData base;
    base.grid = data.grid;
    for (const auto& name : used) {
        base.names.push_back(name);
        base.values.push_back(data.field(name));
    }

    const bool shared_builder = options.mode == BootstrapMode::Residual || model.exogenous.empty();
    std::unique_ptr<ConstraintBuilder> builder;
    if (shared_builder) {
        builder = std::make_unique<ConstraintBuilder>(model, spec, data.grid, exogenous_from(base, model));
    }

    Eigen::VectorXd surface;
    Eigen::VectorXd residuals;
    if (options.mode == BootstrapMode::Residual) {
        const Eigen::VectorXd y = target_vector(base, model);
        const FitResult fitted = fit(y, *builder, cfg);
        surface = builder->basis() * fitted.beta;
        residuals = y - surface;
    }

    std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(reps));
    auto run_one = [&](int i) {
        ReplicateOutcome& o = outcomes[static_cast<std::size_t>(i)];
        const std::uint64_t seed = result.seeds[static_cast<std::size_t>(i)];
        try {
            FitResult r;
            if (options.mode == BootstrapMode::FreshNoise) {
                const FieldData noisy = add_noise(base, NoiseSpec{options.noise.level, seed});
                const Eigen::VectorXd y = target_vector(noisy, model);
                if (shared_builder) {
                    r = fit(y, *builder, cfg);
                } else {
                    const ConstraintBuilder local(model, spec, noisy.grid, exogenous_from(noisy, model));
                    r = fit(y, local, cfg);
                }
            } else {
                std::mt19937_64 rng(seed);
                std::uniform_int_distribution<Eigen::Index> pick(0, residuals.size() - 1);
                Eigen::VectorXd y = surface;
                for (Eigen::Index k = 0; k < y.size(); ++k) {
                    y[k] += residuals[pick(rng)];
                }
                r = fit(y, *builder, cfg);
            }
            o.theta = r.theta;
            o.converged = r.converged;
            o.iterations = r.iterations;
            if (!r.converged) {
                o.failure = "not converged after " + std::to_string(r.iterations) + " iterations";
            }
        } catch (const NumericalError& e) {
            o.theta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(result.theta_names.size()),
                                                std::numeric_limits<double>::quiet_NaN());
            o.converged = false;
            o.failure = e.what();
        }
    };
    run_parallel(reps, options.jobs, run_one);

    std::vector<Eigen::VectorXd> good;
    for (auto& o : outcomes) {
        result.replicates.push_back(o.theta);
        result.converged.push_back(o.converged);
        result.iterations.push_back(o.iterations);
        result.failures.push_back(o.failure);
        if (o.converged) {
            good.push_back(o.theta);
        }
    }
    const int failed = reps - static_cast<int>(good.size());
    if (2 * failed > reps) {
        throw BootstrapError(std::to_string(failed) + " of " + std::to_string(reps) +
                             " bootstrap replicates failed; first failure: " +
                             *std::find_if(result.failures.begin(), result.failures.end(),
                                           [](const std::string& s) { return !s.empty(); }));
    }
    const ReplicateSummary s = summarize(good);
    result.theta_mean = s.mean;
    result.cov_percent = s.cov_percent;
    return result;
}

}  // namespace snape
