#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "snape/field_data.hpp"
#include "snape/model.hpp"
#include "snape/solver.hpp"

namespace snape {

/// Gaussian noise with sd = level * population sd of each clean field.
struct NoiseSpec {
    double level = 0.0;  ///< 0.10 means 10% noise
    std::uint64_t seed = 0;

    /// Throws ArgumentError for a negative or non-finite level.
    void validate() const;
};

/// Adds i.i.d. noise to every field, fields drawn in order from one stream.
/// Throws ArgumentError on non-finite clean values.
FieldData add_noise(const FieldData& clean, const NoiseSpec& noise);

enum class BootstrapMode {
    FreshNoise,  ///< replicate i fits clean + noise(seed + i)
    Residual,    ///< replicate i refits the fitted surface plus residuals resampled with seed + i
};

std::string to_string(BootstrapMode mode);
/// Accepts "fresh" and "residual"; throws ArgumentError otherwise.
BootstrapMode parse_bootstrap_mode(const std::string& text);

struct BootstrapOptions {
    BootstrapMode mode = BootstrapMode::FreshNoise;
    int replicates = 10;
    NoiseSpec noise;  ///< level is ignored in residual mode
    int jobs = 1;     ///< worker threads; results do not depend on it
};

struct BootstrapResult {
    BootstrapMode mode = BootstrapMode::FreshNoise;
    std::vector<std::string> theta_names;
    std::vector<Eigen::VectorXd> replicates;  ///< NaN entries for replicates that threw
    std::vector<bool> converged;
    std::vector<std::uint64_t> seeds;
    std::vector<int> iterations;
    std::vector<std::string> failures;  ///< empty string for successful replicates
    Eigen::VectorXd theta_mean;         ///< over converged replicates
    Eigen::VectorXd cov_percent;        ///< 100 * sample sd / |mean| over converged replicates
};

struct ReplicateSummary {
    Eigen::VectorXd mean;
    Eigen::VectorXd cov_percent;
};

/// Elementwise mean and coefficient of variation (n - 1 denominator; 0 for a
/// single replicate). Throws ArgumentError for an empty or ragged set.
ReplicateSummary summarize(const std::vector<Eigen::VectorXd>& thetas);

/// Repeated estimation on the grid of `data`. The model's target field and
/// exogenous fields are taken from `data`. Throws BootstrapError when more
/// than half of the replicates fail.
BootstrapResult bootstrap(const FieldData& data, const ModelSpec& model, const BasisSpec& spec,
                          const AdmmConfig& cfg, const BootstrapOptions& options);

/// Exogenous fields of `model` extracted from `data`. Throws MismatchError if one is absent.
ExogenousFields exogenous_from(const FieldData& data, const ModelSpec& model);

}  // namespace snape
