#pragma once

// Experiment configuration as read from JSON. Every section is optional and
// falls back to the defaults below; unknown keys are rejected with their
// dotted path.

#include "vslct/analysis.hpp"
#include "vslct/data.hpp"
#include "vslct/io.hpp"
#include "vslct/nn.hpp"
#include "vslct/training.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vslct {

struct DatasetSection {
    std::string source{"synthetic"}; ///< "synthetic" or "csv"
    std::optional<std::filesystem::path> path;      ///< csv source
    std::optional<std::filesystem::path> test_path; ///< csv source; otherwise split from `path`
    Index n0{2500};
    Index n1{2500};
    Index dim{2};
    double separation{2.5};
    std::uint64_t seed{7};
    Index test_n0{500};
    Index test_n1{500};
    std::optional<double> target_beta{100.0}; ///< minority subsampling of the training split

    void validate() const;
};

struct LossSection {
    VsParams params;
    std::optional<LctConfig> lct; ///< present when a lambda role is configured
};

struct SweepSection {
    Method method{Method::Baseline};
    std::vector<double> omegas{0.5};
    std::vector<double> gammas{0.0};
    std::vector<double> taus{0.0};
    std::vector<double> h_bs{0.0};
    double lambda_a{0};
    double lambda_b{3};
    double eval_tau{3};
    std::vector<std::uint64_t> seeds{1};
    unsigned workers{1};
};

struct ExperimentConfig {
    DatasetSection dataset;
    ModelConfig model;
    LossSection loss;
    TrainConfig train;
    SweepSection sweep;
    std::optional<std::filesystem::path> output;

    /// Cross-section checks; throws ConfigError or DomainError naming the key.
    void validate() const;
};

/// Throws ConfigError naming the first unknown or mistyped key.
ExperimentConfig experiment_config_from_json(const Json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
Json to_json(const ExperimentConfig& c);

/// Train and test splits described by the dataset section.
std::pair<Dataset, Dataset> load_datasets(const DatasetSection& d);

/// Sweep spec from the config; datasets are attached by the caller.
SweepSpec sweep_spec(const ExperimentConfig& c);

} // namespace vslct
