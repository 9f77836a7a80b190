#pragma once

// Sweeps over loss hyperparameters and the statistics used to compare them:
// pointwise ROC aggregation, degree-2 polynomial fits with R^2, and the
// paired t-test.

#include "vslct/data.hpp"
#include "vslct/metrics.hpp"
#include "vslct/nn.hpp"
#include "vslct/training.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vslct {

// ---------------------------------------------------------------------------
// ROC aggregation

struct RocAggregate {
    Vector grid;
    Vector mean, min, max, stddev; ///< stddev uses the n-1 denominator
};

/// Each curve is interpolated on `grid` and summarized pointwise.
RocAggregate aggregate_roc(const std::vector<RocCurve>& curves, const Vector& grid);

/// 101 uniform points on [0, 1] merged with log-spaced points from 1e-3 to 1e-2.
Vector default_fpr_grid();

// ---------------------------------------------------------------------------
// Polynomial fits

struct PolyFit {
    /// Exponent of each feature in each design column; row 0 is the intercept.
    Eigen::MatrixXi exponents;
    Vector coefficients;
    double r2{0};
    double ss_res{0};
    double ss_tot{0};
    bool constant_target{false}; ///< target constant up to rounding; r2 is reported as 1
};

/// All monomials of total degree <= `degree` in the feature columns.
Matrix polynomial_design(const Matrix& features, int degree, Eigen::MatrixXi* exponents = nullptr);

/// Least-squares fit of `target` on polynomial features (in-sample R^2).
/// Throws DegenerateError for a rank-deficient design.
PolyFit polyfit_r2(const Matrix& features, const Vector& target, int degree = 2);

// ---------------------------------------------------------------------------
// Paired t-test

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

/// CDF of Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

struct PairedTTest {
    double mean_diff{0}; ///< mean of a - b
    double t{0};
    double df{0};
    double p_value{1}; ///< two-sided
    Index a_greater{0};
    Index b_greater{0};
};

/// Throws DegenerateError for n < 2 or zero variance of the differences.
PairedTTest paired_t_test(const Vector& a, const Vector& b);

// ---------------------------------------------------------------------------
// Sweeps

enum class Method { Baseline, Lct };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct SweepSpec {
    Method method{Method::Baseline};
    std::vector<double> omegas{0.5};
    std::vector<double> gammas{0.0};
    std::vector<double> taus{0.0}; ///< baseline only
    std::vector<double> h_bs{0.0}; ///< LCT only; lambda = tau on [lambda_a, lambda_b]
    double lambda_a{0};
    double lambda_b{3};
    double eval_tau{3}; ///< LCT evaluation lambda
    ModelConfig model;
    TrainConfig train;
    std::shared_ptr<const Dataset> train_data;
    std::shared_ptr<const Dataset> test_data;
    std::vector<std::uint64_t> seeds{0};
    unsigned workers{1};
    /// When set, one manifest per run is written here and completed runs are skipped on rerun.
    std::optional<std::filesystem::path> output_dir;

    void validate() const;
};

struct SweepRecord {
    Method method{Method::Baseline};
    double omega{0.5};
    double gamma{0};
    double tau{0}; ///< baseline tau
    double h_b{0}; ///< LCT density height at lambda_b
    std::uint64_t seed{0};
    bool ok{false};
    std::string error;
    RocCurve roc;
    double auc{0};
    double accuracy{0}; ///< at t = 0.5
    double tpr{0};      ///< at t = 0.5

    /// Stable identifier of (method, hyperparameters, seed); also the manifest file stem.
    std::string key() const;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    Index reused{0}; ///< records loaded from existing manifests

    std::vector<const SweepRecord*> successful() const;
};

/// Records in spec order: seeds outermost, then omega, gamma, tau (or h_b).
std::vector<SweepRecord> expand_sweep(const SweepSpec& spec);

/// Trains and evaluates one configuration.
SweepRecord run_one(const SweepSpec& spec, SweepRecord record);

/// Runs every configuration, `spec.workers` at a time. Failures are recorded, not thrown.
SweepResult run_sweep(const SweepSpec& spec);

} // namespace vslct
