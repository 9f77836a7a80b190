#pragma once

// Single-loss training and loss-conditional training (LCT) of MlpFilmModel.
//
// One lambda is drawn per mini-batch. It is fed to the FiLM block and used as
// the loss hyperparameters for that same batch.

#include "vslct/data.hpp"
#include "vslct/lambda_dist.hpp"
#include "vslct/loss_family.hpp"
#include "vslct/metrics.hpp"
#include "vslct/nn.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vslct {

struct LrMilestone {
    int epoch{0};      ///< first epoch (0-based) at which the factor applies
    double factor{0.1};
};

struct TrainConfig {
    int epochs{200};
    Index batch_size{128};
    double learning_rate{0.1};
    std::vector<LrMilestone> milestones; ///< ordered by epoch; factors accumulate
    double momentum{0.9};
    double max_grad_norm{0.5};
    std::uint64_t seed{0};

    void validate() const;
};

/// Learning rate in effect during `epoch`.
double learning_rate_at(const TrainConfig& cfg, int epoch);

enum class LambdaRole { Tau, Omega, Gamma, All };

std::string to_string(LambdaRole role);
LambdaRole lambda_role_from_string(const std::string& name);

/// Sampling law for one conditioned hyperparameter. a == b is a point mass.
struct LambdaRange {
    double a{0};
    double b{3};
    double h_b{0};

    bool is_point_mass() const { return a == b; }
    /// Inverse-CDF draw for u in [0, 1].
    double draw(double u) const;
    void validate() const;
};

struct LctConfig {
    LambdaRole role{LambdaRole::Tau};
    /// One range per conditioned hyperparameter, in (omega, gamma, tau) order.
    std::vector<LambdaRange> ranges{LambdaRange{}};
    /// Values of the hyperparameters that are not conditioned.
    VsParams constants{VsParams::cross_entropy()};
    Vector eval_lambda{Vector::Constant(1, 3.0)};

    Index lambda_dim() const { return role == LambdaRole::All ? 3 : 1; }
    /// Loss hyperparameters for a conditioning vector.
    VsParams loss_params(const Vector& lambda) const;
    void validate() const;
};

/// What one optimizer step saw; passed to an optional observer.
struct BatchRecord {
    int epoch{0};
    Index batch{0}; ///< index within the epoch
    Index step{0};  ///< global step count before this step
    double learning_rate{0};
    Vector film_input;  ///< conditioning vector given to the network
    VsParams loss_params; ///< hyperparameters given to the loss
    double loss{0};
};

using BatchHook = std::function<void(const BatchRecord&)>;

struct TrainStats {
    Index steps{0};
    Index lambda_draws{0};
    double last_epoch_loss{0}; ///< mean batch loss of the final epoch
};

struct TrainResult {
    Model model;
    TrainStats stats;
};

/// A non-finite loss stopped training.
class TrainingError : public std::runtime_error {
public:
    TrainingError(const std::string& what, int epoch, Index batch)
        : std::runtime_error(what), epoch_(epoch), batch_(batch) {}
    int epoch() const noexcept { return epoch_; }
    Index batch() const noexcept { return batch_; }

private:
    int epoch_;
    Index batch_;
};

/// Fresh model from the run seed's init stream.
Model make_model(const ModelConfig& config, std::uint64_t seed);

/// Minimizes the mean VS loss at fixed hyperparameters. The FiLM input is the
/// constant `conditioning` (zeros when absent).
TrainResult train_baseline(Model model, const Dataset& train, const VsParams& params, const TrainConfig& cfg,
                           const std::optional<Vector>& conditioning = std::nullopt, const BatchHook& hook = {});

/// Loss-conditional training: a fresh lambda per mini-batch.
TrainResult train_lct(Model model, const Dataset& train, const LctConfig& lct, const TrainConfig& cfg,
                      const BatchHook& hook = {});

/// Minority softmax score per test sample at a fixed conditioning vector.
LabeledScores evaluate(const Model& model, const Dataset& test, const Vector& eval_lambda);

/// Baseline models are evaluated with the zero conditioning vector.
LabeledScores evaluate_baseline(const Model& model, const Dataset& test);

} // namespace vslct
