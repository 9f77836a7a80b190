#include "vslct/training.hpp"

#include "vslct/random.hpp"

#include <cmath>
#include <numeric>

namespace vslct {

void TrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(learning_rate > 0)) throw ConfigError("train.learning_rate must be > 0");
    if (!(momentum >= 0 && momentum < 1)) throw ConfigError("train.momentum must lie in [0, 1)");
    if (!(max_grad_norm > 0)) throw ConfigError("train.max_grad_norm must be > 0");
    for (std::size_t i = 0; i < milestones.size(); ++i) {
        if (!(milestones[i].factor > 0)) throw ConfigError("train.milestones: factors must be > 0");
        if (i > 0 && milestones[i].epoch < milestones[i - 1].epoch)
            throw ConfigError("train.milestones must be ordered by epoch");
    }
}

double learning_rate_at(const TrainConfig& cfg, int epoch) {
    double lr = cfg.learning_rate;
    for (const auto& m : cfg.milestones)
        if (epoch >= m.epoch) lr *= m.factor;
    return lr;
}

std::string to_string(LambdaRole role) {
    switch (role) {
    case LambdaRole::Tau: return "tau";
    case LambdaRole::Omega: return "omega";
    case LambdaRole::Gamma: return "gamma";
    case LambdaRole::All: return "all";
    }
    return "tau";
}

LambdaRole lambda_role_from_string(const std::string& name) {
    if (name == "tau") return LambdaRole::Tau;
    if (name == "omega") return LambdaRole::Omega;
    if (name == "gamma") return LambdaRole::Gamma;
    if (name == "all") return LambdaRole::All;
    throw ConfigError("unknown lambda role '" + name + "' (expected tau, omega, gamma or all)");
}

double LambdaRange::draw(double u) const {
    if (is_point_mass()) return a;
    return sample(make_linear(a, b, h_b), u);
}

void LambdaRange::validate() const {
    if (is_point_mass()) return;
    (void)make_linear(a, b, h_b);
}

VsParams LctConfig::loss_params(const Vector& lambda) const {
    if (lambda.size() != lambda_dim())
        throw ConfigError("lambda has dimension " + std::to_string(lambda.size()) + ", role '" + to_string(role) +
                          "' needs " + std::to_string(lambda_dim()));
    VsParams p = constants;
    switch (role) {
    case LambdaRole::Tau: p.tau = lambda(0); break;
    case LambdaRole::Omega: p.omega = lambda(0); break;
    case LambdaRole::Gamma: p.gamma = lambda(0); break;
    case LambdaRole::All:
        p.omega = lambda(0);
        p.gamma = lambda(1);
        p.tau = lambda(2);
        break;
    }
    return p;
}

void LctConfig::validate() const {
    if (static_cast<Index>(ranges.size()) != lambda_dim())
        throw ConfigError("lct: role '" + to_string(role) + "' needs " + std::to_string(lambda_dim()) +
                          " lambda ranges, got " + std::to_string(ranges.size()));
    for (const auto& r : ranges) r.validate();
    constants.validate();
    // Every value a range can produce must be a valid hyperparameter.
    Vector lo(lambda_dim()), hi(lambda_dim());
    for (Index i = 0; i < lambda_dim(); ++i) {
        lo(i) = ranges[static_cast<std::size_t>(i)].a;
        hi(i) = ranges[static_cast<std::size_t>(i)].b;
    }
    loss_params(lo).validate();
    loss_params(hi).validate();
    (void)loss_params(eval_lambda);
}

Model make_model(const ModelConfig& config, std::uint64_t seed) {
    Rng rng = make_rng(seed, Stream::Init);
    return init_model<double>(config, rng);
}

namespace {

struct BatchChoice {
    Vector film_input;
    VsParams loss_params;
};

template <typename Choose>
TrainResult run_training(Model model, const Dataset& train, const TrainConfig& cfg, Choose&& choose,
                         const BatchHook& hook) {
    cfg.validate();
    train.validate();
    if (train.dim() != model.config.input_dim)
        throw ConfigError("dataset has " + std::to_string(train.dim()) + " features, model expects " +
                          std::to_string(model.config.input_dim));
    const double beta = train.beta();
    auto optimizer = OptimizerState<double>::for_model(model, cfg.learning_rate, cfg.momentum, cfg.max_grad_norm);
    Rng shuffle_rng = make_rng(cfg.seed, Stream::Shuffle);

    std::vector<Index> order(static_cast<std::size_t>(train.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::vector<Index> rows;
    std::vector<int> labels;
    TrainStats stats;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        optimizer.learning_rate = learning_rate_at(cfg, epoch);
        shuffle_in_place(order, shuffle_rng);
        double epoch_loss = 0;
        Index batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(end));
            labels.resize(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = train.labels(rows[i]);
            const Matrix x = train.features(rows, Eigen::all).transpose();

            const BatchChoice choice = choose(stats);
            LossAndGrad<double> lg;
            try {
                lg = backward_batch<double>(model, x, labels, choice.film_input, choice.loss_params, beta);
            } catch (const DomainError& e) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                        std::to_string(batches) + ": " + e.what(),
                                    epoch, batches);
            }
            if (!std::isfinite(lg.loss))
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                        std::to_string(batches),
                                    epoch, batches);
            if (hook)
                hook(BatchRecord{epoch, batches, stats.steps, optimizer.learning_rate, choice.film_input,
                                 choice.loss_params, lg.loss});
            sgd_step(optimizer, model, lg.grad);
            epoch_loss += lg.loss;
            ++batches;
            ++stats.steps;
        }
        stats.last_epoch_loss = batches > 0 ? epoch_loss / static_cast<double>(batches) : 0.0;
    }
    return {std::move(model), stats};
}

} // namespace

TrainResult train_baseline(Model model, const Dataset& train, const VsParams& params, const TrainConfig& cfg,
                           const std::optional<Vector>& conditioning, const BatchHook& hook) {
    params.validate();
    const Vector film_input = conditioning ? *conditioning : Vector::Zero(model.config.lambda_dim);
    if (film_input.size() != model.config.lambda_dim)
        throw ConfigError("baseline conditioning vector has the wrong dimension");
    auto choose = [&](TrainStats&) { return BatchChoice{film_input, params}; };
    return run_training(std::move(model), train, cfg, choose, hook);
}

TrainResult train_lct(Model model, const Dataset& train, const LctConfig& lct, const TrainConfig& cfg,
                      const BatchHook& hook) {
    lct.validate();
    if (model.config.lambda_dim != lct.lambda_dim())
        throw ConfigError("model lambda_dim " + std::to_string(model.config.lambda_dim) + " does not match role '" +
                          to_string(lct.role) + "' (" + std::to_string(lct.lambda_dim()) + ")");
    Rng lambda_rng = make_rng(cfg.seed, Stream::Lambda);
    Vector lambda(lct.lambda_dim());
    auto choose = [&](TrainStats& stats) {
        for (Index i = 0; i < lambda.size(); ++i)
            lambda(i) = lct.ranges[static_cast<std::size_t>(i)].draw(uniform01(lambda_rng));
        ++stats.lambda_draws;
        return BatchChoice{lambda, lct.loss_params(lambda)};
    };
    return run_training(std::move(model), train, cfg, choose, hook);
}

LabeledScores evaluate(const Model& model, const Dataset& test, const Vector& eval_lambda) {
    test.validate();
    const auto cache = forward_batch<double>(model, test.features.transpose(), eval_lambda);
    LabeledScores out;
    out.scores.resize(test.size());
    for (Index i = 0; i < test.size(); ++i) out.scores(i) = sigmoid(cache.logits(1, i) - cache.logits(0, i));
    out.labels = test.labels;
    return out;
}

LabeledScores evaluate_baseline(const Model& model, const Dataset& test) {
    return evaluate(model, test, Vector::Zero(model.config.lambda_dim));
}

} // namespace vslct
