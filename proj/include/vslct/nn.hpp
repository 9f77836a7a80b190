#pragma once

// Dense feed-forward classifier with one FiLM conditioning block.
//
//   x -> [W_l a + b_l, relu]* -> f -> f~ = sigma * f + mu -> head -> (z0, z1)
//   lambda -> layer1 -> relu -> layer2 -> mu (and sigma - 1 in affine mode)
//
// Batches are stored one sample per column. Gradients reuse the model type,
// so every tensor has a twin of the same shape.

#include "vslct/loss_family.hpp"
#include "vslct/types.hpp"

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vslct {

enum class FilmMode {
    AdditiveOnly, ///< layer2 emits mu; sigma is fixed at 1
    Affine,       ///< layer2 emits [mu; sigma - 1]
};

struct ModelConfig {
    Index input_dim{2};
    std::vector<Index> hidden{64, 64}; ///< trunk widths; the last one is the FiLM channel count
    Index lambda_dim{1};
    Index film_hidden{128};
    FilmMode film_mode{FilmMode::AdditiveOnly};

    Index channels() const { return hidden.empty() ? input_dim : hidden.back(); }

    void validate() const {
        if (input_dim < 1) throw ConfigError("model: input_dim must be >= 1");
        if (lambda_dim < 1) throw ConfigError("model: lambda_dim must be >= 1");
        if (film_hidden < 1) throw ConfigError("model: film_hidden must be >= 1");
        if (hidden.empty()) throw ConfigError("model: at least one hidden layer is required");
        for (Index w : hidden)
            if (w < 1) throw ConfigError("model: hidden widths must be >= 1");
    }
};

template <typename Scalar>
struct DenseLayer {
    typename Types<Scalar>::Matrix weights; ///< out x in
    typename Types<Scalar>::Vector biases;  ///< out

    DenseLayer() = default;
    DenseLayer(Index out, Index in)
        : weights(Types<Scalar>::Matrix::Zero(out, in)), biases(Types<Scalar>::Vector::Zero(out)) {}

    Index in_dim() const { return weights.cols(); }
    Index out_dim() const { return weights.rows(); }
};

template <typename Scalar>
struct FilmBlock {
    DenseLayer<Scalar> layer1; ///< lambda_dim -> film_hidden
    DenseLayer<Scalar> layer2; ///< film_hidden -> C (additive) or 2C (affine)
    FilmMode mode{FilmMode::AdditiveOnly};

    Index channels() const {
        return mode == FilmMode::Affine ? layer2.out_dim() / 2 : layer2.out_dim();
    }
    Index weight_count() const { return layer1.weights.size() + layer2.weights.size(); }
};

template <typename Scalar>
struct MlpFilmModel {
    ModelConfig config;
    std::vector<DenseLayer<Scalar>> trunk;
    FilmBlock<Scalar> film;
    DenseLayer<Scalar> head; ///< C -> 2 logits

    /// All tensors allocated with the right shapes and filled with zeros.
    static MlpFilmModel zeros(const ModelConfig& config) {
        config.validate();
        MlpFilmModel m;
        m.config = config;
        Index in = config.input_dim;
        for (Index w : config.hidden) {
            m.trunk.emplace_back(w, in);
            in = w;
        }
        const Index c = config.channels();
        m.film.mode = config.film_mode;
        m.film.layer1 = DenseLayer<Scalar>(config.film_hidden, config.lambda_dim);
        m.film.layer2 = DenseLayer<Scalar>(config.film_mode == FilmMode::Affine ? 2 * c : c, config.film_hidden);
        m.head = DenseLayer<Scalar>(2, c);
        return m;
    }
};

using Model = MlpFilmModel<double>;

/// Calls fn(name, tensor_0, tensor_1, ...) for every parameter tensor of the
/// given same-shaped models, in a fixed order.
template <typename Fn, typename First, typename... Rest>
void for_each_tensor(Fn&& fn, First& first, Rest&... rest) {
    for (std::size_t l = 0; l < first.trunk.size(); ++l) {
        const std::string prefix = "trunk." + std::to_string(l);
        fn(prefix + ".weight", first.trunk[l].weights, rest.trunk[l].weights...);
        fn(prefix + ".bias", first.trunk[l].biases, rest.trunk[l].biases...);
    }
    fn(std::string("film.layer1.weight"), first.film.layer1.weights, rest.film.layer1.weights...);
    fn(std::string("film.layer1.bias"), first.film.layer1.biases, rest.film.layer1.biases...);
    fn(std::string("film.layer2.weight"), first.film.layer2.weights, rest.film.layer2.weights...);
    fn(std::string("film.layer2.bias"), first.film.layer2.biases, rest.film.layer2.biases...);
    fn(std::string("head.weight"), first.head.weights, rest.head.weights...);
    fn(std::string("head.bias"), first.head.biases, rest.head.biases...);
}

template <typename Scalar>
Index parameter_count(const MlpFilmModel<Scalar>& m) {
    Index n = 0;
    for_each_tensor([&n](const std::string&, const auto& t) { n += t.size(); }, m);
    return n;
}

template <typename Scalar>
typename Types<Scalar>::Vector flatten(const MlpFilmModel<Scalar>& m) {
    typename Types<Scalar>::Vector out(parameter_count(m));
    Index pos = 0;
    for_each_tensor(
        [&](const std::string&, const auto& t) {
            out.segment(pos, t.size()) = t.reshaped();
            pos += t.size();
        },
        m);
    return out;
}

template <typename Scalar>
void unflatten(MlpFilmModel<Scalar>& m, const typename Types<Scalar>::Vector& values) {
    if (values.size() != parameter_count(m)) throw ConfigError("unflatten: size mismatch");
    Index pos = 0;
    for_each_tensor(
        [&](const std::string&, auto& t) {
            t.reshaped() = values.segment(pos, t.size());
            pos += t.size();
        },
        m);
}

/// Fan-in scaled uniform init U(-1/sqrt(in), 1/sqrt(in)) for trunk, head and
/// FiLM layer1. FiLM layer2 stays zero, so a fresh model ignores lambda.
template <typename Scalar, typename Rng>
MlpFilmModel<Scalar> init_model(const ModelConfig& config, Rng& rng) {
    auto m = MlpFilmModel<Scalar>::zeros(config);
    auto fill = [&rng](DenseLayer<Scalar>& layer) {
        const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(layer.in_dim()));
        std::uniform_real_distribution<Scalar> dist(-bound, bound);
        for (Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = dist(rng);
        for (Index i = 0; i < layer.biases.size(); ++i) layer.biases(i) = dist(rng);
    };
    for (auto& layer : m.trunk) fill(layer);
    fill(m.film.layer1);
    fill(m.head);
    return m;
}

template <typename Scalar>
struct FilmCoefficients {
    typename Types<Scalar>::Vector hidden_pre;
    typename Types<Scalar>::Vector hidden;
    typename Types<Scalar>::Vector mu;
    typename Types<Scalar>::Vector sigma;
};

template <typename Scalar>
FilmCoefficients<Scalar> film_coefficients(const FilmBlock<Scalar>& film,
                                           const typename Types<Scalar>::Vector& lambda) {
    if (lambda.size() != film.layer1.in_dim())
        throw ConfigError("lambda has dimension " + std::to_string(lambda.size()) + ", FiLM block expects " +
                          std::to_string(film.layer1.in_dim()));
    FilmCoefficients<Scalar> out;
    out.hidden_pre = film.layer1.weights * lambda + film.layer1.biases;
    out.hidden = out.hidden_pre.cwiseMax(Scalar(0));
    const typename Types<Scalar>::Vector raw = film.layer2.weights * out.hidden + film.layer2.biases;
    const Index c = film.channels();
    out.mu = raw.head(c);
    if (film.mode == FilmMode::Affine)
        out.sigma = raw.tail(c).array() + Scalar(1);
    else
        out.sigma = Types<Scalar>::Vector::Ones(c);
    return out;
}

/// Intermediate values of a batch forward pass, kept for backpropagation.
template <typename Scalar>
struct ForwardCache {
    std::vector<typename Types<Scalar>::Matrix> pre;  ///< trunk pre-activations
    std::vector<typename Types<Scalar>::Matrix> act;  ///< act[0] is the input, act[l+1] = relu(pre[l])
    FilmCoefficients<Scalar> film;
    typename Types<Scalar>::Matrix modulated;         ///< f~
    typename Types<Scalar>::Matrix logits;            ///< 2 x n; row 0 is z0
};

/// Forward pass on a batch (one sample per column) under a single lambda.
template <typename Scalar>
ForwardCache<Scalar> forward_batch(const MlpFilmModel<Scalar>& m, const typename Types<Scalar>::Matrix& x,
                                   const typename Types<Scalar>::Vector& lambda) {
    if (x.rows() != m.config.input_dim)
        throw ConfigError("input has dimension " + std::to_string(x.rows()) + ", model expects " +
                          std::to_string(m.config.input_dim));
    ForwardCache<Scalar> cache;
    cache.act.reserve(m.trunk.size() + 1);
    cache.pre.reserve(m.trunk.size());
    cache.act.push_back(x);
    for (const auto& layer : m.trunk) {
        typename Types<Scalar>::Matrix z = layer.weights * cache.act.back();
        z.colwise() += layer.biases;
        cache.act.push_back(z.cwiseMax(Scalar(0)));
        cache.pre.push_back(std::move(z));
    }
    cache.film = film_coefficients(m.film, lambda);
    cache.modulated = cache.act.back();
    cache.modulated.array().colwise() *= cache.film.sigma.array();
    cache.modulated.colwise() += cache.film.mu;
    cache.logits = m.head.weights * cache.modulated;
    cache.logits.colwise() += m.head.biases;
    return cache;
}

template <typename Scalar>
LogitPair<Scalar> forward(const MlpFilmModel<Scalar>& m, const typename Types<Scalar>::Vector& x,
                          const typename Types<Scalar>::Vector& lambda) {
    const auto cache = forward_batch<Scalar>(m, x, lambda);
    return {cache.logits(0, 0), cache.logits(1, 0)};
}

template <typename Scalar>
struct LossAndGrad {
    Scalar loss{0}; ///< mean VS loss over the batch
    MlpFilmModel<Scalar> grad;
};

/// Mean VS loss over the batch and its exact gradient for every parameter.
template <typename Scalar>
LossAndGrad<Scalar> backward_batch(const MlpFilmModel<Scalar>& m, const typename Types<Scalar>::Matrix& x,
                                   std::span<const int> labels, const typename Types<Scalar>::Vector& lambda,
                                   const VsHyperParams<Scalar>& loss_params, Scalar beta) {
    using Mat = typename Types<Scalar>::Matrix;
    using Vec = typename Types<Scalar>::Vector;
    const Index n = x.cols();
    if (static_cast<Index>(labels.size()) != n) throw ConfigError("backward: label count differs from batch size");
    if (n == 0) throw ConfigError("backward: empty batch");

    const auto cache = forward_batch<Scalar>(m, x, lambda);
    LossAndGrad<Scalar> out{Scalar(0), MlpFilmModel<Scalar>::zeros(m.config)};
    auto& g = out.grad;

    Mat d_logits(2, n);
    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
    for (Index i = 0; i < n; ++i) {
        const LogitPair<Scalar> z{cache.logits(0, i), cache.logits(1, i)};
        out.loss += vs_loss_binary(labels[i], z, loss_params, beta);
        const auto dz = vs_loss_grad_logits(labels[i], z, loss_params, beta);
        d_logits(0, i) = dz.z0 * inv_n;
        d_logits(1, i) = dz.z1 * inv_n;
    }
    out.loss *= inv_n;

    g.head.weights.noalias() = d_logits * cache.modulated.transpose();
    g.head.biases = d_logits.rowwise().sum();
    const Mat d_mod = m.head.weights.transpose() * d_logits;

    const Mat& f = cache.act.back();
    const Vec d_mu = d_mod.rowwise().sum();
    Vec d_raw;
    if (m.film.mode == FilmMode::Affine) {
        d_raw.resize(2 * d_mu.size());
        d_raw.head(d_mu.size()) = d_mu;
        d_raw.tail(d_mu.size()) = d_mod.cwiseProduct(f).rowwise().sum();
    } else {
        d_raw = d_mu;
    }
    g.film.layer2.weights.noalias() = d_raw * cache.film.hidden.transpose();
    g.film.layer2.biases = d_raw;
    const Vec d_hidden_pre = (m.film.layer2.weights.transpose() * d_raw)
                                 .cwiseProduct((cache.film.hidden_pre.array() > Scalar(0)).matrix().template cast<Scalar>());
    g.film.layer1.weights.noalias() = d_hidden_pre * lambda.transpose();
    g.film.layer1.biases = d_hidden_pre;

    Mat d_act = d_mod;
    d_act.array().colwise() *= cache.film.sigma.array();
    for (std::size_t l = m.trunk.size(); l-- > 0;) {
        Mat d_pre = d_act.cwiseProduct((cache.pre[l].array() > Scalar(0)).matrix().template cast<Scalar>());
        g.trunk[l].weights.noalias() = d_pre * cache.act[l].transpose();
        g.trunk[l].biases = d_pre.rowwise().sum();
        if (l > 0) d_act.noalias() = m.trunk[l].weights.transpose() * d_pre;
    }
    return out;
}

/// Single-sample convenience wrapper around backward_batch.
template <typename Scalar>
LossAndGrad<Scalar> backward(const MlpFilmModel<Scalar>& m, const typename Types<Scalar>::Vector& x,
                             const typename Types<Scalar>::Vector& lambda, int y,
                             const VsHyperParams<Scalar>& loss_params, Scalar beta) {
    const int label[1] = {y};
    return backward_batch<Scalar>(m, x, std::span<const int>(label), lambda, loss_params, beta);
}

template <typename Scalar>
struct OptimizerState {
    MlpFilmModel<Scalar> velocity;
    Scalar momentum{0.9};
    Scalar learning_rate{0.1};
    Scalar max_norm{0.5}; ///< global gradient-norm clip; <= 0 disables clipping

    static OptimizerState for_model(const MlpFilmModel<Scalar>& m, Scalar learning_rate, Scalar momentum = 0.9,
                                    Scalar max_norm = 0.5) {
        return {MlpFilmModel<Scalar>::zeros(m.config), momentum, learning_rate, max_norm};
    }
};

template <typename Scalar>
Scalar global_norm(const MlpFilmModel<Scalar>& grads) {
    Scalar sq = 0;
    for_each_tensor([&sq](const std::string&, const auto& t) { sq += t.squaredNorm(); }, grads);
    return std::sqrt(sq);
}

struct SgdStepInfo {
    double grad_norm{0};
    double clip_scale{1}; ///< factor applied to the gradient before the update
};

/// Clip by global norm, then v <- momentum*v + g and p <- p - lr*v.
template <typename Scalar>
SgdStepInfo sgd_step(OptimizerState<Scalar>& state, MlpFilmModel<Scalar>& params, const MlpFilmModel<Scalar>& grads) {
    const Scalar norm = global_norm(grads);
    Scalar scale = 1;
    if (state.max_norm > 0 && norm > state.max_norm) scale = state.max_norm / norm;
    const Scalar momentum = state.momentum;
    const Scalar lr = state.learning_rate;
    for_each_tensor(
        [&](const std::string&, auto& p, auto& v, const auto& g) {
            if (p.rows() != g.rows() || p.cols() != g.cols() || p.rows() != v.rows() || p.cols() != v.cols())
                throw ConfigError("sgd_step: parameter, gradient and velocity shapes differ");
            v = momentum * v + scale * g;
            p -= lr * v;
        },
        params, state.velocity, grads);
    return {static_cast<double>(norm), static_cast<double>(scale)};
}

} // namespace vslct
