#pragma once

// Vector Scaling (VS) loss for binary problems: general softmax form,
// simplified two-logit form, gradients, and break-even geometry.
//
// Class 0 is the majority class, class 1 the minority class, and
// beta = n0 / n1 >= 1. All logarithms are natural.

#include "vslct/types.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace vslct {

template <typename Scalar>
struct VsHyperParams {
    Scalar omega{0.5}; ///< weight of the minority class; class 0 gets 1 - omega
    Scalar gamma{0};   ///< exponent of the multiplicative logit factor
    Scalar tau{0};     ///< scale of the additive logit factor

    /// Plain cross-entropy (both classes weighted 0.5).
    static VsHyperParams cross_entropy() { return {Scalar(0.5), Scalar(0), Scalar(0)}; }

    void validate() const {
        if (!(omega >= 0 && omega <= 1))
            throw DomainError("VsHyperParams: omega must lie in [0, 1]");
        if (!(gamma >= 0) || !std::isfinite(gamma))
            throw DomainError("VsHyperParams: gamma must be finite and >= 0");
        if (!(tau >= 0) || !std::isfinite(tau))
            throw DomainError("VsHyperParams: tau must be finite and >= 0");
    }
};

using VsParams = VsHyperParams<double>;

struct ClassCounts {
    std::int64_t n0{1}; ///< majority count
    std::int64_t n1{1}; ///< minority count

    void validate() const {
        if (n1 < 1 || n0 < n1)
            throw DomainError("ClassCounts: need n1 >= 1 and n0 >= n1");
    }
    double beta() const { return static_cast<double>(n0) / static_cast<double>(n1); }
    std::int64_t total() const { return n0 + n1; }
};

template <typename Scalar>
struct LogitPair {
    Scalar z0{0}; ///< majority-class logit
    Scalar z1{0}; ///< minority-class logit
};

/// Partial derivatives of the y=1 loss with respect to (omega, gamma, tau).
template <typename Scalar>
struct HyperPartials {
    Scalar d_omega{0};
    Scalar d_gamma{0};
    Scalar d_tau{0};
};

/// The break-even locus z1 = slope * z0 + intercept.
template <typename Scalar>
struct BreakEvenLine {
    Scalar slope{1};
    Scalar intercept{0};
    Scalar alpha_omega{0};

    Scalar z1_at(Scalar z0) const { return slope * z0 + intercept; }
};

/// log(1 + e^x) without overflow.
template <typename Scalar>
Scalar softplus(Scalar x) {
    using std::exp;
    using std::log1p;
    if (x > 0) return x + log1p(exp(-x));
    return log1p(exp(x));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
    using std::exp;
    if (x >= 0) return Scalar(1) / (Scalar(1) + exp(-x));
    const Scalar e = exp(x);
    return e / (Scalar(1) + e);
}

namespace detail {

inline void check_label(int y) {
    if (y != 0 && y != 1) throw DomainError("label must be 0 or 1, got " + std::to_string(y));
}

template <typename Scalar>
void check_beta(Scalar beta) {
    if (!(beta >= 1) || !std::isfinite(beta))
        throw DomainError("imbalance ratio beta must be finite and >= 1");
}

template <typename Scalar>
Scalar checked(Scalar value, const char* what) {
    if (!std::isfinite(value))
        throw DomainError(std::string(what) + ": non-finite result, inputs out of range");
    return value;
}

/// Margin m = z0 + tau*log(beta) - z1/beta^gamma; l(1,z) = omega*softplus(m).
template <typename Scalar>
Scalar minority_margin(const LogitPair<Scalar>& z, const VsHyperParams<Scalar>& p, Scalar beta) {
    using std::log;
    using std::pow;
    return z.z0 + p.tau * log(beta) - z.z1 / pow(beta, p.gamma);
}

} // namespace detail

/// VS loss from the softmax definition with per-class affine logit transforms
/// Delta_c = (n_c/n0)^gamma and iota_c = tau*log(n_c/n).
template <typename Scalar>
Scalar vs_loss_general(int y, const LogitPair<Scalar>& z, const VsHyperParams<Scalar>& p,
                       const ClassCounts& counts) {
    using std::log;
    using std::pow;
    detail::check_label(y);
    p.validate();
    counts.validate();
    const Scalar n0 = static_cast<Scalar>(counts.n0);
    const Scalar n1 = static_cast<Scalar>(counts.n1);
    const Scalar n = n0 + n1;
    const Scalar a0 = pow(n0 / n0, p.gamma) * z.z0 + p.tau * log(n0 / n);
    const Scalar a1 = pow(n1 / n0, p.gamma) * z.z1 + p.tau * log(n1 / n);
    // -log softmax_y = logsumexp(a) - a_y, folded so small losses keep full precision.
    const Scalar weight = y == 1 ? p.omega : Scalar(1) - p.omega;
    const Scalar other_minus_y = y == 1 ? a0 - a1 : a1 - a0;
    return detail::checked(weight * softplus(other_minus_y), "vs_loss_general");
}

/// Two-logit simplification:
///   l(0,z) = (1-omega) * softplus(z1/beta^gamma - z0 - tau*log(beta))
///   l(1,z) = omega     * softplus(z0 + tau*log(beta) - z1/beta^gamma)
template <typename Scalar>
Scalar vs_loss_binary(int y, const LogitPair<Scalar>& z, const VsHyperParams<Scalar>& p, Scalar beta) {
    detail::check_label(y);
    detail::check_beta(beta);
    const Scalar m = detail::minority_margin(z, p, beta);
    const Scalar value = y == 1 ? p.omega * softplus(m) : (Scalar(1) - p.omega) * softplus(-m);
    return detail::checked(value, "vs_loss_binary");
}

/// Gradient of vs_loss_binary with respect to (z0, z1).
template <typename Scalar>
LogitPair<Scalar> vs_loss_grad_logits(int y, const LogitPair<Scalar>& z, const VsHyperParams<Scalar>& p,
                                      Scalar beta) {
    using std::pow;
    detail::check_label(y);
    detail::check_beta(beta);
    const Scalar m = detail::minority_margin(z, p, beta);
    const Scalar inv_scale = Scalar(1) / pow(beta, p.gamma);
    if (y == 1) {
        const Scalar s = p.omega * sigmoid(m);
        return {s, -s * inv_scale};
    }
    const Scalar s = (Scalar(1) - p.omega) * sigmoid(-m);
    return {-s, s * inv_scale};
}

/// Closed-form partials of l(1,z) with respect to the hyperparameters.
/// d_gamma == (z1 / beta^gamma) * d_tau holds by construction of both terms.
template <typename Scalar>
HyperPartials<Scalar> vs_loss_partials_hyper(const LogitPair<Scalar>& z, const VsHyperParams<Scalar>& p,
                                             Scalar beta) {
    using std::log;
    using std::pow;
    detail::check_beta(beta);
    const Scalar m = detail::minority_margin(z, p, beta);
    const Scalar log_beta = log(beta);
    HyperPartials<Scalar> out;
    out.d_omega = softplus(m);
    out.d_tau = p.omega * sigmoid(m) * log_beta;
    out.d_gamma = (z.z1 / pow(beta, p.gamma)) * out.d_tau;
    return out;
}

namespace detail {

/// Bisection for the single sign change of a decreasing function `g`.
/// Starts on [-50, 50] and doubles the bracket until it straddles the root.
template <typename Scalar, typename Fn>
Scalar bisect_decreasing(Fn g, Scalar lo, Scalar hi) {
    while (g(lo) < 0) lo *= 2;
    while (g(hi) > 0) hi *= 2;
    for (int it = 0; it < 4096; ++it) {
        const Scalar mid = lo + (hi - lo) / 2;
        if (mid <= lo || mid >= hi) break;
        const Scalar v = g(mid);
        if (v == 0) return mid;
        if (v > 0)
            lo = mid;
        else
            hi = mid;
    }
    return std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
}

} // namespace detail

/// f(alpha) = (1+e^-alpha)^omega - (1+e^alpha)^(1-omega); continuous and strictly decreasing.
template <typename Scalar>
Scalar break_even_residual(Scalar alpha, Scalar omega) {
    using std::exp;
    using std::pow;
    return pow(Scalar(1) + exp(-alpha), omega) - pow(Scalar(1) + exp(alpha), Scalar(1) - omega);
}

/// The unique root alpha_omega of break_even_residual. Positive iff omega > 0.5.
template <typename Scalar>
Scalar break_even_alpha(Scalar omega) {
    if (!(omega > 0 && omega < 1)) throw DomainError("break_even_alpha: omega must lie in (0, 1)");
    if (omega == Scalar(0.5)) return Scalar(0);
    // Same sign as the residual, evaluated in log space so wide brackets cannot overflow.
    auto g = [omega](Scalar a) { return omega * softplus(-a) - (Scalar(1) - omega) * softplus(a); };
    return detail::bisect_decreasing<Scalar>(g, Scalar(-50), Scalar(50));
}

/// Break-even locus z1/beta^gamma = z0 + tau*log(beta) + alpha_omega, solved for z1.
template <typename Scalar>
BreakEvenLine<Scalar> break_even_line(const VsHyperParams<Scalar>& p, Scalar beta) {
    using std::log;
    using std::pow;
    detail::check_beta(beta);
    p.validate();
    BreakEvenLine<Scalar> line;
    line.alpha_omega = break_even_alpha(p.omega);
    line.slope = pow(beta, p.gamma);
    line.intercept = line.slope * (p.tau * log(beta) + line.alpha_omega);
    return line;
}

/// Minority softmax score of a break-even sample when omega=0.5, gamma=0.
template <typename Scalar>
Scalar break_even_softmax_score(Scalar beta, Scalar tau) {
    using std::log;
    detail::check_beta(beta);
    if (!(tau >= 0)) throw DomainError("break_even_softmax_score: tau must be >= 0");
    // beta^tau / (1 + beta^tau), written as a sigmoid to stay finite for large beta^tau.
    return sigmoid(tau * log(beta));
}

/// Grid of l(1,z) - l(0,z). Entry (i, j) is evaluated at z0 = axis(i), z1 = axis(j).
template <typename Scalar>
struct LossDifferenceGrid {
    typename Types<Scalar>::Vector axis;
    typename Types<Scalar>::Matrix diff;
};

template <typename Scalar>
LossDifferenceGrid<Scalar> loss_difference_grid(const VsHyperParams<Scalar>& p, Scalar beta, Scalar lo,
                                                Scalar hi, Index steps) {
    if (!(lo < hi)) throw DomainError("loss_difference_grid: need lo < hi");
    if (steps < 2) throw DomainError("loss_difference_grid: need steps >= 2");
    detail::check_beta(beta);
    LossDifferenceGrid<Scalar> grid;
    grid.axis = Types<Scalar>::Vector::LinSpaced(steps, lo, hi);
    grid.diff.resize(steps, steps);
    for (Index i = 0; i < steps; ++i) {
        for (Index j = 0; j < steps; ++j) {
            const LogitPair<Scalar> z{grid.axis(i), grid.axis(j)};
            grid.diff(i, j) = vs_loss_binary(1, z, p, beta) - vs_loss_binary(0, z, p, beta);
        }
    }
    return grid;
}

/// Softmax score p1 in (0,1) where the weighted per-class losses cross:
/// p1^omega = (1-p1)^(1-omega).
template <typename Scalar>
Scalar omega_softmax_intersection(Scalar omega) {
    using std::log;
    if (!(omega > 0 && omega < 1))
        throw DomainError("omega_softmax_intersection: omega must lie in (0, 1)");
    if (omega == Scalar(0.5)) return Scalar(0.5);
    // h(p) = (1-omega)*log(1-p) - omega*log(p) is strictly decreasing on (0, 1).
    auto h = [omega](Scalar q) { return (Scalar(1) - omega) * log(Scalar(1) - q) - omega * log(q); };
    Scalar lo = 0;
    Scalar hi = 1;
    for (int it = 0; it < 4096; ++it) {
        const Scalar mid = lo + (hi - lo) / 2;
        if (mid <= lo || mid >= hi) break;
        if (h(mid) > 0)
            lo = mid;
        else
            hi = mid;
    }
    if (lo <= 0) return hi;
    if (hi >= 1) return lo;
    return std::abs(h(lo)) <= std::abs(h(hi)) ? lo : hi;
}

} // namespace vslct
