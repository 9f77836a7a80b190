#pragma once

// Linear-density distribution on [a, b], used to draw the conditioning
// parameter lambda once per mini-batch.

#include "vslct/types.hpp"

#include <algorithm>
#include <cmath>

namespace vslct {

template <typename Scalar>
struct LinearDistribution {
    Scalar a{0};
    Scalar b{1};
    Scalar h_a{1};
    Scalar h_b{1};

    Scalar width() const { return b - a; }
    bool is_uniform() const { return std::abs(h_b - h_a) < Scalar(1e-12); }
};

using LinearDist = LinearDistribution<double>;

/// Distribution on [a, b] with density h_b at b; h_a is chosen for unit area.
template <typename Scalar>
LinearDistribution<Scalar> make_linear(Scalar a, Scalar b, Scalar h_b) {
    if (!(a < b)) throw DomainError("make_linear: need a < b");
    const Scalar h_max = Scalar(2) / (b - a);
    if (!(h_b >= 0)) throw DomainError("make_linear: h_b must be >= 0");
    if (h_b > h_max) throw DomainError("make_linear: h_b exceeds 2/(b-a), h_a would be negative");
    return {a, b, h_max - h_b, h_b};
}

template <typename Scalar>
Scalar pdf(const LinearDistribution<Scalar>& d, Scalar x) {
    if (x < d.a || x > d.b) return 0;
    return d.h_a + (d.h_b - d.h_a) * (x - d.a) / d.width();
}

template <typename Scalar>
Scalar cdf(const LinearDistribution<Scalar>& d, Scalar x) {
    if (x <= d.a) return 0;
    if (x >= d.b) return 1;
    const Scalar t = x - d.a;
    const Scalar value = d.h_a * t + (d.h_b - d.h_a) * t * t / (2 * d.width());
    return std::clamp(value, Scalar(0), Scalar(1));
}

/// Inverse CDF. Solves k*t^2 + h_a*t = u for t = x - a, k = (h_b-h_a)/(2(b-a)),
/// using the cancellation-free root t = 2u / (h_a + sqrt(h_a^2 + 4ku)).
template <typename Scalar>
Scalar sample(const LinearDistribution<Scalar>& d, Scalar u) {
    using std::sqrt;
    if (!(u >= 0 && u <= 1)) throw DomainError("sample: u must lie in [0, 1]");
    if (d.is_uniform()) return d.a + u * (d.b - d.a);
    if (u == 0) return d.a;
    if (u == 1) return d.b;
    const Scalar k = (d.h_b - d.h_a) / (2 * d.width());
    const Scalar disc = std::max(Scalar(0), d.h_a * d.h_a + 4 * k * u);
    const Scalar t = 2 * u / (d.h_a + sqrt(disc));
    return std::clamp(d.a + t, d.a, d.b);
}

} // namespace vslct
