#include "vslct/lambda_dist.hpp"
#include "vslct/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <vector>

using namespace vslct;

TEST_CASE("make_linear") {
    SUBCASE("uniform on [0, 3]") {
        const auto d = make_linear(0.0, 3.0, 1.0 / 3.0);
        CHECK(d.h_a == doctest::Approx(1.0 / 3.0));
        CHECK(d.is_uniform());
    }
    SUBCASE("triangle with all mass toward b") {
        const auto d = make_linear(0.0, 3.0, 2.0 / 3.0);
        CHECK(d.h_a == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("triangle with all mass toward a") {
        const auto d = make_linear(0.0, 3.0, 0.0);
        CHECK(d.h_a == doctest::Approx(2.0 / 3.0));
    }
    CHECK_THROWS_AS(make_linear(0.0, 3.0, 0.7), DomainError);
    CHECK_THROWS_AS(make_linear(0.0, 3.0, -0.1), DomainError);
    CHECK_THROWS_AS(make_linear(3.0, 3.0, 0.1), DomainError);
    CHECK_THROWS_AS(make_linear(3.0, 1.0, 0.1), DomainError);
}

TEST_CASE("pdf and cdf") {
    const auto d = make_linear(0.0, 3.0, 2.0 / 3.0);
    CHECK(pdf(d, 1.5) == doctest::Approx(1.0 / 3.0));
    CHECK(pdf(d, -0.1) == 0.0);
    CHECK(pdf(d, 3.1) == 0.0);
    CHECK(cdf(d, 3.0) == 1.0);
    CHECK(cdf(d, 0.0) == 0.0);
    CHECK(cdf(d, 1.5) == doctest::Approx(0.25));

    for (double h_b : {0.0, 0.15, 1.0 / 3.0, 0.5, 2.0 / 3.0}) {
        const auto e = make_linear(0.0, 3.0, h_b);
        // Trapezoid rule is exact for a linear density.
        const int n = 1000;
        double area = 0;
        for (int i = 0; i < n; ++i) {
            const double x0 = 3.0 * i / n, x1 = 3.0 * (i + 1) / n;
            area += 0.5 * (pdf(e, x0) + pdf(e, x1)) * (x1 - x0);
            CHECK(pdf(e, x0) >= 0);
        }
        CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
        double prev = 0;
        for (int i = 0; i <= 60; ++i) {
            const double c = cdf(e, -0.5 + 4.0 * i / 60);
            CHECK(c >= prev);
            CHECK(c >= 0);
            CHECK(c <= 1);
            prev = c;
        }
    }
}

TEST_CASE("sample") {
    SUBCASE("endpoints and median") {
        const auto d = make_linear(0.0, 3.0, 2.0 / 3.0);
        CHECK(sample(d, 0.0) == 0.0);
        CHECK(sample(d, 1.0) == 3.0);
        // Median of the rising triangle on [0,3]: x^2/9 = 1/2.
        CHECK(sample(d, 0.5) == doctest::Approx(std::sqrt(4.5)).epsilon(1e-14));
        const auto f = make_linear(0.0, 3.0, 0.0);
        CHECK(sample(f, 0.5) == doctest::Approx(0.87867965644035743).epsilon(1e-14));
    }
    SUBCASE("uniform branch is exact") {
        const auto d = make_linear(0.0, 3.0, 1.0 / 3.0);
        for (double u : {0.0, 0.1, 0.25, 0.5, 0.9, 1.0}) CHECK(sample(d, u) == 0.0 + u * 3.0);
    }
    SUBCASE("inverts the cdf") {
        Rng rng = make_rng(3, Stream::Lambda);
        for (double h_b : {0.0, 0.05, 0.15, 0.33, 0.34, 0.5, 0.66, 2.0 / 3.0}) {
            const auto d = make_linear(0.0, 3.0, h_b);
            for (int i = 0; i < 1000; ++i) {
                const double u = uniform01(rng);
                const double x = sample(d, u);
                CHECK(x >= d.a);
                CHECK(x <= d.b);
                CHECK(std::abs(cdf(d, x) - u) < 1e-10);
            }
        }
    }
    SUBCASE("empirical cdf") {
        for (double h_b : {0.0, 0.15, 0.66}) {
            const auto d = make_linear(0.0, 3.0, h_b);
            Rng rng = make_rng(17, Stream::Lambda);
            std::vector<double> xs(1'000'000);
            for (auto& x : xs) x = sample(d, uniform01(rng));
            std::sort(xs.begin(), xs.end());
            const double n = static_cast<double>(xs.size());
            double sup = 0;
            for (std::size_t i = 0; i < xs.size(); i += 97) {
                const double f = cdf(d, xs[i]);
                sup = std::max({sup, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
            }
            CHECK(sup < 0.005);
        }
    }
    const auto d = make_linear(0.0, 3.0, 0.5);
    CHECK_THROWS_AS(sample(d, -0.01), DomainError);
    CHECK_THROWS_AS(sample(d, 1.01), DomainError);
}

TEST_CASE("rng streams") {
    Rng a = make_rng(5, Stream::Init);
    Rng b = make_rng(5, Stream::Init);
    Rng c = make_rng(5, Stream::Shuffle);
    Rng d = make_rng(6, Stream::Init);
    const auto va = a(), vb = b(), vc = c(), vd = d();
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(va != vd);
    for (int i = 0; i < 1000; ++i) {
        const double u = uniform01(a);
        CHECK(u >= 0);
        CHECK(u < 1);
    }
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    shuffle_in_place(v, a);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}
