#include "vslct/metrics.hpp"
#include "vslct/random.hpp"

#include <doctest.h>

#include <vector>

using namespace vslct;

namespace {

LabeledScores make(std::vector<double> scores, std::vector<int> labels) {
    LabeledScores s;
    s.scores = Eigen::Map<Vector>(scores.data(), static_cast<Index>(scores.size()));
    s.labels = Eigen::Map<LabelVector>(labels.data(), static_cast<Index>(labels.size()));
    return s;
}

LabeledScores random_scores(Rng& rng, Index n, int levels) {
    LabeledScores s;
    s.scores.resize(n);
    s.labels.resize(n);
    for (Index i = 0; i < n; ++i) {
        s.labels(i) = static_cast<int>(rng() % 2);
        // Coarse levels force ties; positives skew upward.
        const double base = static_cast<double>(rng() % levels) / levels;
        s.scores(i) = std::min(1.0, base + 0.2 * s.labels(i) * uniform01(rng));
        if (levels < 10) s.scores(i) = base;
    }
    s.labels(0) = 0;
    s.labels(1) = 1;
    return s;
}

} // namespace

TEST_CASE("confusion and rates") {
    const auto s = make({0.9, 0.8, 0.4, 0.6, 0.1, 0.5}, {1, 1, 1, 0, 0, 0});
    const auto c = confusion(s, 0.5);
    CHECK(c.tp == 2);
    CHECK(c.fn == 1);
    CHECK(c.fp == 1);
    CHECK(c.tn == 2); // 0.5 is not > 0.5
    CHECK(*tpr(c) == doctest::Approx(2.0 / 3));
    CHECK(*fpr(c) == doctest::Approx(1.0 / 3));
    CHECK(*tnr(c) == doctest::Approx(2.0 / 3));
    CHECK(*precision(c) == doctest::Approx(2.0 / 3));
    CHECK(*overall_accuracy(c) == doctest::Approx(4.0 / 6));
    CHECK(*g_mean(c) == doctest::Approx(2.0 / 3));
    CHECK(*f_beta(c, 1.0) == doctest::Approx(2.0 / 3));
    CHECK(*f_beta(0.5, 1.0, 2.0) == doctest::Approx(5 * 0.5 / (4 * 0.5 + 1.0)));
    CHECK_THROWS_AS(f_beta(0.5, 0.5, 0.0), DomainError);
}

TEST_CASE("undefined rates") {
    const auto s = make({0.9, 0.8}, {0, 0});
    const auto c = confusion(s, 0.95);
    CHECK_FALSE(tpr(c).has_value());
    CHECK_FALSE(precision(c).has_value());
    CHECK(fpr(c).value() == 0.0);
    CHECK_FALSE(f_beta(c, 1.0).has_value());
    const auto bundle = metric_bundle(s, 0.5);
    CHECK_FALSE(bundle.auc.has_value());
}

TEST_CASE("roc curve examples") {
    SUBCASE("perfect ranking") {
        const auto r = roc_curve(make({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}));
        CHECK(r.auc == 1.0);
        CHECK(r.points.front() == RocPoint{0, 0});
        CHECK(r.points.back() == RocPoint{1, 1});
    }
    SUBCASE("reversed ranking") {
        CHECK(roc_curve(make({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0})).auc == 0.0);
    }
    SUBCASE("all tied") {
        const auto r = roc_curve(make({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}));
        CHECK(r.auc == 0.5);
        CHECK(r.points.size() == 2);
    }
    SUBCASE("worked example") {
        const auto s = make({0.9, 0.7, 0.6, 0.55, 0.3, 0.2}, {1, 0, 1, 1, 0, 0});
        CHECK(roc_curve(s).auc == doctest::Approx(7.0 / 9));
    }
    CHECK_THROWS(roc_curve(make({0.5, 0.6}, {1, 1})));
    CHECK_THROWS(roc_curve(make({0.5, 0.6}, {1, 2})));
}

TEST_CASE("auc equals the pairwise probability, ties included") {
    Rng rng = make_rng(99, Stream::Data);
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = 2 + static_cast<Index>(rng() % 60);
        const int levels = trial % 2 == 0 ? 5 : 1000;
        const auto s = random_scores(rng, n, levels);
        const auto r = roc_curve(s);
        CHECK(r.auc == doctest::Approx(auc_pair_oracle(s)).epsilon(1e-12));
        CHECK(r.auc == doctest::Approx(trapezoid_auc(r.points)).epsilon(1e-15));
        for (std::size_t k = 1; k < r.points.size(); ++k) {
            CHECK(r.points[k].fpr >= r.points[k - 1].fpr);
            CHECK(r.points[k].tpr >= r.points[k - 1].tpr);
        }
        // Flipping labels complements the area.
        LabeledScores flipped = s;
        flipped.labels = (1 - s.labels.array()).matrix();
        CHECK(roc_curve(flipped).auc == doctest::Approx(1 - r.auc).epsilon(1e-12));
        // Any strictly increasing transform of the scores leaves the curve alone.
        LabeledScores warped = s;
        warped.scores = (3 * s.scores.array()).exp();
        CHECK(roc_curve(warped).points == r.points);
    }
}

TEST_CASE("every curve point is a threshold rate pair") {
    Rng rng = make_rng(5, Stream::Data);
    const auto s = random_scores(rng, 80, 7);
    const auto r = roc_curve(s);
    std::vector<double> thresholds(s.scores.begin(), s.scores.end());
    thresholds.push_back(-1.0);
    thresholds.push_back(2.0);
    for (const auto& pt : r.points) {
        bool found = false;
        for (double t : thresholds) {
            const auto c = confusion(s, t);
            if (*tpr(c) == pt.tpr && *fpr(c) == pt.fpr) found = true;
        }
        CHECK(found);
    }
}

TEST_CASE("tpr and fpr are nonincreasing in the threshold") {
    Rng rng = make_rng(6, Stream::Data);
    const auto s = random_scores(rng, 100, 1000);
    double prev_tpr = 2, prev_fpr = 2;
    for (int i = 0; i <= 100; ++i) {
        const auto c = confusion(s, i / 100.0);
        CHECK(*tpr(c) <= prev_tpr);
        CHECK(*fpr(c) <= prev_fpr);
        prev_tpr = *tpr(c);
        prev_fpr = *fpr(c);
    }
}

TEST_CASE("roc at fpr grid") {
    RocCurve r;
    r.points = {{0, 0}, {0, 0.5}, {0.5, 0.5}, {0.5, 1.0}, {1, 1}};
    Vector grid(5);
    grid << 0, 0.25, 0.5, 0.75, 1;
    const Vector t = roc_at_fpr_grid(r, grid);
    CHECK(t(0) == 0.5);
    CHECK(t(1) == 0.5);
    CHECK(t(2) == 1.0);
    CHECK(t(3) == 1.0);
    CHECK(t(4) == 1.0);

    RocCurve diag;
    diag.points = {{0, 0}, {1, 1}};
    Vector g2(3);
    g2 << 0.1, 0.33, 0.9;
    CHECK(roc_at_fpr_grid(diag, g2).isApprox(g2));

    Vector bad(2);
    bad << 0.5, 0.2;
    CHECK_THROWS(roc_at_fpr_grid(diag, bad));
    bad << 0.2, 1.5;
    CHECK_THROWS(roc_at_fpr_grid(diag, bad));
}

TEST_CASE("metric bundle") {
    const auto s = make({0.9, 0.8, 0.4, 0.6, 0.1, 0.5}, {1, 1, 1, 0, 0, 0});
    const auto b = metric_bundle(s, 0.5);
    CHECK(b.counts.total() == 6);
    CHECK(*b.accuracy == doctest::Approx(4.0 / 6));
    CHECK(*b.auc == doctest::Approx(auc_pair_oracle(s)));
    CHECK(*b.f1 == doctest::Approx(2.0 / 3));
}
