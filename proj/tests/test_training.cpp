#include "vslct/training.hpp"

#include <doctest.h>

#include <cmath>

using namespace vslct;

namespace {

ModelConfig small_model(Index lambda_dim = 1) {
    ModelConfig c;
    c.hidden = {16, 16};
    c.film_hidden = 16;
    c.lambda_dim = lambda_dim;
    return c;
}

TrainConfig quick(int epochs, std::uint64_t seed = 1) {
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = 32;
    t.seed = seed;
    return t;
}

} // namespace

TEST_CASE("config validation") {
    TrainConfig t;
    CHECK_NOTHROW(t.validate());
    t.batch_size = 0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = TrainConfig{};
    t.momentum = 1.0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = TrainConfig{};
    t.milestones = {{10, 0.1}, {5, 0.1}};
    CHECK_THROWS_AS(t.validate(), ConfigError);

    LctConfig lct;
    CHECK_NOTHROW(lct.validate());
    lct.role = LambdaRole::All;
    CHECK_THROWS_AS(lct.validate(), ConfigError);
    lct.ranges = {LambdaRange{0.5, 0.99, 0}, LambdaRange{0, 0.5, 0}, LambdaRange{0, 3, 0}};
    lct.eval_lambda = Vector::Constant(3, 0.5);
    CHECK_NOTHROW(lct.validate());
    lct.ranges[0] = LambdaRange{0.5, 1.0, 0};
    CHECK_NOTHROW(lct.validate());
    lct.ranges[0] = LambdaRange{0.5, 1.2, 0};
    CHECK_THROWS_AS(lct.validate(), DomainError);

    CHECK(lambda_role_from_string("omega") == LambdaRole::Omega);
    CHECK(to_string(LambdaRole::Gamma) == "gamma");
    CHECK_THROWS_AS(lambda_role_from_string("beta"), ConfigError);
}

TEST_CASE("learning rate schedule") {
    TrainConfig t;
    t.learning_rate = 0.1;
    t.milestones = {{160, 0.1}, {180, 0.1}};
    CHECK(learning_rate_at(t, 0) == 0.1);
    CHECK(learning_rate_at(t, 159) == 0.1);
    CHECK(learning_rate_at(t, 160) == doctest::Approx(0.01));
    CHECK(learning_rate_at(t, 179) == doctest::Approx(0.01));
    CHECK(learning_rate_at(t, 180) == doctest::Approx(0.001));

    const Dataset d = synth_gaussian(60, 20, 2, 2.0, 1);
    TrainConfig short_run = quick(6);
    short_run.milestones = {{2, 0.5}, {4, 0.1}};
    bool ok = true;
    train_baseline(make_model(small_model(), 1), d, VsParams{}, short_run, std::nullopt,
                   [&](const BatchRecord& r) {
                       if (std::abs(r.learning_rate - learning_rate_at(short_run, r.epoch)) > 1e-15) ok = false;
                   });
    CHECK(ok);
}

TEST_CASE("zero epochs return the initial model") {
    const Dataset d = synth_gaussian(50, 10, 2, 2.0, 1);
    const Model m = make_model(small_model(), 3);
    const auto r = train_baseline(m, d, VsParams{}, quick(0));
    CHECK(flatten(r.model) == flatten(m));
    CHECK(r.stats.steps == 0);
}

TEST_CASE("training is deterministic per seed") {
    const Dataset d = synth_gaussian(200, 20, 2, 2.0, 1);
    LctConfig lct;
    lct.ranges = {LambdaRange{0, 3, 0.5}};
    const auto a = train_lct(make_model(small_model(), 4), d, lct, quick(3, 4));
    const auto b = train_lct(make_model(small_model(), 4), d, lct, quick(3, 4));
    const auto c = train_lct(make_model(small_model(), 4), d, lct, quick(3, 5));
    CHECK(flatten(a.model) == flatten(b.model));
    CHECK(flatten(a.model) != flatten(c.model));
}

TEST_CASE("separable data is learned") {
    const Dataset d = synth_gaussian(300, 300, 2, 8.0, 2);
    const auto r = train_baseline(make_model(small_model(), 2), d, VsParams{}, quick(10));
    const auto scores = evaluate_baseline(r.model, d);
    CHECK(*overall_accuracy(confusion(scores, 0.5)) > 0.95);
    CHECK(r.stats.last_epoch_loss < 0.1);
}

TEST_CASE("point-mass conditioning matches baseline training") {
    const Dataset d = synth_gaussian(200, 20, 2, 2.0, 1);
    const double tau0 = 1.7;
    LctConfig lct;
    lct.constants = VsParams{0.6, 0.1, 0};
    lct.ranges = {LambdaRange{tau0, tau0, 0}};
    const auto cond = train_lct(make_model(small_model(), 6), d, lct, quick(4, 6));
    const auto base = train_baseline(make_model(small_model(), 6), d, VsParams{0.6, 0.1, tau0}, quick(4, 6),
                                     Vector::Constant(1, tau0));
    CHECK(flatten(cond.model) == flatten(base.model));
}

TEST_CASE("one lambda per batch, shared by the network and the loss") {
    const Dataset d = synth_gaussian(100, 30, 2, 2.0, 1); // 130 rows: 5 batches of 32, the last partial
    const TrainConfig cfg = quick(7);
    const Index batches_per_epoch = 5;

    SUBCASE("single hyperparameter roles") {
        for (LambdaRole role : {LambdaRole::Tau, LambdaRole::Omega, LambdaRole::Gamma}) {
            LctConfig lct;
            lct.role = role;
            lct.ranges = {role == LambdaRole::Omega ? LambdaRange{0.1, 0.9, 0} : LambdaRange{0, 2, 0.75}};
            lct.eval_lambda = Vector::Constant(1, 0.5);
            lct.constants = VsParams{0.7, 0.3, 1.2};
            bool coupled = true;
            bool in_range = true;
            Index seen = 0;
            const auto r = train_lct(make_model(small_model(), 1), d, lct, cfg, [&](const BatchRecord& b) {
                const double lam = b.film_input(0);
                const VsParams& p = b.loss_params;
                const double used = role == LambdaRole::Tau ? p.tau : role == LambdaRole::Omega ? p.omega : p.gamma;
                if (used != lam) coupled = false;
                if (role != LambdaRole::Tau && p.tau != 1.2) coupled = false;
                if (lam < lct.ranges[0].a || lam > lct.ranges[0].b) in_range = false;
                ++seen;
            });
            CHECK(coupled);
            CHECK(in_range);
            CHECK(seen == 7 * batches_per_epoch);
            CHECK(r.stats.lambda_draws == r.stats.steps);
            CHECK(r.stats.steps == 7 * batches_per_epoch);
        }
    }
    SUBCASE("all three at once") {
        LctConfig lct;
        lct.role = LambdaRole::All;
        lct.ranges = {LambdaRange{0.5, 0.9, 0}, LambdaRange{0, 0.4, 0}, LambdaRange{0, 3, 0}};
        lct.eval_lambda = Vector::Constant(3, 0.5);
        bool coupled = true;
        const auto r = train_lct(make_model(small_model(3), 1), d, lct, cfg, [&](const BatchRecord& b) {
            if (b.film_input.size() != 3 || b.film_input(0) != b.loss_params.omega ||
                b.film_input(1) != b.loss_params.gamma || b.film_input(2) != b.loss_params.tau)
                coupled = false;
        });
        CHECK(coupled);
        CHECK(evaluate(r.model, d, lct.eval_lambda).scores.allFinite());
        CHECK_THROWS_AS(train_lct(make_model(small_model(1), 1), d, lct, cfg), ConfigError);
    }
}

TEST_CASE("lambda draws follow the linear density") {
    const Dataset d = synth_gaussian(40, 8, 2, 2.0, 1);
    TrainConfig cfg = quick(400);
    cfg.batch_size = 8; // 6 batches per epoch
    LctConfig lct;
    lct.ranges = {LambdaRange{0, 3, 0.6}};
    const auto dist = make_linear(0.0, 3.0, 0.6);
    // Mean of the density by midpoint rule.
    double mean = 0;
    for (int i = 0; i < 3000; ++i) {
        const double x = (i + 0.5) * 3.0 / 3000;
        mean += x * pdf(dist, x) * 3.0 / 3000;
    }
    double sum = 0;
    Index n = 0;
    ModelConfig tiny = small_model();
    tiny.hidden = {4};
    tiny.film_hidden = 4;
    train_lct(make_model(tiny, 1), d, lct, cfg, [&](const BatchRecord& b) {
        sum += b.film_input(0);
        ++n;
    });
    CHECK(n == 2400);
    // sd of the draw is below 0.9, so 5 standard errors is about 0.09.
    CHECK(std::abs(sum / n - mean) < 0.09);
}

TEST_CASE("no signal gives chance-level AUC") {
    const Dataset train = synth_gaussian(400, 400, 2, 0.0, 3);
    const Dataset test = synth_gaussian(2000, 2000, 2, 0.0, 4);
    const auto r = train_baseline(make_model(small_model(), 3), train, VsParams{}, quick(5));
    const double auc = roc_curve(evaluate_baseline(r.model, test)).auc;
    CHECK(auc > 0.4);
    CHECK(auc < 0.6);
}

TEST_CASE("non-finite loss stops training with its location") {
    const Dataset d = synth_gaussian(50, 10, 2, 2.0, 1);
    Model m = make_model(small_model(), 1);
    m.head.biases << 1e308, -1e308;
    try {
        train_baseline(m, d, VsParams{}, quick(2));
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.epoch() == 0);
        CHECK(e.batch() == 0);
    }
}

TEST_CASE("evaluation") {
    const Dataset d = synth_gaussian(30, 10, 2, 2.0, 1);
    const Model m = make_model(small_model(), 1);
    const auto s = evaluate_baseline(m, d);
    CHECK(s.size() == 40);
    CHECK(s.labels == d.labels);
    CHECK((s.scores.array() > 0).all());
    CHECK((s.scores.array() < 1).all());
    const Vector x = d.features.row(0).transpose();
    const auto z = forward(m, x, Vector::Zero(1));
    CHECK(s.scores(0) == doctest::Approx(1 / (1 + std::exp(z.z0 - z.z1))));
}

TEST_CASE("conditioned training on imbalanced data") {
    const Dataset data = synth_gaussian(1200, 1200, 2, 2.5, 7);
    const auto [train_all, test] = split_by_counts(data, 200, 200, 7);
    const Dataset train = subsample_minority(train_all, 100, 7);
    CHECK(train.beta() == 100.0);
    LctConfig lct;
    lct.ranges = {LambdaRange{0, 3, 0}};
    const auto r = train_lct(make_model(small_model(), 1), train, lct, quick(10));
    const auto s1 = evaluate(r.model, test, Vector::Constant(1, 3.0));
    const auto s2 = evaluate(r.model, test, Vector::Constant(1, 3.0));
    CHECK(s1.scores == s2.scores);
    CHECK(roc_curve(s1).auc > 0.5);
    CHECK_THROWS_AS(evaluate(r.model, test, Vector::Zero(2)), ConfigError);
}
