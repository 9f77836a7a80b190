#include "vslct/analysis.hpp"

#include "vslct/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

namespace vslct {

namespace fs = std::filesystem;

RocAggregate aggregate_roc(const std::vector<RocCurve>& curves, const Vector& grid) {
    if (curves.size() < 2) throw DegenerateError("aggregate_roc: need at least 2 curves");
    const Index g = grid.size();
    const Index n = static_cast<Index>(curves.size());
    Matrix tprs(n, g);
    for (Index c = 0; c < n; ++c) tprs.row(c) = roc_at_fpr_grid(curves[static_cast<std::size_t>(c)], grid).transpose();

    RocAggregate out;
    out.grid = grid;
    out.mean = tprs.colwise().mean().transpose();
    out.min = tprs.colwise().minCoeff().transpose();
    out.max = tprs.colwise().maxCoeff().transpose();
    out.stddev.resize(g);
    for (Index j = 0; j < g; ++j) {
        const double ss = (tprs.col(j).array() - out.mean(j)).square().sum();
        out.stddev(j) = std::sqrt(ss / static_cast<double>(n - 1));
    }
    return out;
}

Vector default_fpr_grid() {
    std::vector<double> pts;
    for (int i = 0; i <= 100; ++i) pts.push_back(i / 100.0);
    for (int i = 0; i < 20; ++i) pts.push_back(std::pow(10.0, -3.0 + i / 20.0));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return Eigen::Map<const Vector>(pts.data(), static_cast<Index>(pts.size()));
}

Matrix polynomial_design(const Matrix& features, int degree, Eigen::MatrixXi* exponents) {
    if (degree < 1 || degree > 2) throw ConfigError("polynomial_design: degree must be 1 or 2");
    const Index k = features.cols();
    std::vector<Eigen::VectorXi> terms;
    terms.push_back(Eigen::VectorXi::Zero(k));
    for (Index i = 0; i < k; ++i) {
        Eigen::VectorXi e = Eigen::VectorXi::Zero(k);
        e(i) = 1;
        terms.push_back(e);
    }
    if (degree == 2) {
        for (Index i = 0; i < k; ++i) {
            for (Index j = i; j < k; ++j) {
                Eigen::VectorXi e = Eigen::VectorXi::Zero(k);
                e(i) += 1;
                e(j) += 1;
                terms.push_back(e);
            }
        }
    }
    Matrix x(features.rows(), static_cast<Index>(terms.size()));
    for (std::size_t t = 0; t < terms.size(); ++t) {
        Vector col = Vector::Ones(features.rows());
        for (Index i = 0; i < k; ++i)
            for (int p = 0; p < terms[t](i); ++p) col.array() *= features.col(i).array();
        x.col(static_cast<Index>(t)) = col;
    }
    if (exponents) {
        exponents->resize(static_cast<Index>(terms.size()), k);
        for (std::size_t t = 0; t < terms.size(); ++t) exponents->row(static_cast<Index>(t)) = terms[t].transpose();
    }
    return x;
}

PolyFit polyfit_r2(const Matrix& features, const Vector& target, int degree) {
    if (features.rows() != target.size()) throw ConfigError("polyfit_r2: feature rows and target length differ");
    PolyFit fit;
    const Matrix x = polynomial_design(features, degree, &fit.exponents);
    if (x.rows() < x.cols())
        throw DegenerateError("polyfit_r2: " + std::to_string(x.rows()) + " rows cannot determine " +
                              std::to_string(x.cols()) + " coefficients");
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    if (qr.rank() < x.cols()) throw DegenerateError("polyfit_r2: design matrix is rank deficient");
    fit.coefficients = qr.solve(target);
    const Vector residual = target - x * fit.coefficients;
    fit.ss_res = residual.squaredNorm();
    fit.ss_tot = (target.array() - target.mean()).square().sum();
    // Rounding in the mean leaves a tiny ss_tot for a constant target.
    const double scale = 64 * std::numeric_limits<double>::epsilon() * target.cwiseAbs().maxCoeff();
    if (fit.ss_tot <= static_cast<double>(target.size()) * scale * scale) {
        fit.ss_tot = 0;
        fit.constant_target = true;
        fit.r2 = 1;
    } else {
        fit.r2 = 1 - fit.ss_res / fit.ss_tot;
    }
    return fit;
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz evaluation.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int max_iter = 10000;
    constexpr double eps = 1e-16;
    constexpr double tiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1;
    const double qam = a - 1;
    double c = 1;
    double d = 1 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1) < eps) return h;
    }
    return h;
}

} // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0 && b > 0)) throw DomainError("incomplete_beta: need a, b > 0");
    if (!(x >= 0 && x <= 1)) throw DomainError("incomplete_beta: x must lie in [0, 1]");
    if (x == 0) return 0;
    if (x == 1) return 1;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1) / (a + b + 2)) return front * beta_continued_fraction(a, b, x) / a;
    return 1 - front * beta_continued_fraction(b, a, 1 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (!(df > 0)) throw DomainError("student_t_cdf: df must be > 0");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double tail = 0.5 * incomplete_beta(df / 2, 0.5, df / (df + t * t));
    return t > 0 ? 1 - tail : tail;
}

PairedTTest paired_t_test(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ConfigError("paired_t_test: samples have different lengths");
    const Index n = a.size();
    if (n < 2) throw DegenerateError("paired_t_test: need at least 2 pairs");
    const Vector d = a - b;
    PairedTTest out;
    out.mean_diff = d.mean();
    out.df = static_cast<double>(n - 1);
    const double var = (d.array() - out.mean_diff).square().sum() / out.df;
    if (!(var > 0)) throw DegenerateError("paired_t_test: differences have zero variance");
    out.t = out.mean_diff / std::sqrt(var / static_cast<double>(n));
    out.p_value = incomplete_beta(out.df / 2, 0.5, out.df / (out.df + out.t * out.t));
    out.a_greater = (d.array() > 0).count();
    out.b_greater = (d.array() < 0).count();
    return out;
}

std::string to_string(Method m) { return m == Method::Baseline ? "baseline" : "lct"; }

Method method_from_string(const std::string& name) {
    if (name == "baseline") return Method::Baseline;
    if (name == "lct") return Method::Lct;
    throw ConfigError("unknown method '" + name + "' (expected baseline or lct)");
}

void SweepSpec::validate() const {
    if (!train_data || !test_data) throw ConfigError("sweep: train and test datasets are required");
    if (seeds.empty() || omegas.empty() || gammas.empty()) throw ConfigError("sweep: empty grid");
    if (method == Method::Baseline && taus.empty()) throw ConfigError("sweep: empty tau grid");
    if (method == Method::Lct && h_bs.empty()) throw ConfigError("sweep: empty h_b grid");
    if (model.lambda_dim != 1) throw ConfigError("sweep: models must take a scalar lambda");
    for (double v : omegas) VsParams{v, 0, 0}.validate();
    for (double v : gammas) VsParams{0.5, v, 0}.validate();
    for (double v : taus) VsParams{0.5, 0, v}.validate();
    if (method == Method::Lct)
        for (double h : h_bs) LambdaRange{lambda_a, lambda_b, h}.validate();
    train.validate();
    model.validate();
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace

std::string SweepRecord::key() const {
    std::string k = to_string(method) + "_om" + num(omega) + "_ga" + num(gamma);
    k += method == Method::Baseline ? "_tau" + num(tau) : "_hb" + num(h_b);
    return k + "_seed" + std::to_string(seed);
}

std::vector<const SweepRecord*> SweepResult::successful() const {
    std::vector<const SweepRecord*> out;
    for (const auto& r : records)
        if (r.ok) out.push_back(&r);
    return out;
}

std::vector<SweepRecord> expand_sweep(const SweepSpec& spec) {
    std::vector<SweepRecord> out;
    const auto& last = spec.method == Method::Baseline ? spec.taus : spec.h_bs;
    for (auto seed : spec.seeds)
        for (double om : spec.omegas)
            for (double ga : spec.gammas)
                for (double v : last) {
                    SweepRecord r;
                    r.method = spec.method;
                    r.omega = om;
                    r.gamma = ga;
                    (spec.method == Method::Baseline ? r.tau : r.h_b) = v;
                    r.seed = seed;
                    out.push_back(r);
                }
    return out;
}

SweepRecord run_one(const SweepSpec& spec, SweepRecord record) {
    try {
        TrainConfig cfg = spec.train;
        cfg.seed = record.seed;
        Model model = make_model(spec.model, record.seed);
        LabeledScores scores;
        if (record.method == Method::Baseline) {
            auto trained = train_baseline(std::move(model), *spec.train_data,
                                          VsParams{record.omega, record.gamma, record.tau}, cfg);
            scores = evaluate_baseline(trained.model, *spec.test_data);
        } else {
            LctConfig lct;
            lct.role = LambdaRole::Tau;
            lct.ranges = {LambdaRange{spec.lambda_a, spec.lambda_b, record.h_b}};
            lct.constants = VsParams{record.omega, record.gamma, 0.0};
            lct.eval_lambda = Vector::Constant(1, spec.eval_tau);
            auto trained = train_lct(std::move(model), *spec.train_data, lct, cfg);
            scores = evaluate(trained.model, *spec.test_data, lct.eval_lambda);
        }
        record.roc = roc_curve(scores);
        record.auc = record.roc.auc;
        const auto counts = confusion(scores, 0.5);
        record.accuracy = overall_accuracy(counts).value_or(std::numeric_limits<double>::quiet_NaN());
        record.tpr = tpr(counts).value_or(std::numeric_limits<double>::quiet_NaN());
        record.ok = true;
        record.error.clear();
    } catch (const std::exception& e) {
        record.ok = false;
        record.error = e.what();
    }
    return record;
}

namespace {

Json run_manifest(const SweepSpec& spec, const SweepRecord& r) {
    Json j = to_json(r);
    TrainConfig cfg = spec.train;
    cfg.seed = r.seed;
    j["train"] = to_json(cfg);
    j["model"] = to_json(spec.model);
    if (r.method == Method::Lct) {
        j["lambda_role"] = "tau";
        j["lambda_distribution"] = {{"a", spec.lambda_a}, {"b", spec.lambda_b}, {"h_b", r.h_b}};
        j["eval_lambda"] = {spec.eval_tau};
    }
    return j;
}

} // namespace

SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    SweepResult result;
    result.records = expand_sweep(spec);
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        if (spec.output_dir) {
            const fs::path manifest = *spec.output_dir / "runs" / (result.records[i].key() + ".json");
            if (fs::exists(manifest)) {
                try {
                    auto loaded = sweep_record_from_json(read_json(manifest));
                    if (loaded.ok) {
                        result.records[i] = std::move(loaded);
                        ++result.reused;
                        continue;
                    }
                } catch (const std::exception&) {
                    // Unreadable manifest: run the configuration again.
                }
            }
        }
        pending.push_back(i);
    }

    if (spec.output_dir) fs::create_directories(*spec.output_dir / "runs");
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < pending.size(); k = next++) {
            auto& rec = result.records[pending[k]];
            rec = run_one(spec, rec);
            if (!spec.output_dir) continue;
            try {
                write_text_atomic(*spec.output_dir / "runs" / (rec.key() + ".json"), run_manifest(spec, rec).dump(1));
            } catch (const std::exception& e) {
                rec.ok = false;
                rec.error = std::string("manifest not written: ") + e.what();
            }
        }
    };
    const unsigned n_workers = std::max(1u, std::min<unsigned>(spec.workers, static_cast<unsigned>(pending.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    if (spec.output_dir) write_text_atomic(*spec.output_dir / "sweep.csv", sweep_csv(result.records));
    return result;
}

} // namespace vslct
