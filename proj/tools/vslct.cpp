// Command-line driver: data generation, training, sweeps and the reports built
// on them. Exit codes: 0 success, 1 usage or config error, 2 runtime failure.

#include "vslct/config.hpp"
#include "vslct/io.hpp"
#include "vslct/lambda_dist.hpp"
#include "vslct/random.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

using namespace vslct;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kRuntime = 2;

constexpr const char* kRootEnv = "VSLCT_OUTPUT_ROOT";

/// Anything wrong with the invocation or the config, before work starts.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class IfExists { Skip, Overwrite, Error };

struct Common {
    std::optional<std::string> config;
    std::optional<std::string> out;
    IfExists if_exists{IfExists::Skip};
};

fs::path output_root() {
    const char* env = std::getenv(kRootEnv);
    return env && *env ? fs::path(env) : fs::path("vslct-out");
}

std::string csv_num(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

std::string short_num(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

// One output directory per invocation. manifest.json is written first with
// status "running" and rewritten at the end; on failure the files this run
// created are removed and the manifest says "failed".
class OutputDir {
public:
    OutputDir(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {}

    const fs::path& path() const { return dir_; }
    fs::path manifest_path() const { return dir_ / "manifest.json"; }

    /// Status and config recorded by an earlier run of the same command.
    std::optional<std::pair<std::string, Json>> previous() const {
        if (!fs::exists(manifest_path())) return std::nullopt;
        try {
            const Json j = read_json(manifest_path());
            if (j.value("command", "") == command_) return std::pair{j.at("status").get<std::string>(), j.at("config")};
        } catch (const std::exception&) {
        }
        return std::nullopt;
    }

    void begin(const Json& config) {
        config_ = config;
        write_manifest("running", {});
    }

    void write(const std::string& name, const std::string& text) {
        write_text_atomic(dir_ / name, text);
        track(name);
    }

    /// Registers a file written by other means.
    void track(const std::string& name) {
        if (std::find(outputs_.begin(), outputs_.end(), name) == outputs_.end()) outputs_.push_back(name);
    }

    void finish(Json extra) { write_manifest("complete", std::move(extra)); }

    void fail(const std::string& error) noexcept {
        try {
            for (const auto& name : outputs_) fs::remove(dir_ / name);
            outputs_.clear();
            write_manifest("failed", Json{{"error", error}});
        } catch (...) {
        }
    }

private:
    void write_manifest(const std::string& status, Json extra) {
        Json j{{"command", command_}, {"status", status}, {"config", config_}, {"outputs", outputs_}};
        for (auto& [k, v] : extra.items()) j[k] = v;
        write_text_atomic(manifest_path(), j.dump(1) + "\n");
    }

    fs::path dir_;
    std::string command_;
    Json config_;
    std::vector<std::string> outputs_;
};

/// Decides whether to run given what is already in the directory. Returns false to skip.
/// An unfinished earlier run with the same config is simply redone (sweeps resume).
bool claim(const OutputDir& dir, IfExists policy, const Json& config) {
    const auto prev = dir.previous();
    if (!prev || policy == IfExists::Overwrite) return true;
    const auto& [status, previous_config] = *prev;
    if (previous_config != config)
        throw UsageError(dir.path().string() + " holds " + status +
                         " output from a different config; use --if-exists overwrite or another --out");
    if (status != "complete") return true;
    if (policy == IfExists::Error) throw UsageError(dir.path().string() + " already holds complete output");
    std::cout << dir.path().string() << ": complete output for this config exists, skipping\n";
    return false;
}

fs::path out_dir(const Common& c, const ExperimentConfig* cfg, const std::string& command) {
    if (c.out) return *c.out;
    if (cfg && cfg->output) return *cfg->output;
    return output_root() / command;
}

ExperimentConfig base_config(const Common& c) {
    return c.config ? load_experiment_config(*c.config) : ExperimentConfig{};
}

template <typename T>
void override_with(const std::optional<T>& flag, T& target) {
    if (flag) target = *flag;
}

// Runs `body` inside the directory lifecycle; runtime errors mark it failed.
template <typename Body>
int run_in(OutputDir& dir, const Json& config, Body&& body) {
    dir.begin(config);
    try {
        dir.finish(body());
    } catch (const std::exception& e) {
        dir.fail(e.what());
        throw;
    }
    std::cout << "wrote " << dir.path().string() << "\n";
    return kOk;
}

Json counts_json(const Dataset& d) { return Json{{"n0", d.n0()}, {"n1", d.n1()}, {"beta", d.beta()}}; }

// ---------------------------------------------------------------------------
// gen-data

struct GenDataFlags {
    std::optional<Index> n0, n1, dim, test_n0, test_n1;
    std::optional<double> separation, target_beta;
    std::optional<std::uint64_t> seed;
    bool no_subsample{false};
};

void add_dataset_flags(CLI::App* app, GenDataFlags& f) {
    app->add_option("--n0", f.n0, "majority samples before the split");
    app->add_option("--n1", f.n1, "minority samples before the split");
    app->add_option("--dim", f.dim, "feature dimension");
    app->add_option("--separation", f.separation, "distance between class means");
    app->add_option("--data-seed", f.seed, "seed for generation, split and subsampling");
    app->add_option("--test-n0", f.test_n0, "majority samples in the test split");
    app->add_option("--test-n1", f.test_n1, "minority samples in the test split");
    app->add_option("--target-beta", f.target_beta, "imbalance ratio of the training split");
    app->add_flag("--no-subsample", f.no_subsample, "keep the training split as generated");
}

void apply(const GenDataFlags& f, DatasetSection& d) {
    override_with(f.n0, d.n0);
    override_with(f.n1, d.n1);
    override_with(f.dim, d.dim);
    override_with(f.separation, d.separation);
    override_with(f.seed, d.seed);
    override_with(f.test_n0, d.test_n0);
    override_with(f.test_n1, d.test_n1);
    if (f.target_beta) d.target_beta = f.target_beta;
    if (f.no_subsample) d.target_beta.reset();
}

int cmd_gen_data(const Common& common, const GenDataFlags& flags) {
    ExperimentConfig cfg;
    try {
        cfg = base_config(common);
        apply(flags, cfg.dataset);
        cfg.dataset.validate();
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    OutputDir dir(out_dir(common, &cfg, "gen-data"), "gen-data");
    const Json config{{"dataset", to_json(cfg)["dataset"]}};
    if (!claim(dir, common.if_exists, config)) return kOk;
    return run_in(dir, config, [&] {
        const auto [train, test] = load_datasets(cfg.dataset);
        save_csv(train, dir.path() / "train.csv");
        dir.track("train.csv");
        save_csv(test, dir.path() / "test.csv");
        dir.track("test.csv");
        return Json{{"train", counts_json(train)}, {"test", counts_json(test)}};
    });
}

// ---------------------------------------------------------------------------
// train

struct TrainFlags {
    GenDataFlags data;
    std::optional<std::string> train_csv, test_csv;
    std::optional<int> epochs;
    std::optional<Index> batch_size;
    std::optional<double> lr;
    std::optional<std::uint64_t> seed;
    std::optional<double> omega, gamma, tau;
    std::optional<std::string> lambda_role;
    std::optional<double> lambda_a, lambda_b, h_b;
    std::optional<std::vector<double>> eval_lambda;
    std::vector<double> eval_grid;
    std::optional<std::string> film_mode;
    bool baseline{false};
};

void add_train_flags(CLI::App* app, TrainFlags& f) {
    app->add_option("--epochs", f.epochs, "training epochs");
    app->add_option("--batch-size", f.batch_size, "mini-batch size");
    app->add_option("--lr", f.lr, "initial learning rate");
    app->add_option("--seed", f.seed, "run seed (initialization, shuffling, lambda draws)");
    app->add_option("--film-mode", f.film_mode, "additive or affine")->check(CLI::IsMember({"additive", "affine"}));
}

void apply(const TrainFlags& f, ExperimentConfig& c) {
    apply(f.data, c.dataset);
    if (f.train_csv) {
        c.dataset.source = "csv";
        c.dataset.path = *f.train_csv;
        c.dataset.target_beta.reset();
        if (f.data.target_beta) c.dataset.target_beta = f.data.target_beta;
    }
    if (f.test_csv) c.dataset.test_path = *f.test_csv;
    override_with(f.epochs, c.train.epochs);
    override_with(f.batch_size, c.train.batch_size);
    override_with(f.lr, c.train.learning_rate);
    override_with(f.seed, c.train.seed);
    if (f.film_mode) c.model.film_mode = *f.film_mode == "affine" ? FilmMode::Affine : FilmMode::AdditiveOnly;

    override_with(f.omega, c.loss.params.omega);
    override_with(f.gamma, c.loss.params.gamma);
    override_with(f.tau, c.loss.params.tau);
    if (c.loss.lct) c.loss.lct->constants = c.loss.params;

    const bool lambda_flag = f.lambda_role || f.lambda_a || f.lambda_b || f.h_b || f.eval_lambda;
    if (lambda_flag && !c.loss.lct) {
        c.loss.lct = LctConfig{};
        c.loss.lct->constants = c.loss.params;
    }
    if (c.loss.lct) {
        auto& lct = *c.loss.lct;
        if (f.lambda_role) {
            lct.role = lambda_role_from_string(*f.lambda_role);
            lct.ranges.resize(static_cast<std::size_t>(lct.lambda_dim()));
            if (lct.eval_lambda.size() != lct.lambda_dim()) lct.eval_lambda = Vector::Zero(lct.lambda_dim());
        }
        if (f.lambda_a || f.lambda_b || f.h_b) {
            if (lct.lambda_dim() != 1) throw ConfigError("--lambda-a/--lambda-b/--h-b need a scalar lambda role");
            override_with(f.lambda_a, lct.ranges[0].a);
            override_with(f.lambda_b, lct.ranges[0].b);
            override_with(f.h_b, lct.ranges[0].h_b);
        }
        if (f.eval_lambda)
            lct.eval_lambda = Eigen::Map<const Vector>(f.eval_lambda->data(), static_cast<Index>(f.eval_lambda->size()));
        c.model.lambda_dim = lct.lambda_dim();
    }
    if (f.baseline) {
        c.loss.lct.reset();
        c.model.lambda_dim = 1;
    }
}

int cmd_train(const Common& common, const TrainFlags& flags) {
    ExperimentConfig cfg;
    try {
        cfg = base_config(common);
        apply(flags, cfg);
        cfg.validate();
        if (!flags.eval_grid.empty() && (!cfg.loss.lct || cfg.loss.lct->lambda_dim() != 1))
            throw ConfigError("--eval-grid needs a scalar lambda role");
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    OutputDir dir(out_dir(common, &cfg, "train"), "train");
    Json config = to_json(cfg);
    config["eval_grid"] = flags.eval_grid;
    if (!claim(dir, common.if_exists, config)) return kOk;
    return run_in(dir, config, [&] {
        const auto [train, test] = load_datasets(cfg.dataset);
        Model model = make_model(cfg.model, cfg.train.seed);
        TrainResult result{Model{}, TrainStats{}};
        LabeledScores scores;
        Json extra{{"seed", cfg.train.seed}, {"train_data", counts_json(train)}, {"test_data", counts_json(test)}};
        if (cfg.loss.lct) {
            const auto& lct = *cfg.loss.lct;
            result = train_lct(std::move(model), train, lct, cfg.train);
            scores = evaluate(result.model, test, lct.eval_lambda);
            extra["method"] = "lct";
            extra["lambda_role"] = to_string(lct.role);
            Json dists = Json::array();
            for (const auto& r : lct.ranges) dists.push_back({{"a", r.a}, {"b", r.b}, {"h_b", r.h_b}});
            extra["lambda_distribution"] = dists;
            extra["eval_lambda"] = std::vector<double>(lct.eval_lambda.begin(), lct.eval_lambda.end());
        } else {
            result = train_baseline(std::move(model), train, cfg.loss.params, cfg.train);
            scores = evaluate_baseline(result.model, test);
            extra["method"] = "baseline";
            extra["loss_params"] = to_json(cfg.loss.params);
        }
        dir.write("checkpoint.json", checkpoint_json(result.model).dump(1) + "\n");
        dir.write("scores.csv", scores_csv(scores));
        const RocCurve roc = roc_curve(scores);
        dir.write("roc.csv", roc_csv(roc));
        const Json metrics = to_json(metric_bundle(scores, 0.5));
        dir.write("metrics.json", metrics.dump(1) + "\n");

        if (!flags.eval_grid.empty()) {
            std::ostringstream ss;
            ss << "lambda,auc,tpr,fpr,accuracy\n";
            for (double lam : flags.eval_grid) {
                const auto s = evaluate(result.model, test, Vector::Constant(1, lam));
                const auto b = metric_bundle(s, 0.5);
                ss << csv_num(lam) << ',' << csv_num(*b.auc) << ',' << csv_num(b.tpr.value_or(NAN)) << ','
                   << csv_num(b.fpr.value_or(NAN)) << ',' << csv_num(b.accuracy.value_or(NAN)) << '\n';
            }
            dir.write("eval_grid.csv", ss.str());
        }
        extra["checkpoint"] = "checkpoint.json";
        extra["metrics"] = metrics;
        extra["stats"] = {{"steps", result.stats.steps},
                          {"lambda_draws", result.stats.lambda_draws},
                          {"last_epoch_loss", result.stats.last_epoch_loss}};
        std::cout << "auc " << roc.auc << "\n";
        return extra;
    });
}

// ---------------------------------------------------------------------------
// sweep

struct SweepFlags {
    GenDataFlags data;
    std::optional<std::string> method;
    std::optional<std::vector<double>> omegas, gammas, taus, h_bs;
    std::optional<std::vector<std::uint64_t>> seeds;
    std::optional<unsigned> workers;
    std::optional<int> epochs;
};

int cmd_sweep(const Common& common, const SweepFlags& flags) {
    ExperimentConfig cfg;
    SweepSpec spec;
    try {
        cfg = base_config(common);
        apply(flags.data, cfg.dataset);
        if (flags.method) cfg.sweep.method = method_from_string(*flags.method);
        override_with(flags.omegas, cfg.sweep.omegas);
        override_with(flags.gammas, cfg.sweep.gammas);
        override_with(flags.taus, cfg.sweep.taus);
        override_with(flags.h_bs, cfg.sweep.h_bs);
        override_with(flags.seeds, cfg.sweep.seeds);
        override_with(flags.workers, cfg.sweep.workers);
        override_with(flags.epochs, cfg.train.epochs);
        cfg.loss.lct.reset();
        cfg.model.lambda_dim = 1;
        cfg.validate();
        spec = sweep_spec(cfg);
        // Datasets are attached later; validate the rest now.
        spec.train_data = std::make_shared<const Dataset>();
        spec.test_data = spec.train_data;
        spec.validate();
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    OutputDir dir(out_dir(common, &cfg, "sweep"), "sweep");
    // The worker count does not change any result, so it is not part of the identity.
    Json config = to_json(cfg);
    config["sweep"].erase("workers");
    if (!claim(dir, common.if_exists, config)) return kOk;
    if (common.if_exists == IfExists::Overwrite) {
        fs::remove_all(dir.path() / "runs");
        fs::remove(dir.path() / "sweep.csv");
    }
    spec.output_dir = dir.path();
    return run_in(dir, config, [&] {
        const auto [train, test] = load_datasets(cfg.dataset);
        spec.train_data = std::make_shared<const Dataset>(train);
        spec.test_data = std::make_shared<const Dataset>(test);
        const SweepResult result = run_sweep(spec);
        const auto ok = result.successful();
        const Index failed = static_cast<Index>(result.records.size() - ok.size());
        std::cout << result.records.size() << " runs, " << result.reused << " reused, " << failed << " failed\n";
        for (const auto& r : result.records)
            if (!r.ok) std::cerr << "run " << r.key() << " failed: " << r.error << "\n";
        if (failed > 0)
            throw std::runtime_error(std::to_string(failed) + " runs failed; rerun to retry them");
        dir.track("sweep.csv");
        return Json{{"runs", result.records.size()}, {"reused", result.reused}};
    });
}

// ---------------------------------------------------------------------------
// roc

int cmd_roc(const Common& common, const std::string& scores_path, double threshold) {
    if (!(threshold >= 0 && threshold <= 1)) throw UsageError("--threshold must lie in [0, 1]");
    OutputDir dir(out_dir(common, nullptr, "roc"), "roc");
    const Json config{{"scores", fs::absolute(scores_path).string()}, {"threshold", threshold}};
    if (!claim(dir, common.if_exists, config)) return kOk;
    return run_in(dir, config, [&] {
        const LabeledScores s = read_scores_csv(scores_path);
        const RocCurve roc = roc_curve(s);
        dir.write("roc.csv", roc_csv(roc));
        const Vector grid = default_fpr_grid();
        const Vector tprs = roc_at_fpr_grid(roc, grid);
        std::ostringstream ss;
        ss << "fpr,tpr\n";
        for (Index i = 0; i < grid.size(); ++i) ss << csv_num(grid(i)) << ',' << csv_num(tprs(i)) << '\n';
        dir.write("roc_grid.csv", ss.str());
        const Json metrics = to_json(metric_bundle(s, threshold));
        dir.write("metrics.json", metrics.dump(1) + "\n");
        std::cout << "auc " << roc.auc << "\n";
        return Json{{"auc", roc.auc}};
    });
}

// ---------------------------------------------------------------------------
// analyze

Json polyfit_json(const std::vector<const SweepRecord*>& recs, Method method) {
    std::vector<std::string> names = method == Method::Baseline
                                         ? std::vector<std::string>{"omega", "gamma", "tau"}
                                         : std::vector<std::string>{"omega", "gamma", "h_b"};
    auto feature = [&](const SweepRecord& r, const std::string& n) {
        if (n == "omega") return r.omega;
        if (n == "gamma") return r.gamma;
        if (n == "tau") return r.tau;
        return r.h_b;
    };
    const Index n = static_cast<Index>(recs.size());
    Json out = Json::array();
    std::vector<std::vector<std::string>> sets;
    for (const auto& name : names) sets.push_back({name});
    sets.push_back(names);
    for (const std::string target : {"auc", "accuracy", "tpr"}) {
        Vector y(n);
        for (Index i = 0; i < n; ++i) {
            const auto& r = *recs[static_cast<std::size_t>(i)];
            y(i) = target == "auc" ? r.auc : target == "accuracy" ? r.accuracy : r.tpr;
        }
        for (const auto& set : sets) {
            Matrix x(n, static_cast<Index>(set.size()));
            for (Index i = 0; i < n; ++i)
                for (std::size_t k = 0; k < set.size(); ++k)
                    x(i, static_cast<Index>(k)) = feature(*recs[static_cast<std::size_t>(i)], set[k]);
            Json entry{{"target", target}, {"features", set}};
            try {
                // Grids with two levels of a feature cannot carry its square; fall back to a linear fit.
                PolyFit fit;
                int degree = 2;
                try {
                    fit = polyfit_r2(x, y, 2);
                } catch (const DegenerateError&) {
                    degree = 1;
                    fit = polyfit_r2(x, y, 1);
                }
                entry["degree"] = degree;
                entry["r2"] = fit.r2;
                entry["constant_target"] = fit.constant_target;
                entry["coefficients"] = std::vector<double>(fit.coefficients.begin(), fit.coefficients.end());
                Json exps = Json::array();
                for (Index r = 0; r < fit.exponents.rows(); ++r) {
                    std::vector<int> row(fit.exponents.row(r).begin(), fit.exponents.row(r).end());
                    exps.push_back(row);
                }
                entry["exponents"] = exps;
            } catch (const std::exception& e) {
                entry["error"] = e.what();
            }
            out.push_back(entry);
        }
    }
    return out;
}

int cmd_analyze(const Common& common, const std::vector<std::string>& sweep_dirs) {
    if (sweep_dirs.empty()) throw UsageError("analyze needs at least one --sweep directory");
    OutputDir dir(out_dir(common, nullptr, "analyze"), "analyze");
    Json config{{"sweeps", Json::array()}};
    for (const auto& d : sweep_dirs) config["sweeps"].push_back(fs::absolute(d).string());
    if (!claim(dir, common.if_exists, config)) return kOk;
    return run_in(dir, config, [&] {
        std::vector<SweepRecord> all;
        for (const auto& d : sweep_dirs) {
            auto recs = load_sweep_dir(d);
            if (recs.empty()) throw std::runtime_error(d + " has no complete runs");
            all.insert(all.end(), recs.begin(), recs.end());
        }
        Json summary = Json::object();
        Json fits = Json::object();
        std::map<Method, std::map<std::uint64_t, std::vector<double>>> by_seed;
        std::ostringstream csv;
        csv << "method,runs,auc_mean,auc_std,auc_min,auc_max,acc_mean,tpr_mean\n";
        for (Method m : {Method::Baseline, Method::Lct}) {
            std::vector<const SweepRecord*> recs;
            for (const auto& r : all)
                if (r.method == m) recs.push_back(&r);
            if (recs.empty()) continue;
            const std::string name = to_string(m);
            const Index n = static_cast<Index>(recs.size());
            Vector auc(n), acc(n), tpr(n);
            std::vector<RocCurve> curves;
            for (Index i = 0; i < n; ++i) {
                const auto& r = *recs[static_cast<std::size_t>(i)];
                auc(i) = r.auc;
                acc(i) = r.accuracy;
                tpr(i) = r.tpr;
                curves.push_back(r.roc);
                by_seed[m][r.seed].push_back(r.auc);
            }
            const double sd = n > 1 ? std::sqrt((auc.array() - auc.mean()).square().sum() / (n - 1)) : 0.0;
            csv << name << ',' << n << ',' << csv_num(auc.mean()) << ',' << csv_num(sd) << ','
                << csv_num(auc.minCoeff()) << ',' << csv_num(auc.maxCoeff()) << ',' << csv_num(acc.mean()) << ','
                << csv_num(tpr.mean()) << '\n';
            summary[name] = {{"runs", n}, {"auc_mean", auc.mean()}, {"auc_std", sd}};
            if (n >= 2) {
                const auto agg = aggregate_roc(curves, default_fpr_grid());
                std::ostringstream ss;
                ss << "fpr,mean,min,max,std\n";
                for (Index i = 0; i < agg.grid.size(); ++i)
                    ss << csv_num(agg.grid(i)) << ',' << csv_num(agg.mean(i)) << ',' << csv_num(agg.min(i)) << ','
                       << csv_num(agg.max(i)) << ',' << csv_num(agg.stddev(i)) << '\n';
                dir.write("roc_aggregate_" + name + ".csv", ss.str());
            }
            fits[name] = polyfit_json(recs, m);
        }
        dir.write("summary.csv", csv.str());
        dir.write("polyfit.json", fits.dump(1) + "\n");

        // Both methods present: compare per-seed mean AUC with a paired t-test.
        Json ttest = nullptr;
        if (by_seed.size() == 2) {
            std::vector<double> a, b;
            std::vector<std::uint64_t> seeds;
            for (const auto& [seed, lct_aucs] : by_seed[Method::Lct]) {
                auto it = by_seed[Method::Baseline].find(seed);
                if (it == by_seed[Method::Baseline].end()) continue;
                seeds.push_back(seed);
                a.push_back(Eigen::Map<const Vector>(lct_aucs.data(), static_cast<Index>(lct_aucs.size())).mean());
                b.push_back(Eigen::Map<const Vector>(it->second.data(), static_cast<Index>(it->second.size())).mean());
            }
            ttest = Json{{"a", "lct"}, {"b", "baseline"}, {"paired_by", "seed"}, {"seeds", seeds}};
            try {
                const auto t = paired_t_test(Eigen::Map<const Vector>(a.data(), static_cast<Index>(a.size())),
                                             Eigen::Map<const Vector>(b.data(), static_cast<Index>(b.size())));
                ttest["mean_diff"] = t.mean_diff;
                ttest["t"] = t.t;
                ttest["df"] = t.df;
                ttest["p_value"] = t.p_value;
                ttest["a_greater"] = t.a_greater;
                ttest["b_greater"] = t.b_greater;
            } catch (const std::exception& e) {
                ttest["error"] = e.what();
            }
            dir.write("ttest.json", ttest.dump(1) + "\n");
        }
        std::cout << csv.str();
        return Json{{"summary", summary}, {"ttest", ttest}};
    });
}

// ---------------------------------------------------------------------------
// loss-geometry

struct GeometryFlags {
    double omega{0.5};
    double gamma{0};
    std::vector<double> taus{0, 1, 2, 3};
    double beta{10};
    double lo{-5};
    double hi{5};
    Index steps{101};
};

int cmd_loss_geometry(const Common& common, const GeometryFlags& f) {
    try {
        for (double tau : f.taus) VsParams{f.omega, f.gamma, tau}.validate();
        if (!(f.omega > 0 && f.omega < 1)) throw DomainError("--omega must lie in (0, 1) for the break-even line");
        if (!(f.beta >= 1)) throw DomainError("--beta must be >= 1");
        if (!(f.lo < f.hi) || f.steps < 2) throw DomainError("need --lo < --hi and --steps >= 2");
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    OutputDir dir(out_dir(common, nullptr, "loss-geometry"), "loss-geometry");
    const Json config{{"omega", f.omega}, {"gamma", f.gamma}, {"taus", f.taus}, {"beta", f.beta},
                      {"lo", f.lo},       {"hi", f.hi},       {"steps", f.steps}};
    if (!claim(dir, common.if_exists, config)) return kOk;
    return run_in(dir, config, [&] {
        std::ostringstream lines;
        lines << "omega,gamma,tau,beta,slope,intercept,alpha_omega,softmax_score,omega_intersection,grid\n";
        Json grids = Json::array();
        for (double tau : f.taus) {
            const VsParams p{f.omega, f.gamma, tau};
            const auto grid = loss_difference_grid(p, f.beta, f.lo, f.hi, f.steps);
            const std::string name = "grid_om" + short_num(f.omega) + "_ga" + short_num(f.gamma) + "_tau" +
                                     short_num(tau) + ".csv";
            dir.write(name, loss_grid_csv(grid));
            const auto line = break_even_line(p, f.beta);
            lines << csv_num(f.omega) << ',' << csv_num(f.gamma) << ',' << csv_num(tau) << ',' << csv_num(f.beta)
                  << ',' << csv_num(line.slope) << ',' << csv_num(line.intercept) << ','
                  << csv_num(line.alpha_omega) << ',' << csv_num(break_even_softmax_score(f.beta, tau)) << ','
                  << csv_num(omega_softmax_intersection(f.omega)) << ',' << name << '\n';
            grids.push_back(name);
        }
        dir.write("break_even.csv", lines.str());
        return Json{{"grids", grids}};
    });
}

// ---------------------------------------------------------------------------
// dist-check

struct DistFlags {
    double a{0};
    double b{3};
    double h_b{0};
    Index draws{100000};
    Index bins{30};
    std::uint64_t seed{1};
};

int cmd_dist_check(const Common& common, const DistFlags& f) {
    LinearDist d;
    try {
        d = make_linear(f.a, f.b, f.h_b);
        if (f.draws < 1 || f.bins < 1) throw DomainError("--draws and --bins must be >= 1");
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    OutputDir dir(out_dir(common, nullptr, "dist-check"), "dist-check");
    const Json config{{"a", f.a}, {"b", f.b}, {"h_b", f.h_b}, {"draws", f.draws}, {"bins", f.bins}, {"seed", f.seed}};
    if (!claim(dir, common.if_exists, config)) return kOk;
    return run_in(dir, config, [&] {
        std::ostringstream pdf_csv;
        pdf_csv << "x,pdf,cdf\n";
        for (int i = 0; i <= 300; ++i) {
            const double x = f.a + (f.b - f.a) * i / 300.0;
            pdf_csv << csv_num(x) << ',' << csv_num(pdf(d, x)) << ',' << csv_num(cdf(d, x)) << '\n';
        }
        dir.write("pdf.csv", pdf_csv.str());

        Rng rng = make_rng(f.seed, Stream::Lambda);
        std::vector<Index> counts(static_cast<std::size_t>(f.bins), 0);
        const double width = (f.b - f.a) / static_cast<double>(f.bins);
        for (Index i = 0; i < f.draws; ++i) {
            const double x = sample(d, uniform01(rng));
            const auto bin = std::min<Index>(f.bins - 1, static_cast<Index>((x - f.a) / width));
            ++counts[static_cast<std::size_t>(bin)];
        }
        std::ostringstream hist;
        hist << "lo,hi,count,expected,sigma,z\n";
        Index within = 0;
        double max_z = 0;
        for (Index k = 0; k < f.bins; ++k) {
            const double lo = f.a + width * static_cast<double>(k);
            const double hi = k + 1 == f.bins ? f.b : lo + width;
            const double p = cdf(d, hi) - cdf(d, lo);
            const double n = static_cast<double>(f.draws);
            const double expected = n * p;
            const double sigma = std::sqrt(n * p * (1 - p));
            const double c = static_cast<double>(counts[static_cast<std::size_t>(k)]);
            const double z = sigma > 0 ? (c - expected) / sigma : (c == expected ? 0.0 : INFINITY);
            if (std::abs(z) <= 3) ++within;
            max_z = std::max(max_z, std::abs(z));
            hist << csv_num(lo) << ',' << csv_num(hi) << ',' << counts[static_cast<std::size_t>(k)] << ','
                 << csv_num(expected) << ',' << csv_num(sigma) << ',' << csv_num(z) << '\n';
        }
        dir.write("histogram.csv", hist.str());
        std::cout << within << " of " << f.bins << " bins within 3 sigma, max |z| " << max_z << "\n";
        return Json{{"h_a", d.h_a}, {"bins_within_3sigma", within}, {"max_abs_z", max_z}};
    });
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("-c,--config", c.config, "JSON experiment config")->check(CLI::ExistingFile);
    app->add_option("-o,--out", c.out,
                    std::string("output directory (default $") + kRootEnv + "/<command>, else vslct-out/<command>)");
    std::map<std::string, IfExists> policies{
        {"skip", IfExists::Skip}, {"overwrite", IfExists::Overwrite}, {"error", IfExists::Error}};
    app->add_option("--if-exists", c.if_exists, "when complete output exists: skip, overwrite or error")
        ->transform(CLI::CheckedTransformer(policies, CLI::ignore_case));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vector-scaling loss and loss-conditional training on toy imbalanced data"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "vslct 0.1.0");

    Common common;

    GenDataFlags gen_flags;
    auto* gen = app.add_subcommand("gen-data", "write train/test CSVs of the synthetic dataset");
    add_common(gen, common);
    add_dataset_flags(gen, gen_flags);

    TrainFlags train_flags;
    auto* train = app.add_subcommand("train", "train one model; writes checkpoint, scores, ROC and manifest");
    add_common(train, common);
    add_dataset_flags(train, train_flags.data);
    add_train_flags(train, train_flags);
    train->add_option("--train-csv", train_flags.train_csv, "training CSV instead of synthetic data")
        ->check(CLI::ExistingFile);
    train->add_option("--test-csv", train_flags.test_csv, "test CSV (default: split from --train-csv)")
        ->check(CLI::ExistingFile);
    train->add_option("--omega", train_flags.omega, "minority class weight");
    train->add_option("--gamma", train_flags.gamma, "multiplicative logit exponent");
    train->add_option("--tau", train_flags.tau, "additive logit scale");
    train->add_option("--lambda-role", train_flags.lambda_role, "conditioned hyperparameter(s)")
        ->check(CLI::IsMember({"tau", "omega", "gamma", "all"}));
    train->add_option("--lambda-a", train_flags.lambda_a, "lower end of the lambda range");
    train->add_option("--lambda-b", train_flags.lambda_b, "upper end of the lambda range");
    train->add_option("--h-b", train_flags.h_b, "lambda density at the upper end");
    train->add_option("--eval-lambda", train_flags.eval_lambda, "conditioning vector used for evaluation")
        ->delimiter(',');
    train->add_option("--eval-grid", train_flags.eval_grid, "also report metrics at each of these lambdas")
        ->delimiter(',');
    train->add_flag("--baseline", train_flags.baseline, "ignore any lambda config and train one fixed loss");

    SweepFlags sweep_flags;
    auto* sweep = app.add_subcommand("sweep", "train a grid of configurations (resumable)");
    add_common(sweep, common);
    add_dataset_flags(sweep, sweep_flags.data);
    sweep->add_option("--method", sweep_flags.method, "baseline or lct")->check(CLI::IsMember({"baseline", "lct"}));
    sweep->add_option("--omegas", sweep_flags.omegas)->delimiter(',');
    sweep->add_option("--gammas", sweep_flags.gammas)->delimiter(',');
    sweep->add_option("--taus", sweep_flags.taus, "baseline tau grid")->delimiter(',');
    sweep->add_option("--h-bs", sweep_flags.h_bs, "LCT density heights at lambda_b")->delimiter(',');
    sweep->add_option("--seeds", sweep_flags.seeds)->delimiter(',');
    sweep->add_option("--workers", sweep_flags.workers, "concurrent runs");
    sweep->add_option("--epochs", sweep_flags.epochs);

    std::string scores_path;
    double threshold = 0.5;
    auto* roc = app.add_subcommand("roc", "ROC curve and metrics from a score,label CSV");
    add_common(roc, common);
    roc->add_option("--scores", scores_path, "CSV with header score,label")->required()->check(CLI::ExistingFile);
    roc->add_option("--threshold", threshold, "decision threshold for point metrics");

    std::vector<std::string> sweep_dirs;
    auto* analyze = app.add_subcommand("analyze", "aggregate ROC, polynomial fits and t-test over sweeps");
    add_common(analyze, common);
    analyze->add_option("--sweep", sweep_dirs, "sweep output directory (repeatable)")
        ->required()
        ->check(CLI::ExistingDirectory);

    GeometryFlags geo;
    auto* geometry = app.add_subcommand("loss-geometry", "loss-difference grids and break-even lines");
    add_common(geometry, common);
    geometry->add_option("--omega", geo.omega);
    geometry->add_option("--gamma", geo.gamma);
    geometry->add_option("--tau", geo.taus, "one grid per value")->delimiter(',');
    geometry->add_option("--beta", geo.beta, "imbalance ratio n0/n1");
    geometry->add_option("--lo", geo.lo);
    geometry->add_option("--hi", geo.hi);
    geometry->add_option("--steps", geo.steps, "grid points per axis");

    DistFlags dist;
    auto* dist_check = app.add_subcommand("dist-check", "analytic PDF/CDF and a sampled histogram");
    add_common(dist_check, common);
    dist_check->add_option("--a", dist.a);
    dist_check->add_option("--b", dist.b);
    dist_check->add_option("--h-b", dist.h_b, "density at b");
    dist_check->add_option("--draws", dist.draws);
    dist_check->add_option("--bins", dist.bins);
    dist_check->add_option("--seed", dist.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*gen) return cmd_gen_data(common, gen_flags);
        if (*train) return cmd_train(common, train_flags);
        if (*sweep) return cmd_sweep(common, sweep_flags);
        if (*roc) return cmd_roc(common, scores_path, threshold);
        if (*analyze) return cmd_analyze(common, sweep_dirs);
        if (*geometry) return cmd_loss_geometry(common, geo);
        if (*dist_check) return cmd_dist_check(common, dist);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}
