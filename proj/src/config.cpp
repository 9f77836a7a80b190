#include "vslct/config.hpp"

#include <set>

namespace vslct {

namespace fs = std::filesystem;

namespace {

// Reads optional keys from one JSON object and remembers which were used, so
// leftovers can be reported as unknown.
class Section {
public:
    Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(label() + " must be a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    void get(const std::string& key, T& out) {
        if (!j_.contains(key)) return;
        used_.insert(key);
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(name(key) + " has the wrong type (" + j_.at(key).dump() + ")");
        }
    }

    template <typename T>
    void get(const std::string& key, std::optional<T>& out) {
        if (!j_.contains(key)) return;
        if (j_.at(key).is_null()) {
            used_.insert(key);
            out.reset();
            return;
        }
        T value{};
        get(key, value);
        out = value;
    }

    Section child(const std::string& key) {
        used_.insert(key);
        return Section(j_.at(key), name(key));
    }

    const Json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!used_.count(key)) throw ConfigError("unknown config key '" + name(key) + "'");
    }

private:
    std::string label() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

    const Json& j_;
    std::string path_;
    std::set<std::string> used_;
};

// Re-throws validation failures with the section name in front.
template <typename Fn>
void in_section(const std::string& name, Fn&& fn) {
    try {
        fn();
    } catch (const DomainError& e) {
        throw ConfigError(name + ": " + e.what());
    }
}

LambdaRange range_from(Section s) {
    LambdaRange r;
    s.get("a", r.a);
    s.get("b", r.b);
    s.get("h_b", r.h_b);
    s.finish();
    return r;
}

LctConfig lct_from(Section s, const VsParams& constants) {
    LctConfig lct;
    lct.constants = constants;
    std::string role = "tau";
    s.get("role", role);
    lct.role = lambda_role_from_string(role);
    if (s.has("ranges")) {
        const Json& ranges = s.raw("ranges");
        if (!ranges.is_array()) throw ConfigError(s.name("ranges") + " must be an array");
        lct.ranges.clear();
        for (std::size_t i = 0; i < ranges.size(); ++i)
            lct.ranges.push_back(range_from(Section(ranges[i], s.name("ranges") + "[" + std::to_string(i) + "]")));
    } else {
        lct.ranges.assign(static_cast<std::size_t>(lct.lambda_dim()), LambdaRange{});
    }
    std::vector<double> eval{3.0};
    if (lct.role == LambdaRole::Omega) eval = {0.5};
    if (lct.role == LambdaRole::Gamma) eval = {0.0};
    if (lct.role == LambdaRole::All) eval = {0.5, 0.0, 3.0};
    s.get("eval", eval);
    lct.eval_lambda = Eigen::Map<const Vector>(eval.data(), static_cast<Index>(eval.size()));
    s.finish();
    return lct;
}

Json lct_json(const LctConfig& lct) {
    Json ranges = Json::array();
    for (const auto& r : lct.ranges) ranges.push_back({{"a", r.a}, {"b", r.b}, {"h_b", r.h_b}});
    return Json{{"role", to_string(lct.role)},
                {"ranges", ranges},
                {"eval", std::vector<double>(lct.eval_lambda.begin(), lct.eval_lambda.end())}};
}

} // namespace

void DatasetSection::validate() const {
    if (source == "synthetic") {
        if (n0 < 1 || n1 < 1) throw ConfigError("dataset.n0 and dataset.n1 must be >= 1");
        if (dim < 1) throw ConfigError("dataset.dim must be >= 1");
        if (!(separation >= 0)) throw ConfigError("dataset.separation must be >= 0");
        if (test_n0 >= n0 || test_n1 >= n1)
            throw ConfigError("dataset.test_n0/test_n1 must leave training samples of both classes");
    } else if (source == "csv") {
        if (!path) throw ConfigError("dataset.path is required when dataset.source is 'csv'");
    } else {
        throw ConfigError("dataset.source must be 'synthetic' or 'csv', got '" + source + "'");
    }
    if (test_n0 < 1 || test_n1 < 1) throw ConfigError("dataset.test_n0 and dataset.test_n1 must be >= 1");
    if (target_beta && !(*target_beta >= 1)) throw ConfigError("dataset.target_beta must be >= 1");
}

void ExperimentConfig::validate() const {
    dataset.validate();
    in_section("model", [&] { model.validate(); });
    in_section("train", [&] { train.validate(); });
    in_section("loss", [&] { loss.params.validate(); });
    if (loss.lct) {
        in_section("loss.lambda", [&] { loss.lct->validate(); });
        if (model.lambda_dim != loss.lct->lambda_dim())
            throw ConfigError("model.lambda_dim is " + std::to_string(model.lambda_dim) + " but loss.lambda.role '" +
                              to_string(loss.lct->role) + "' needs " + std::to_string(loss.lct->lambda_dim()));
    }
    if (sweep.seeds.empty()) throw ConfigError("sweep.seeds must not be empty");
    if (sweep.workers < 1) throw ConfigError("sweep.workers must be >= 1");
}

ExperimentConfig experiment_config_from_json(const Json& j) {
    ExperimentConfig c;
    Section root(j, "");

    if (root.has("dataset")) {
        Section s = root.child("dataset");
        auto& d = c.dataset;
        s.get("source", d.source);
        std::optional<std::string> path, test_path;
        s.get("path", path);
        s.get("test_path", test_path);
        if (path) d.path = *path;
        if (test_path) d.test_path = *test_path;
        s.get("n0", d.n0);
        s.get("n1", d.n1);
        s.get("dim", d.dim);
        s.get("separation", d.separation);
        s.get("seed", d.seed);
        s.get("test_n0", d.test_n0);
        s.get("test_n1", d.test_n1);
        s.get("target_beta", d.target_beta);
        s.finish();
    }

    bool lambda_dim_given = false;
    if (root.has("model")) {
        Section s = root.child("model");
        auto& m = c.model;
        s.get("input_dim", m.input_dim);
        s.get("hidden", m.hidden);
        lambda_dim_given = s.has("lambda_dim");
        s.get("lambda_dim", m.lambda_dim);
        s.get("film_hidden", m.film_hidden);
        std::string mode = m.film_mode == FilmMode::Affine ? "affine" : "additive";
        s.get("film_mode", mode);
        if (mode == "affine")
            m.film_mode = FilmMode::Affine;
        else if (mode == "additive")
            m.film_mode = FilmMode::AdditiveOnly;
        else
            throw ConfigError("model.film_mode must be 'additive' or 'affine', got '" + mode + "'");
        s.finish();
    }

    if (root.has("loss")) {
        Section s = root.child("loss");
        s.get("omega", c.loss.params.omega);
        s.get("gamma", c.loss.params.gamma);
        s.get("tau", c.loss.params.tau);
        if (s.has("lambda") && !s.raw("lambda").is_null())
            c.loss.lct = lct_from(Section(s.raw("lambda"), "loss.lambda"), c.loss.params);
        s.finish();
    }
    if (c.loss.lct && !lambda_dim_given) c.model.lambda_dim = c.loss.lct->lambda_dim();

    if (root.has("train")) {
        Section s = root.child("train");
        auto& t = c.train;
        s.get("epochs", t.epochs);
        s.get("batch_size", t.batch_size);
        s.get("learning_rate", t.learning_rate);
        s.get("momentum", t.momentum);
        s.get("max_grad_norm", t.max_grad_norm);
        s.get("seed", t.seed);
        if (s.has("milestones")) {
            const Json& ms = s.raw("milestones");
            if (!ms.is_array()) throw ConfigError("train.milestones must be an array");
            t.milestones.clear();
            for (std::size_t i = 0; i < ms.size(); ++i) {
                Section m(ms[i], "train.milestones[" + std::to_string(i) + "]");
                LrMilestone milestone;
                m.get("epoch", milestone.epoch);
                m.get("factor", milestone.factor);
                m.finish();
                t.milestones.push_back(milestone);
            }
        }
        s.finish();
    }

    if (root.has("sweep")) {
        Section s = root.child("sweep");
        auto& w = c.sweep;
        std::string method = to_string(w.method);
        s.get("method", method);
        w.method = method_from_string(method);
        s.get("omegas", w.omegas);
        s.get("gammas", w.gammas);
        s.get("taus", w.taus);
        s.get("h_bs", w.h_bs);
        s.get("lambda_a", w.lambda_a);
        s.get("lambda_b", w.lambda_b);
        s.get("eval_tau", w.eval_tau);
        s.get("seeds", w.seeds);
        s.get("workers", w.workers);
        s.finish();
    }

    std::optional<std::string> output;
    root.get("output", output);
    if (output) c.output = *output;
    root.finish();
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    Json j;
    try {
        j = read_json(path);
    } catch (const ParseError& e) {
        throw ConfigError(std::string("config file ") + e.what());
    }
    try {
        return experiment_config_from_json(j);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

Json to_json(const ExperimentConfig& c) {
    const auto& d = c.dataset;
    Json dataset{{"source", d.source}};
    if (d.source == "csv") {
        dataset["path"] = d.path ? d.path->string() : "";
        if (d.test_path) dataset["test_path"] = d.test_path->string();
    } else {
        dataset["n0"] = d.n0;
        dataset["n1"] = d.n1;
        dataset["dim"] = d.dim;
        dataset["separation"] = d.separation;
    }
    dataset["seed"] = d.seed;
    dataset["test_n0"] = d.test_n0;
    dataset["test_n1"] = d.test_n1;
    dataset["target_beta"] = d.target_beta ? Json(*d.target_beta) : Json(nullptr);

    Json loss = to_json(c.loss.params);
    loss["lambda"] = c.loss.lct ? lct_json(*c.loss.lct) : Json(nullptr);

    const auto& w = c.sweep;
    Json sweep{{"method", to_string(w.method)}, {"omegas", w.omegas}, {"gammas", w.gammas},
               {"taus", w.taus},                {"h_bs", w.h_bs},     {"lambda_a", w.lambda_a},
               {"lambda_b", w.lambda_b},        {"eval_tau", w.eval_tau}, {"seeds", w.seeds},
               {"workers", w.workers}};

    Json out{{"dataset", dataset}, {"model", to_json(c.model)}, {"loss", loss},
             {"train", to_json(c.train)}, {"sweep", sweep}};
    out["output"] = c.output ? Json(c.output->string()) : Json(nullptr);
    return out;
}

std::pair<Dataset, Dataset> load_datasets(const DatasetSection& d) {
    d.validate();
    Dataset train, test;
    if (d.source == "synthetic") {
        const Dataset all = synth_gaussian(d.n0, d.n1, d.dim, d.separation, d.seed);
        std::tie(train, test) = split_by_counts(all, d.test_n0, d.test_n1, d.seed);
    } else if (d.test_path) {
        train = load_csv(*d.path);
        test = load_csv(*d.test_path);
    } else {
        std::tie(train, test) = split_by_counts(load_csv(*d.path), d.test_n0, d.test_n1, d.seed);
    }
    if (d.target_beta) train = subsample_minority(train, *d.target_beta, d.seed);
    return {std::move(train), std::move(test)};
}

SweepSpec sweep_spec(const ExperimentConfig& c) {
    SweepSpec s;
    const auto& w = c.sweep;
    s.method = w.method;
    s.omegas = w.omegas;
    s.gammas = w.gammas;
    s.taus = w.taus;
    s.h_bs = w.h_bs;
    s.lambda_a = w.lambda_a;
    s.lambda_b = w.lambda_b;
    s.eval_tau = w.eval_tau;
    s.model = c.model;
    s.model.lambda_dim = 1;
    s.train = c.train;
    s.seeds = w.seeds;
    s.workers = w.workers;
    return s;
}

} // namespace vslct
