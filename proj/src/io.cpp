#include "vslct/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace vslct {

namespace fs = std::filesystem;

void write_text_atomic(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << text;
        if (!out) throw std::runtime_error("write failed for " + path.string());
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json(const fs::path& path) {
    try {
        return Json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
}

std::string hex_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_hex_double(const std::string& text) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') throw ParseError("not a number: '" + text + "'", 0);
    return v;
}

namespace {

std::string fixed17(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

/// Rows of a two-column numeric CSV with the given header.
std::vector<std::pair<double, double>> read_two_column_csv(const fs::path& path, const std::string& header) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw ParseError(path.string() + ": expected header '" + header + "'", 1);
    std::vector<std::pair<double, double>> rows;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw ParseError(path.string() + ": row " + std::to_string(row) + " must have two fields", row);
        char* end = nullptr;
        const std::string a = line.substr(0, comma);
        const std::string b = line.substr(comma + 1);
        const double x = std::strtod(a.c_str(), &end);
        const bool ok_a = end != a.c_str() && *end == '\0';
        const double y = std::strtod(b.c_str(), &end);
        const bool ok_b = end != b.c_str() && *end == '\0';
        if (!ok_a || !ok_b) throw ParseError(path.string() + ": row " + std::to_string(row) + " is not numeric", row);
        rows.emplace_back(x, y);
    }
    return rows;
}

} // namespace

std::string roc_csv(const RocCurve& curve) {
    std::ostringstream ss;
    ss << "fpr,tpr\n";
    for (const auto& p : curve.points) ss << fixed17(p.fpr) << ',' << fixed17(p.tpr) << '\n';
    return ss.str();
}

RocCurve read_roc_csv(const fs::path& path) {
    RocCurve curve;
    for (const auto& [f, t] : read_two_column_csv(path, "fpr,tpr")) curve.points.push_back({f, t});
    curve.auc = trapezoid_auc(curve.points);
    return curve;
}

Json to_json(const RocCurve& curve) {
    Json pts = Json::array();
    for (const auto& p : curve.points) pts.push_back({p.fpr, p.tpr});
    return Json{{"auc", curve.auc}, {"points", pts}};
}

RocCurve roc_from_json(const Json& j) {
    RocCurve curve;
    for (const auto& p : j.at("points")) curve.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    curve.auc = j.at("auc").get<double>();
    return curve;
}

std::string scores_csv(const LabeledScores& s) {
    s.validate();
    std::ostringstream ss;
    ss << "score,label\n";
    for (Index i = 0; i < s.size(); ++i) ss << fixed17(s.scores(i)) << ',' << s.labels(i) << '\n';
    return ss.str();
}

LabeledScores read_scores_csv(const fs::path& path) {
    const auto rows = read_two_column_csv(path, "score,label");
    LabeledScores s;
    s.scores.resize(static_cast<Index>(rows.size()));
    s.labels.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double label = rows[i].second;
        if (label != 0.0 && label != 1.0)
            throw ParseError(path.string() + ": row " + std::to_string(i + 2) + " has a label other than 0/1", i + 2);
        s.scores(static_cast<Index>(i)) = rows[i].first;
        s.labels(static_cast<Index>(i)) = static_cast<int>(label);
    }
    s.validate();
    return s;
}

Json to_json(const MetricBundle& m) {
    return Json{{"threshold", m.threshold},
                {"tp", m.counts.tp},
                {"fp", m.counts.fp},
                {"tn", m.counts.tn},
                {"fn", m.counts.fn},
                {"tpr", optional_json(m.tpr)},
                {"fpr", optional_json(m.fpr)},
                {"precision", optional_json(m.precision)},
                {"accuracy", optional_json(m.accuracy)},
                {"g_mean", optional_json(m.g_mean)},
                {"f1", optional_json(m.f1)},
                {"auc", optional_json(m.auc)}};
}

Json to_json(const ModelConfig& c) {
    return Json{{"input_dim", c.input_dim},
                {"hidden", c.hidden},
                {"lambda_dim", c.lambda_dim},
                {"film_hidden", c.film_hidden},
                {"film_mode", c.film_mode == FilmMode::Affine ? "affine" : "additive"}};
}

ModelConfig model_config_from_json(const Json& j) {
    ModelConfig c;
    c.input_dim = j.at("input_dim").get<Index>();
    c.hidden = j.at("hidden").get<std::vector<Index>>();
    c.lambda_dim = j.at("lambda_dim").get<Index>();
    c.film_hidden = j.at("film_hidden").get<Index>();
    const auto mode = j.at("film_mode").get<std::string>();
    if (mode == "affine")
        c.film_mode = FilmMode::Affine;
    else if (mode == "additive")
        c.film_mode = FilmMode::AdditiveOnly;
    else
        throw ConfigError("model.film_mode must be 'additive' or 'affine', got '" + mode + "'");
    c.validate();
    return c;
}

Json to_json(const TrainConfig& c) {
    Json milestones = Json::array();
    for (const auto& m : c.milestones) milestones.push_back({{"epoch", m.epoch}, {"factor", m.factor}});
    return Json{{"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"learning_rate", c.learning_rate},
                {"milestones", milestones},
                {"momentum", c.momentum},
                {"max_grad_norm", c.max_grad_norm},
                {"seed", c.seed}};
}

TrainConfig train_config_from_json(const Json& j) {
    TrainConfig c;
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<Index>();
    c.learning_rate = j.at("learning_rate").get<double>();
    for (const auto& m : j.at("milestones")) c.milestones.push_back({m.at("epoch").get<int>(), m.at("factor").get<double>()});
    c.momentum = j.at("momentum").get<double>();
    c.max_grad_norm = j.at("max_grad_norm").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

Json to_json(const VsParams& p) { return Json{{"omega", p.omega}, {"gamma", p.gamma}, {"tau", p.tau}}; }

Json checkpoint_json(const Model& m) {
    Json tensors = Json::array();
    for_each_tensor(
        [&tensors](const std::string& name, const auto& t) {
            Json values = Json::array();
            for (Index i = 0; i < t.size(); ++i) values.push_back(hex_double(t.data()[i]));
            tensors.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}, {"values", values}});
        },
        m);
    return Json{{"format", "vslct-checkpoint"}, {"version", 1}, {"config", to_json(m.config)}, {"tensors", tensors}};
}

Model model_from_checkpoint(const Json& j) {
    if (j.value("format", "") != "vslct-checkpoint") throw ParseError("not a vslct checkpoint", 0);
    Model m = Model::zeros(model_config_from_json(j.at("config")));
    const auto& tensors = j.at("tensors");
    std::size_t idx = 0;
    for_each_tensor(
        [&](const std::string& name, auto& t) {
            if (idx >= tensors.size()) throw ParseError("checkpoint is missing tensor " + name, 0);
            const auto& entry = tensors.at(idx++);
            if (entry.at("name").get<std::string>() != name)
                throw ParseError("checkpoint tensor order mismatch at " + name, 0);
            const auto shape = entry.at("shape").get<std::vector<Index>>();
            if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols())
                throw ParseError("checkpoint tensor " + name + " has the wrong shape", 0);
            const auto& values = entry.at("values");
            if (static_cast<Index>(values.size()) != t.size())
                throw ParseError("checkpoint tensor " + name + " has the wrong value count", 0);
            for (Index i = 0; i < t.size(); ++i)
                t.data()[i] = parse_hex_double(values.at(static_cast<std::size_t>(i)).template get<std::string>());
        },
        m);
    if (idx != tensors.size()) throw ParseError("checkpoint has extra tensors", 0);
    return m;
}

void save_checkpoint(const Model& m, const fs::path& path) { write_text_atomic(path, checkpoint_json(m).dump(1)); }

Model load_checkpoint(const fs::path& path) { return model_from_checkpoint(read_json(path)); }

std::string loss_grid_csv(const LossDifferenceGrid<double>& grid) {
    std::ostringstream ss;
    ss << "z0,z1,diff\n";
    for (Index i = 0; i < grid.axis.size(); ++i)
        for (Index j = 0; j < grid.axis.size(); ++j)
            ss << fixed17(grid.axis(i)) << ',' << fixed17(grid.axis(j)) << ',' << fixed17(grid.diff(i, j)) << '\n';
    return ss.str();
}

Json to_json(const SweepRecord& r) {
    Json j{{"key", r.key()},
           {"method", to_string(r.method)},
           {"omega", r.omega},
           {"gamma", r.gamma},
           {"seed", r.seed},
           {"status", r.ok ? "complete" : "failed"}};
    if (r.method == Method::Baseline)
        j["tau"] = r.tau;
    else
        j["h_b"] = r.h_b;
    if (!r.ok) {
        j["error"] = r.error;
        return j;
    }
    j["metrics"] = {{"auc", r.auc}, {"accuracy", r.accuracy}, {"tpr", r.tpr}};
    j["roc"] = to_json(r.roc);
    return j;
}

SweepRecord sweep_record_from_json(const Json& j) {
    SweepRecord r;
    r.method = method_from_string(j.at("method").get<std::string>());
    r.omega = j.at("omega").get<double>();
    r.gamma = j.at("gamma").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    if (r.method == Method::Baseline)
        r.tau = j.at("tau").get<double>();
    else
        r.h_b = j.at("h_b").get<double>();
    r.ok = j.at("status").get<std::string>() == "complete";
    if (!r.ok) {
        r.error = j.value("error", "");
        return r;
    }
    const auto& m = j.at("metrics");
    r.auc = m.at("auc").get<double>();
    r.accuracy = m.at("accuracy").get<double>();
    r.tpr = m.at("tpr").get<double>();
    r.roc = roc_from_json(j.at("roc"));
    return r;
}

std::string sweep_csv(const std::vector<SweepRecord>& records) {
    std::ostringstream ss;
    ss << "method,omega,gamma,tau,h_b,seed,auc,acc,tpr,status\n";
    for (const auto& r : records) {
        ss << to_string(r.method) << ',' << fixed17(r.omega) << ',' << fixed17(r.gamma) << ',';
        if (r.method == Method::Baseline)
            ss << fixed17(r.tau) << ",,";
        else
            ss << ',' << fixed17(r.h_b) << ',';
        ss << r.seed << ',';
        if (r.ok)
            ss << fixed17(r.auc) << ',' << fixed17(r.accuracy) << ',' << fixed17(r.tpr) << ",complete\n";
        else
            ss << ",,,failed\n";
    }
    return ss.str();
}

std::vector<SweepRecord> load_sweep_dir(const fs::path& dir) {
    const fs::path runs = dir / "runs";
    if (!fs::is_directory(runs)) throw ParseError(dir.string() + " has no runs/ directory", 0);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(runs))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<SweepRecord> records;
    for (const auto& f : files) {
        auto r = sweep_record_from_json(read_json(f));
        if (r.ok) records.push_back(std::move(r));
    }
    return records;
}

} // namespace vslct
