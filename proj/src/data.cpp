#include "vslct/data.hpp"

#include "vslct/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>

namespace vslct {

double Dataset::beta() const {
    if (n1() == 0) throw DomainError("dataset has no minority samples");
    return static_cast<double>(n0()) / static_cast<double>(n1());
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
    Dataset out;
    out.features = features(rows, Eigen::all);
    out.labels = labels(rows);
    return out;
}

void Dataset::validate() const {
    if (features.rows() != labels.size()) throw ConfigError("dataset: feature rows and label count differ");
    for (Index i = 0; i < labels.size(); ++i)
        if (labels(i) != 0 && labels(i) != 1)
            throw ConfigError("dataset: label at row " + std::to_string(i) + " is not 0 or 1");
}

Dataset synth_gaussian(Index n0, Index n1, Index dim, double separation, std::uint64_t seed) {
    if (n0 < 1 || n1 < 1) throw DomainError("synth_gaussian: need n0, n1 >= 1");
    if (dim < 1) throw DomainError("synth_gaussian: need dim >= 1");
    if (!(separation >= 0)) throw DomainError("synth_gaussian: separation must be >= 0");
    Rng rng = make_rng(seed, Stream::Data);
    std::normal_distribution<double> normal(0.0, 1.0);
    Dataset d;
    d.features.resize(n0 + n1, dim);
    d.labels.resize(n0 + n1);
    for (Index i = 0; i < n0 + n1; ++i) {
        const bool minority = i >= n0;
        d.labels(i) = minority ? 1 : 0;
        for (Index j = 0; j < dim; ++j) d.features(i, j) = normal(rng);
        if (minority) d.features(i, 0) += separation;
    }
    return d;
}

namespace {

std::vector<Index> rows_with_label(const Dataset& d, int label) {
    std::vector<Index> rows;
    for (Index i = 0; i < d.size(); ++i)
        if (d.labels(i) == label) rows.push_back(i);
    return rows;
}

} // namespace

Dataset subsample_minority(const Dataset& d, double target_beta, std::uint64_t seed) {
    d.validate();
    const double current = d.beta();
    // Relative slack so that target == current beta survives rounding.
    if (!(target_beta >= current * (1 - 1e-12)))
        throw DomainError("subsample_minority: target beta " + std::to_string(target_beta) +
                          " is below the current beta " + std::to_string(current));
    const auto keep_n1 = static_cast<Index>(std::floor(static_cast<double>(d.n0()) / target_beta + 1e-9));
    if (keep_n1 < 1) throw DomainError("subsample_minority: target beta leaves no minority samples");

    std::vector<Index> minority = rows_with_label(d, 1);
    Rng rng = make_rng(seed, Stream::Subsample);
    shuffle_in_place(minority, rng);
    minority.resize(static_cast<std::size_t>(std::min<Index>(keep_n1, static_cast<Index>(minority.size()))));
    std::vector<bool> keep(static_cast<std::size_t>(d.size()), false);
    for (Index r : minority) keep[static_cast<std::size_t>(r)] = true;

    std::vector<Index> rows;
    for (Index i = 0; i < d.size(); ++i)
        if (d.labels(i) == 0 || keep[static_cast<std::size_t>(i)]) rows.push_back(i);
    return d.subset(rows);
}

std::pair<Dataset, Dataset> split_by_counts(const Dataset& d, Index test_n0, Index test_n1, std::uint64_t seed) {
    d.validate();
    if (test_n0 < 0 || test_n1 < 0 || test_n0 > d.n0() || test_n1 > d.n1())
        throw DomainError("split: requested test counts exceed the available samples");
    Rng rng = make_rng(seed, Stream::Split);
    std::vector<Index> train_rows, test_rows;
    for (int label : {0, 1}) {
        std::vector<Index> rows = rows_with_label(d, label);
        shuffle_in_place(rows, rng);
        const auto n_test = static_cast<std::size_t>(label == 0 ? test_n0 : test_n1);
        test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
        train_rows.insert(train_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    return {d.subset(train_rows), d.subset(test_rows)};
}

std::pair<Dataset, Dataset> split(const Dataset& d, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0 && test_fraction < 1)) throw DomainError("split: fraction must lie in (0, 1)");
    const auto t0 = static_cast<Index>(std::llround(test_fraction * static_cast<double>(d.n0())));
    const auto t1 = static_cast<Index>(std::llround(test_fraction * static_cast<double>(d.n1())));
    return split_by_counts(d, t0, t1, seed);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double& value) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc() && ptr == end;
}

} // namespace

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header row", 1);
    auto header = split_fields(line);
    for (auto& h : header) h = trim(h);
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
    const auto label_it = std::find(header.begin(), header.end(), "label");
    if (label_it == header.end()) throw ParseError(path.string() + ": header has no 'label' column", 1);
    const auto label_col = static_cast<std::size_t>(label_it - header.begin());
    const Index dim = static_cast<Index>(header.size()) - 1;
    if (dim < 1) throw ParseError(path.string() + ": no feature columns", 1);

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != header.size())
            throw ParseError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                 " fields, expected " + std::to_string(header.size()),
                             row);
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string f = trim(fields[c]);
            double v = 0;
            if (!parse_double(f, v) || !std::isfinite(v))
                throw ParseError(path.string() + ": row " + std::to_string(row) + ", column '" + header[c] +
                                     "' is not a finite number: '" + f + "'",
                                 row);
            if (c == label_col) {
                if (v != 0.0 && v != 1.0)
                    throw ParseError(path.string() + ": row " + std::to_string(row) + " has label " + f +
                                         ", expected 0 or 1",
                                     row);
                labels.push_back(static_cast<int>(v));
            } else {
                values.push_back(v);
            }
        }
    }
    const Index n = static_cast<Index>(labels.size());
    if (n == 0) throw ParseError(path.string() + ": no data rows", row);
    Dataset d;
    d.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), n, dim);
    d.labels = Eigen::Map<const LabelVector>(labels.data(), n);
    if (d.n0() == 0 || d.n1() == 0)
        throw ParseError(path.string() + ": class " + std::string(d.n1() == 0 ? "1" : "0") + " has no samples", 0);
    return d;
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
    d.validate();
    const auto tmp = path.string() + ".partial";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << "label";
        for (Index j = 0; j < d.dim(); ++j) out << ",x" << j;
        out << '\n' << std::setprecision(17);
        for (Index i = 0; i < d.size(); ++i) {
            out << d.labels(i);
            for (Index j = 0; j < d.dim(); ++j) out << ',' << d.features(i, j);
            out << '\n';
        }
        if (!out) throw std::runtime_error("write failed for " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace vslct
