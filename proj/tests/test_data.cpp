#include "vslct/data.hpp"
#include "vslct/metrics.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace vslct;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& text) {
    const fs::path dir = fs::temp_directory_path() / "vslct_test_data";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

std::set<std::vector<double>> row_set(const Dataset& d) {
    std::set<std::vector<double>> rows;
    for (Index i = 0; i < d.size(); ++i) {
        std::vector<double> r{static_cast<double>(d.labels(i))};
        for (Index j = 0; j < d.dim(); ++j) r.push_back(d.features(i, j));
        rows.insert(r);
    }
    return rows;
}

} // namespace

TEST_CASE("synthetic gaussians") {
    const Dataset d = synth_gaussian(1000, 10, 2, 2.5, 1);
    CHECK(d.size() == 1010);
    CHECK(d.dim() == 2);
    CHECK(d.n0() == 1000);
    CHECK(d.n1() == 10);
    CHECK(d.beta() == 100.0);
    CHECK(d.labels.head(1000).sum() == 0);
    CHECK(d.labels.tail(10).sum() == 10);

    SUBCASE("class means") {
        const Dataset big = synth_gaussian(20000, 20000, 2, 2.5, 2);
        const Vector m0 = big.features.topRows(20000).colwise().mean();
        const Vector m1 = big.features.bottomRows(20000).colwise().mean();
        CHECK(std::abs(m0(0)) < 0.05);
        CHECK(std::abs(m0(1)) < 0.05);
        CHECK(std::abs(m1(0) - 2.5) < 0.05);
        CHECK(std::abs(m1(1)) < 0.05);
    }
    SUBCASE("optimal score reaches the Bayes AUC") {
        // Phi(sep / sqrt(2)) for separation 4.
        const Dataset big = synth_gaussian(5000, 5000, 2, 4.0, 3);
        LabeledScores s{big.features.col(0), big.labels};
        CHECK(std::abs(roc_curve(s).auc - 0.9976611325094764) < 0.002);
    }
    SUBCASE("deterministic per seed") {
        CHECK(synth_gaussian(50, 5, 2, 1.0, 9).features == synth_gaussian(50, 5, 2, 1.0, 9).features);
        CHECK(synth_gaussian(50, 5, 2, 1.0, 9).features != synth_gaussian(50, 5, 2, 1.0, 10).features);
    }
    CHECK_THROWS_AS(synth_gaussian(0, 5, 2, 1.0, 1), DomainError);
    CHECK_THROWS_AS(synth_gaussian(5, 5, 0, 1.0, 1), DomainError);
}

TEST_CASE("subsample minority") {
    const Dataset d = synth_gaussian(5000, 500, 2, 2.5, 4);
    const Dataset s100 = subsample_minority(d, 100, 4);
    CHECK(s100.n0() == 5000);
    CHECK(s100.n1() == 50);
    CHECK(subsample_minority(d, 200, 4).n1() == 25);
    CHECK(subsample_minority(d, 10, 4).n1() == 500);
    CHECK(subsample_minority(d, 3000, 4).n1() == 1);
    CHECK_THROWS_AS(subsample_minority(d, 5, 4), DomainError);
    CHECK_THROWS_AS(subsample_minority(d, 6000, 4), DomainError);

    // Retained rows are a subset of the original rows, majority untouched.
    const auto original = row_set(d);
    for (const auto& r : row_set(s100)) CHECK(original.count(r) == 1);
    CHECK(s100.features.topRows(5000) == d.features.topRows(5000));

    CHECK(subsample_minority(d, 100, 4).features == s100.features);
    CHECK(subsample_minority(d, 100, 5).features != s100.features);

    SUBCASE("nested targets only remove minority samples") {
        const Dataset s200 = subsample_minority(d, 200, 4);
        CHECK(s200.n1() < s100.n1());
        CHECK(s200.n0() == s100.n0());
    }
}

TEST_CASE("stratified split") {
    const Dataset d = synth_gaussian(2500, 2500, 2, 2.5, 7);
    const auto [train, test] = split_by_counts(d, 500, 500, 7);
    CHECK(test.n0() == 500);
    CHECK(test.n1() == 500);
    CHECK(train.n0() == 2000);
    CHECK(train.n1() == 2000);
    // Disjoint and exhaustive.
    auto all = row_set(train);
    for (const auto& r : row_set(test)) CHECK(all.insert(r).second);
    CHECK(all == row_set(d));

    const auto [tr2, te2] = split(synth_gaussian(1000, 101, 2, 1.0, 1), 0.2, 3);
    CHECK(te2.n0() == 200);
    CHECK(te2.n1() == 20);
    CHECK(tr2.n1() == 81);
    CHECK_THROWS_AS(split(d, 1.0, 1), DomainError);
    CHECK_THROWS_AS(split_by_counts(d, 2600, 1, 1), DomainError);
}

TEST_CASE("csv round trip") {
    const Dataset d = synth_gaussian(20, 5, 3, 1.0, 11);
    const fs::path p = fs::temp_directory_path() / "vslct_test_data" / "round.csv";
    fs::create_directories(p.parent_path());
    save_csv(d, p);
    const Dataset back = load_csv(p);
    CHECK(back.features == d.features);
    CHECK(back.labels == d.labels);
    CHECK_FALSE(fs::exists(p.string() + ".partial"));
}

TEST_CASE("csv parsing") {
    SUBCASE("label column anywhere, BOM and blank lines") {
        const Dataset d = load_csv(temp_file("ok.csv", "\xEF\xBB\xBFx,label,y\n1.5,0,2\n\n-3e-1,1, 4\n"));
        CHECK(d.size() == 2);
        CHECK(d.features(0, 0) == 1.5);
        CHECK(d.features(0, 1) == 2.0);
        CHECK(d.features(1, 0) == -0.3);
        CHECK(d.labels(1) == 1);
    }
    SUBCASE("bad label reports its row") {
        try {
            load_csv(temp_file("bad_label.csv", "label,x\n0,1\n1,2\n2,3\n"));
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.row() == 4);
            CHECK(std::string(e.what()).find("row 4") != std::string::npos);
        }
    }
    SUBCASE("malformed rows") {
        CHECK_THROWS_AS(load_csv(temp_file("short.csv", "label,x\n0,1\n1\n")), ParseError);
        CHECK_THROWS_AS(load_csv(temp_file("nan.csv", "label,x\n0,nan\n1,1\n")), ParseError);
        CHECK_THROWS_AS(load_csv(temp_file("text.csv", "label,x\n0,abc\n1,1\n")), ParseError);
        CHECK_THROWS_AS(load_csv(temp_file("nolabel.csv", "a,b\n0,1\n")), ParseError);
        CHECK_THROWS_AS(load_csv(temp_file("oneclass.csv", "label,x\n0,1\n0,2\n")), ParseError);
        CHECK_THROWS_AS(load_csv(temp_file("empty.csv", "")), ParseError);
        CHECK_THROWS_AS(load_csv("/nonexistent/data.csv"), ParseError);
    }
}
