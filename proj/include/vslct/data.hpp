#pragma once

#include "vslct/types.hpp"

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace vslct {

/// Labeled binary samples, one per row of `features`. Label 0 is the majority class.
struct Dataset {
    Matrix features;    ///< n x d
    LabelVector labels; ///< n values in {0, 1}

    Index size() const { return features.rows(); }
    Index dim() const { return features.cols(); }
    Index n0() const { return labels.size() - labels.count(); }
    Index n1() const { return labels.count(); }
    /// n0 / n1; throws when there are no minority samples.
    double beta() const;

    /// Rows selected by `rows`, in that order.
    Dataset subset(const std::vector<Index>& rows) const;
    void validate() const;
};

/// Class 0 ~ N(0, I), class 1 ~ N(separation * e_1, I). Majority rows come first.
Dataset synth_gaussian(Index n0, Index n1, Index dim, double separation, std::uint64_t seed);

/// Keeps every majority sample and floor(n0 / target_beta) minority samples
/// drawn without replacement. Retained rows keep their original order.
Dataset subsample_minority(const Dataset& d, double target_beta, std::uint64_t seed);

/// Stratified split; `test_fraction` of each class (rounded) goes to the test side.
std::pair<Dataset, Dataset> split(const Dataset& d, double test_fraction, std::uint64_t seed);

/// Split with explicit per-class test sizes, e.g. a balanced test set.
std::pair<Dataset, Dataset> split_by_counts(const Dataset& d, Index test_n0, Index test_n1, std::uint64_t seed);

/// CSV with a header row; the column named "label" holds 0/1, every other column is a feature.
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& d, const std::filesystem::path& path);

} // namespace vslct
