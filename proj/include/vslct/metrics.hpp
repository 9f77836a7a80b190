#pragma once

// Binary classification metrics. Class 1 (minority) is the positive class and
// a sample is predicted positive iff its score p1 > t.

#include "vslct/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vslct {

struct LabeledScores {
    Vector scores;      ///< minority-class softmax score p1 per sample
    LabelVector labels; ///< 0 or 1 per sample

    Index size() const { return scores.size(); }
    Index positives() const;
    Index negatives() const;

    /// Equal nonzero lengths, binary labels, finite scores.
    void validate() const;
    /// validate() plus at least one sample of each class.
    void validate_both_classes() const;
};

struct ConfusionCounts {
    std::int64_t tp{0};
    std::int64_t fp{0};
    std::int64_t tn{0};
    std::int64_t fn{0};

    std::int64_t total() const { return tp + fp + tn + fn; }
};

ConfusionCounts confusion(const LabeledScores& s, double threshold);

// Rate metrics return std::nullopt when their denominator is zero.
std::optional<double> tpr(const ConfusionCounts& c);
std::optional<double> fpr(const ConfusionCounts& c);
std::optional<double> tnr(const ConfusionCounts& c);
std::optional<double> precision(const ConfusionCounts& c);
std::optional<double> overall_accuracy(const ConfusionCounts& c);
std::optional<double> g_mean(const ConfusionCounts& c);

/// F-beta from precision and recall; `fbeta` weighs recall against precision.
std::optional<double> f_beta(double precision, double recall, double fbeta);
std::optional<double> f_beta(const ConfusionCounts& c, double fbeta);

struct RocPoint {
    double fpr{0};
    double tpr{0};
    bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
    std::vector<RocPoint> points; ///< from (0,0) to (1,1), nondecreasing in both coordinates
    double auc{0};
};

/// ROC over every distinct score threshold, with trapezoidal AUC.
RocCurve roc_curve(const LabeledScores& s);

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Brute force over all pairs.
double auc_pair_oracle(const LabeledScores& s);

/// Trapezoidal area under a polyline of points ordered by fpr.
double trapezoid_auc(const std::vector<RocPoint>& points);

/// Piecewise-linear TPR at each grid FPR. Where the curve rises vertically the
/// highest TPR at that FPR is used.
Vector roc_at_fpr_grid(const RocCurve& curve, const Vector& grid);

/// Point metrics at one threshold.
struct MetricBundle {
    double threshold{0.5};
    ConfusionCounts counts;
    std::optional<double> tpr, fpr, precision, accuracy, g_mean, f1;
    std::optional<double> auc;
};

MetricBundle metric_bundle(const LabeledScores& s, double threshold);

} // namespace vslct
