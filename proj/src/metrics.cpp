#include "vslct/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vslct {

Index LabeledScores::positives() const { return labels.count(); }
Index LabeledScores::negatives() const { return labels.size() - labels.count(); }

void LabeledScores::validate() const {
    if (scores.size() != labels.size())
        throw ConfigError("LabeledScores: " + std::to_string(scores.size()) + " scores but " +
                          std::to_string(labels.size()) + " labels");
    if (scores.size() == 0) throw ConfigError("LabeledScores: empty");
    for (Index i = 0; i < labels.size(); ++i) {
        if (labels(i) != 0 && labels(i) != 1)
            throw ConfigError("LabeledScores: label at index " + std::to_string(i) + " is not 0 or 1");
        if (!std::isfinite(scores(i)))
            throw ConfigError("LabeledScores: score at index " + std::to_string(i) + " is not finite");
    }
}

void LabeledScores::validate_both_classes() const {
    validate();
    if (positives() == 0 || negatives() == 0)
        throw ConfigError("LabeledScores: both classes must be present");
}

ConfusionCounts confusion(const LabeledScores& s, double threshold) {
    s.validate();
    ConfusionCounts c;
    for (Index i = 0; i < s.size(); ++i) {
        const bool predicted = s.scores(i) > threshold;
        if (s.labels(i) == 1)
            (predicted ? c.tp : c.fn)++;
        else
            (predicted ? c.fp : c.tn)++;
    }
    return c;
}

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

std::optional<double> tpr(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fn); }
std::optional<double> fpr(const ConfusionCounts& c) { return ratio(c.fp, c.fp + c.tn); }
std::optional<double> tnr(const ConfusionCounts& c) { return ratio(c.tn, c.fp + c.tn); }
std::optional<double> precision(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fp); }
std::optional<double> overall_accuracy(const ConfusionCounts& c) { return ratio(c.tp + c.tn, c.total()); }

std::optional<double> g_mean(const ConfusionCounts& c) {
    const auto se = tpr(c);
    const auto sp = tnr(c);
    if (!se || !sp) return std::nullopt;
    return std::sqrt(*se * *sp);
}

std::optional<double> f_beta(double p, double r, double fbeta) {
    if (!(fbeta > 0)) throw DomainError("f_beta: importance ratio must be > 0");
    const double b2 = fbeta * fbeta;
    const double den = b2 * p + r;
    if (den == 0) return std::nullopt;
    return (1 + b2) * p * r / den;
}

std::optional<double> f_beta(const ConfusionCounts& c, double fbeta) {
    const auto p = precision(c);
    const auto r = tpr(c);
    if (!p || !r) return std::nullopt;
    return f_beta(*p, *r, fbeta);
}

double trapezoid_auc(const std::vector<RocPoint>& points) {
    double area = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
        area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2;
    return area;
}

RocCurve roc_curve(const LabeledScores& s) {
    s.validate_both_classes();
    const Index n = s.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return s.scores(a) > s.scores(b); });

    const double pos = static_cast<double>(s.positives());
    const double neg = static_cast<double>(s.negatives());
    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    // Lowering the threshold past each distinct score admits its whole tie group.
    for (std::size_t i = 0; i < order.size();) {
        const double value = s.scores(order[i]);
        while (i < order.size() && s.scores(order[i]) == value) {
            (s.labels(order[i]) == 1 ? tp : fp)++;
            ++i;
        }
        const RocPoint p{static_cast<double>(fp) / neg, static_cast<double>(tp) / pos};
        if (!(p == curve.points.back())) curve.points.push_back(p);
    }
    curve.auc = trapezoid_auc(curve.points);
    return curve;
}

double auc_pair_oracle(const LabeledScores& s) {
    s.validate_both_classes();
    double wins = 0;
    for (Index i = 0; i < s.size(); ++i) {
        if (s.labels(i) != 1) continue;
        for (Index j = 0; j < s.size(); ++j) {
            if (s.labels(j) != 0) continue;
            if (s.scores(i) > s.scores(j))
                wins += 1;
            else if (s.scores(i) == s.scores(j))
                wins += 0.5;
        }
    }
    return wins / (static_cast<double>(s.positives()) * static_cast<double>(s.negatives()));
}

Vector roc_at_fpr_grid(const RocCurve& curve, const Vector& grid) {
    const auto& pts = curve.points;
    if (pts.empty()) throw ConfigError("roc_at_fpr_grid: empty curve");
    Vector out(grid.size());
    for (Index g = 0; g < grid.size(); ++g) {
        const double x = grid(g);
        if (!(x >= 0 && x <= 1)) throw DomainError("roc_at_fpr_grid: grid values must lie in [0, 1]");
        if (g > 0 && x < grid(g - 1)) throw DomainError("roc_at_fpr_grid: grid must be nondecreasing");
        // Last vertex with fpr <= x; among equal fprs it carries the highest tpr.
        const auto it = std::upper_bound(pts.begin(), pts.end(), x,
                                         [](double v, const RocPoint& p) { return v < p.fpr; });
        if (it == pts.begin()) {
            out(g) = pts.front().tpr;
            continue;
        }
        const RocPoint& left = *std::prev(it);
        if (left.fpr == x || it == pts.end()) {
            out(g) = left.tpr;
            continue;
        }
        const RocPoint& right = *it;
        const double w = (x - left.fpr) / (right.fpr - left.fpr);
        out(g) = left.tpr + w * (right.tpr - left.tpr);
    }
    return out;
}

MetricBundle metric_bundle(const LabeledScores& s, double threshold) {
    MetricBundle m;
    m.threshold = threshold;
    m.counts = confusion(s, threshold);
    m.tpr = tpr(m.counts);
    m.fpr = fpr(m.counts);
    m.precision = precision(m.counts);
    m.accuracy = overall_accuracy(m.counts);
    m.g_mean = g_mean(m.counts);
    m.f1 = f_beta(m.counts, 1.0);
    if (s.positives() > 0 && s.negatives() > 0) m.auc = roc_curve(s).auc;
    return m;
}

} // namespace vslct
