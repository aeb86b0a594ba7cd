#include "bandgate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bandgate/error.hpp"

namespace bandgate {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_nonempty(const ConfusionMatrix& cm)
{
    if (cm.total() == 0) {
        throw ValidationError("confusion matrix is empty");
    }
}
} // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0)
{
    if (classes == 0) {
        throw ValidationError("confusion matrix needs at least one class");
    }
}

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::uint64_t>>& rows)
{
    ConfusionMatrix cm(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
        if (rows[t].size() != rows.size()) {
            throw ValidationError("confusion matrix must be square");
        }
        for (std::size_t p = 0; p < rows.size(); ++p) {
            cm.counts_[t * cm.classes_ + p] = rows[t][p];
        }
    }
    return cm;
}

ConfusionMatrix ConfusionMatrix::from_predictions(std::span<const int> truth,
                                                  std::span<const int> predicted,
                                                  std::size_t classes)
{
    if (truth.size() != predicted.size()) {
        throw ValidationError("truth and prediction counts differ");
    }
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        cm.add(truth[i], predicted[i]);
    }
    return cm;
}

void ConfusionMatrix::add(int truth, int predicted, std::uint64_t count)
{
    if (truth < 0 || predicted < 0 || static_cast<std::size_t>(truth) >= classes_ ||
        static_cast<std::size_t>(predicted) >= classes_) {
        throw ValidationError("confusion matrix index out of range");
    }
    counts_[static_cast<std::size_t>(truth) * classes_ + static_cast<std::size_t>(predicted)] += count;
}

std::uint64_t ConfusionMatrix::total() const noexcept
{
    std::uint64_t sum = 0;
    for (auto c : counts_) {
        sum += c;
    }
    return sum;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t t) const
{
    std::uint64_t sum = 0;
    for (std::size_t p = 0; p < classes_; ++p) {
        sum += (*this)(t, p);
    }
    return sum;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t p) const
{
    std::uint64_t sum = 0;
    for (std::size_t t = 0; t < classes_; ++t) {
        sum += (*this)(t, p);
    }
    return sum;
}

std::uint64_t ConfusionMatrix::trace() const
{
    std::uint64_t sum = 0;
    for (std::size_t t = 0; t < classes_; ++t) {
        sum += (*this)(t, t);
    }
    return sum;
}

double overall_accuracy(const ConfusionMatrix& cm)
{
    require_nonempty(cm);
    return static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
}

AverageAccuracy average_accuracy(const ConfusionMatrix& cm)
{
    AverageAccuracy result;
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t t = 0; t < cm.classes(); ++t) {
        const auto support = cm.row_sum(t);
        if (support == 0) {
            result.excluded.push_back(t);
            continue;
        }
        sum += static_cast<double>(cm(t, t)) / static_cast<double>(support);
        ++used;
    }
    if (used == 0) {
        throw ValidationError("average accuracy: every class is empty");
    }
    result.value = sum / static_cast<double>(used);
    return result;
}

Kappa kappa(const ConfusionMatrix& cm)
{
    require_nonempty(cm);
    // Integer numerators keep hand-checkable matrices exact.
    const auto total = cm.total();
    std::uint64_t chance = 0;
    for (std::size_t t = 0; t < cm.classes(); ++t) {
        chance += cm.row_sum(t) * cm.col_sum(t);
    }
    const double n = static_cast<double>(total);
    const double nn = n * n;
    if (chance == total * total) {
        return {0.0, true};
    }
    // (p_o - p_e) / (1 - p_e) = (N*trace - chance) / (N^2 - chance)
    const double numerator = n * static_cast<double>(cm.trace()) - static_cast<double>(chance);
    const double denominator = nn - static_cast<double>(chance);
    return {numerator / denominator, false};
}

ClassScores per_class_iou_precision_recall(const ConfusionMatrix& cm)
{
    require_nonempty(cm);
    const std::size_t c = cm.classes();
    ClassScores s;
    s.iou.assign(c, kNaN);
    s.precision.assign(c, kNaN);
    s.recall.assign(c, kNaN);

    double iou_sum = 0.0;
    double precision_sum = 0.0;
    double recall_sum = 0.0;
    std::size_t iou_used = 0;
    std::size_t precision_used = 0;
    std::size_t recall_used = 0;
    double weighted_sum = 0.0;
    double weight_total = 0.0;
    std::uint64_t tp_total = 0;
    std::uint64_t union_total = 0;

    for (std::size_t t = 0; t < c; ++t) {
        const auto tp = cm(t, t);
        const auto fp = cm.col_sum(t) - tp;
        const auto fn = cm.row_sum(t) - tp;
        tp_total += tp;
        union_total += tp + fp + fn;
        if (tp + fp + fn > 0) {
            s.iou[t] = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
            iou_sum += s.iou[t];
            ++iou_used;
            const double support = static_cast<double>(tp + fn);
            weighted_sum += support * s.iou[t];
            weight_total += support;
        } else {
            s.excluded_iou.push_back(t);
        }
        if (tp + fp > 0) {
            s.precision[t] = static_cast<double>(tp) / static_cast<double>(tp + fp);
            precision_sum += s.precision[t];
            ++precision_used;
        } else {
            s.excluded_precision.push_back(t);
        }
        if (tp + fn > 0) {
            s.recall[t] = static_cast<double>(tp) / static_cast<double>(tp + fn);
            recall_sum += s.recall[t];
            ++recall_used;
        } else {
            s.excluded_recall.push_back(t);
        }
    }
    s.mean_iou = iou_used ? iou_sum / static_cast<double>(iou_used) : kNaN;
    s.mean_precision = precision_used ? precision_sum / static_cast<double>(precision_used) : kNaN;
    s.mean_recall = recall_used ? recall_sum / static_cast<double>(recall_used) : kNaN;
    s.weighted_iou = weight_total > 0.0 ? weighted_sum / weight_total : kNaN;
    s.overall_iou = static_cast<double>(tp_total) / static_cast<double>(union_total);
    return s;
}

double bands_auc(const BandsCurve& curve)
{
    if (curve.points.size() < 2) {
        throw ValidationError("bands_auc needs at least two points");
    }
    auto points = curve.points;
    std::sort(points.begin(), points.end());
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].first == points[i - 1].first) {
            throw ValidationError("bands_auc: duplicate band count " +
                                  std::to_string(points[i].first));
        }
    }
    // Integrate the excess over the lowest score so a flat curve returns its level exactly.
    double floor = points.front().second;
    for (const auto& p : points) {
        floor = std::min(floor, p.second);
    }
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double width = static_cast<double>(points[i].first - points[i - 1].first);
        area += 0.5 * ((points[i].second - floor) + (points[i - 1].second - floor)) * width;
    }
    return floor + area / static_cast<double>(points.back().first - points.front().first);
}

} // namespace bandgate
