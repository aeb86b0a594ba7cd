#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace bandgate {

/// Entry (t, p) counts samples of true class t predicted as p.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes);
    /// Row-major c x c counts. Throws ValidationError on non-square input.
    static ConfusionMatrix from_rows(const std::vector<std::vector<std::uint64_t>>& rows);
    static ConfusionMatrix from_predictions(std::span<const int> truth,
                                            std::span<const int> predicted, std::size_t classes);

    void add(int truth, int predicted, std::uint64_t count = 1);

    std::size_t classes() const noexcept { return classes_; }
    std::uint64_t operator()(std::size_t t, std::size_t p) const { return counts_[t * classes_ + p]; }
    std::uint64_t total() const noexcept;
    std::uint64_t row_sum(std::size_t t) const;
    std::uint64_t col_sum(std::size_t p) const;
    std::uint64_t trace() const;

private:
    std::size_t classes_;
    std::vector<std::uint64_t> counts_;
};

double overall_accuracy(const ConfusionMatrix& cm);

struct AverageAccuracy {
    double value = 0.0;
    std::vector<std::size_t> excluded; ///< classes with no true samples
};
AverageAccuracy average_accuracy(const ConfusionMatrix& cm);

struct Kappa {
    double value = 0.0;
    bool degenerate = false; ///< p_e == 1; value is defined as 0
};
Kappa kappa(const ConfusionMatrix& cm);

struct ClassScores {
    std::vector<double> iou;       ///< NaN where excluded
    std::vector<double> precision; ///< NaN where TP + FP == 0
    std::vector<double> recall;    ///< NaN where TP + FN == 0
    double mean_iou = 0.0;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
    double weighted_iou = 0.0;
    double overall_iou = 0.0;
    std::vector<std::size_t> excluded_iou;
    std::vector<std::size_t> excluded_precision;
    std::vector<std::size_t> excluded_recall;
};
ClassScores per_class_iou_precision_recall(const ConfusionMatrix& cm);

/// (band count, score) points.
struct BandsCurve {
    std::vector<std::pair<std::size_t, double>> points;
};

/// Trapezoidal area under score-vs-k divided by the k range. Points are
/// sorted by k first. Throws ValidationError on duplicate k or < 2 points.
double bands_auc(const BandsCurve& curve);

} // namespace bandgate
