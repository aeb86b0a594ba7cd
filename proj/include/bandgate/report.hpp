#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bandgate/data.hpp"
#include "bandgate/metrics.hpp"
#include "bandgate/training.hpp"

namespace bandgate {

struct SweepSpec {
    std::vector<Method> methods;
    std::vector<std::size_t> ks;
    std::size_t folds = 5;
    TrainConfig base;

    void validate(std::size_t n_bands) const;
};

struct SweepCell {
    Method method;
    std::size_t k;
    CrossValidationReport cv;
};

struct SweepResult {
    std::vector<SweepCell> cells; ///< sorted by method name, then k
    /// Per method, bands AUC of mean OA; absent when fewer than two k values.
    std::map<std::string, double> auc;
};

/// k-fold cross-validation for every (method, k). Deterministic given base.seed.
SweepResult run_sweep(const SweepSpec& spec, const Dataset& data, std::size_t workers = 0);

/// `method,k,fold,metric,value` rows sorted by (method, k, fold), then one
/// `method,all,mean,bands_auc,value` row per method.
std::string sweep_csv(const SweepResult& result);

/// Per-method mean-OA curves read back from a sweep CSV.
struct SweepCurves {
    std::map<std::string, BandsCurve> curves;
    std::map<std::string, double> auc;
};

/// Throws ValidationError on empty or malformed input.
SweepCurves parse_sweep_csv(std::string_view text);

/// 800x500 line chart of score vs k, one polyline per method, AUC in the legend.
std::string render_svg(const SweepCurves& curves);

} // namespace bandgate
