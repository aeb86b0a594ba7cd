#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bandgate/chbs.hpp"
#include "bandgate/data.hpp"
#include "bandgate/ehbs.hpp"
#include "bandgate/metrics.hpp"
#include "bandgate/net.hpp"
#include "bandgate/optimizer.hpp"
#include "bandgate/selection.hpp"

namespace bandgate {

enum class Method { chbs, ehbs, all_bands, random_k, variance_k };
enum class InitScheme { segmented, plain };

Method parse_method(std::string_view name);
std::string_view to_string(Method method) noexcept;
InitScheme parse_init(std::string_view name);
std::string_view to_string(InitScheme init) noexcept;

struct TrainConfig {
    Method method = Method::chbs;
    std::size_t k = 4;
    std::size_t epochs = 30;
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::vector<std::size_t> hidden{64, 32};
    bool standardize = true;
    bool weighted_loss = false;
    std::uint64_t seed = 1;

    // Concrete selector.
    double tau0 = 1.5;
    double alpha = 0.99998;
    double beta = 0.15;
    InitScheme init = InitScheme::segmented;

    // Stochastic gates.
    double sigma = 0.5;
    double mu0 = 0.5;
    double lambda0 = 0.5;
    /// Fine-tuning epochs on the hard top-k bands; unset means 20% of epochs.
    std::optional<std::size_t> phase2_epochs;

    /// The selector settings reported for the remote-sensing scenes.
    static TrainConfig reference_defaults();

    /// Throws ValidationError when the config cannot run on n bands / c classes.
    void validate(std::size_t n_bands, std::size_t n_classes) const;

    /// {phase 1, phase 2} epoch counts for the gate method.
    std::pair<std::size_t, std::size_t> ehbs_phases() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// key=value lines, one per field, in a fixed order. Keys match CLI flag names.
std::string echo_config(const TrainConfig& config);
/// Applies key=value lines (blank lines and '#' comments ignored) over base.
TrainConfig parse_config(std::string_view text, TrainConfig base = {});
void apply_config_entry(TrainConfig& config, std::string_view key, std::string_view value);

struct EpochRecord {
    std::size_t epoch = 0;
    double loss = 0.0;   ///< mean training objective over the epoch's batches
    double val_oa = 0.0; ///< overall accuracy via the inference path
    BandSelection selection;
    std::size_t distinct = 0; ///< distinct bands picked (concrete rows may collide)
    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    BandSelection final_selection;
    std::vector<std::string> collapse_events;
    std::vector<std::string> log;
    std::optional<std::size_t> phase_boundary; ///< first phase-2 epoch (gates only)
    std::size_t batches = 0;
    double final_tau = 0.0;
    std::vector<std::size_t> raw_picks; ///< concrete rows' argmax before dedup

    /// Epochs (1-based) whose loss exceeded the previous epoch's.
    std::vector<std::size_t> loss_increases() const;

    friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

/// Everything needed to run the trained pipeline on raw spectra.
struct TrainedModel {
    Method method = Method::all_bands;
    std::optional<Standardizer> standardizer;
    std::optional<ConcreteLayer> concrete;
    /// Final gate state, kept for inspection; inference uses `inputs`.
    std::optional<GateLayer> gates;
    /// Fixed input bands (baselines, all-bands and gate phase 2).
    BandSelection inputs;
    Classifier net = Classifier::zeros({1, 1});

    /// Inference features: standardize, then one-hot concrete selection or band gather.
    RowMatrix features(const RowMatrix& raw) const;
    std::vector<int> predict(const RowMatrix& raw) const;
};

struct TrainResult {
    TrainedModel model;
    BandSelection selection;
    TrainReport report;
};

/// Joint selector + classifier training. Validation metrics use the
/// inference path on `validation` (the training set when null).
TrainResult train(const TrainConfig& config, const Dataset& data,
                  const Dataset* validation = nullptr);

/// The metric set reported for every evaluated split.
struct EvaluationScores {
    double oa = 0.0;
    double aa = 0.0;
    double kappa = 0.0;
    double mean_iou = 0.0;
    double overall_iou = 0.0;
    double weighted_iou = 0.0;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
};
EvaluationScores evaluate(const TrainedModel& model, const Dataset& data);

/// Names and accessors in report order.
const std::vector<std::string>& metric_names();
double metric_value(const EvaluationScores& scores, std::size_t index);

/// Near-equal folds of a seeded permutation; the first m % folds folds get one extra.
std::vector<std::vector<std::size_t>> kfold_partition(std::size_t samples, std::size_t folds,
                                                      std::uint64_t seed);

struct FoldResult {
    std::size_t fold = 0;
    EvaluationScores scores;
    BandSelection selection;
    std::size_t distinct = 0;
};

struct CrossValidationReport {
    std::vector<FoldResult> folds;
    std::vector<double> mean; ///< indexed like metric_names()
    std::vector<double> std;  ///< sample standard deviation across folds
};

/// Worker count from BANDGATE_THREADS, else the hardware concurrency.
std::size_t default_worker_count();

/// Folds run on up to `workers` threads (0 = default_worker_count()). The
/// report is identical for every worker count.
CrossValidationReport kfold_cross_validate(const TrainConfig& config, const Dataset& data,
                                           std::size_t folds, std::size_t workers = 0);

} // namespace bandgate
