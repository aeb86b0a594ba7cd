#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bandgate/data.hpp"
#include "bandgate/selection.hpp"
#include "bandgate/training.hpp"

namespace bandgate {

struct GradientCheck {
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    std::vector<double> numeric;
};

/// Central differences of a deterministic objective against an analytic
/// gradient. Per coordinate the error is |a - f| / max(|a|, |f|), falling
/// back to |a - f| when both magnitudes are below 1e-8.
/// Throws std::domain_error when the objective is non-finite.
GradientCheck finite_diff_check(const std::function<double(std::span<const double>)>& objective,
                                std::span<const double> point, std::span<const double> analytic,
                                double step = 1e-5);

/// |selected ∩ planted| / |planted|. Throws ValidationError on empty planted set.
double recovery_score(const BandSelection& selected, std::span<const std::size_t> planted);

/// Synthetic scenario whose informative bands sit in one tight cluster, so
/// selector rows that start from symmetric logits tend to pile onto the same band.
struct CollapseScenario {
    SyntheticSpec data;
    TrainConfig train;

    static CollapseScenario standard();
};

struct CollapseRun {
    std::uint64_t seed = 0;
    std::size_t distinct = 0;
    BandSelection selection;
    std::vector<std::size_t> raw_picks;
};

/// Trains the concrete selector once per seed with the given init and
/// reports distinct band counts. Seeds run on up to `workers` threads.
std::vector<CollapseRun> collapse_experiment(std::span<const std::uint64_t> seeds, InitScheme init,
                                             const CollapseScenario& scenario = CollapseScenario::standard(),
                                             std::size_t workers = 0);

/// TAP-style pass/fail stream plus a CSV of measured quantities.
class TapWriter {
public:
    explicit TapWriter(std::ostream& out);
    bool check(bool ok, const std::string& description, const std::string& detail = {});
    void measure(const std::string& criterion, const std::string& quantity, double value);
    void finish();
    std::size_t failures() const noexcept { return failures_; }
    std::string measurements_csv() const;

private:
    std::ostream& out_;
    std::size_t count_ = 0;
    std::size_t failures_ = 0;
    std::vector<std::string> rows_;
};

} // namespace bandgate
