#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "bandgate/net.hpp"
#include "bandgate/selection.hpp"

namespace bandgate {

/// Spatial footprint of each instance. Training is per spectrum; this is metadata.
struct SpatialShape {
    std::size_t height = 1;
    std::size_t width = 1;
    friend bool operator==(const SpatialShape&, const SpatialShape&) = default;
};

/// m labelled spectra of n bands.
struct Dataset {
    RowMatrix spectra;       ///< m x n reflectance values
    std::vector<int> labels; ///< m labels in [0, n_classes)
    std::size_t n_classes = 0;
    std::optional<SpatialShape> spatial;

    std::size_t samples() const noexcept { return labels.size(); }
    std::size_t bands() const noexcept { return static_cast<std::size_t>(spectra.cols()); }

    /// Throws ValidationError on empty data, bad labels or non-finite values.
    void validate() const;

    Dataset subset(std::span<const std::size_t> rows) const;
    /// Columns in selection order.
    RowMatrix select_bands(const BandSelection& selection) const;
};

struct SyntheticSpec {
    std::size_t n_bands = 30;
    std::size_t n_classes = 4;
    std::size_t samples = 2000;
    std::vector<std::size_t> informative;
    double class_signature_gap = 1.0;
    double noise_std = 0.5;
    std::size_t correlation_width = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Planted-band generator. Each informative band gives every class its own
/// mean level (a seeded permutation of 0, gap, 2*gap, ...); the remaining
/// bands carry class-independent background noise, smoothed over
/// 2*correlation_width+1 neighbouring bands. Gaussian noise_std is added to
/// every value. Labels are balanced.
Dataset generate(const SyntheticSpec& spec);

/// Header `bands=<n> classes=<c>` then `label,v0,...,v_{n-1}` per row.
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& data, const std::filesystem::path& path);

/// Bands by descending population variance, ties to the lower index.
std::vector<std::size_t> variance_rank(const Dataset& data);

/// Per-band z-score fitted on training rows only.
struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    static Standardizer fit(const RowMatrix& spectra);
    RowMatrix apply(const RowMatrix& spectra) const;
};

} // namespace bandgate
