#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bandgate/rng.hpp"

namespace bandgate {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense rectifier network d -> h1 -> ... -> c with a linear output layer.
/// All parameters live in one flat buffer: per layer, the out x in weight
/// block (row-major) followed by the out-length bias.
class Classifier {
public:
    struct Cache {
        /// activations[0] is the input batch; activations[l] the output of layer l.
        std::vector<RowMatrix> activations;
    };

    /// Xavier-uniform weights, zero biases. widths = {d, hidden..., c}.
    Classifier(std::vector<std::size_t> widths, Rng& rng);

    /// All parameters zero.
    static Classifier zeros(std::vector<std::size_t> widths);

    const std::vector<std::size_t>& widths() const noexcept { return widths_; }
    std::size_t input_width() const noexcept { return widths_.front(); }
    std::size_t classes() const noexcept { return widths_.back(); }
    std::size_t layers() const noexcept { return widths_.size() - 1; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }

    Eigen::Map<RowMatrix> weights(std::size_t layer);
    Eigen::Map<const RowMatrix> weights(std::size_t layer) const;
    Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);
    Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;

    std::vector<double> forward(std::span<const double> input) const;

    /// Batch forward; rows are samples. Fills cache when non-null.
    RowMatrix forward(const RowMatrix& inputs, Cache* cache = nullptr) const;

    /// Reverse pass for the batch in cache. Adds parameter gradients into
    /// grad_params and returns the gradient w.r.t. the inputs.
    RowMatrix backward(const Cache& cache, const RowMatrix& grad_logits,
                       std::span<double> grad_params) const;

    void save(std::ostream& out) const;
    static Classifier load(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static Classifier load(const std::filesystem::path& path);

    friend bool operator==(const Classifier&, const Classifier&) = default;

private:
    explicit Classifier(std::vector<std::size_t> widths);

    std::vector<std::size_t> widths_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

/// Per-class loss weights.
struct LossSpec {
    std::vector<double> weights;

    static LossSpec uniform(std::size_t classes);
    /// total / (c * count_t); classes absent from labels get weight 1.
    static LossSpec inverse_frequency(std::span<const int> labels, std::size_t classes);
    void validate(std::size_t classes) const;
};

struct LossResult {
    double loss = 0.0;
    std::vector<double> grad;
};

/// -w_y log softmax(logits)_y and its gradient w_y (softmax - onehot(y)).
LossResult weighted_cross_entropy(std::span<const double> logits, int label, const LossSpec& spec);

/// Mean weighted cross-entropy over a batch; grad_logits receives d(mean)/d(logits).
double batch_cross_entropy(const RowMatrix& logits, std::span<const int> labels,
                           const LossSpec& spec, RowMatrix& grad_logits);

/// Row-wise argmax of a logits batch.
std::vector<int> predict_classes(const RowMatrix& logits);

} // namespace bandgate
