#include "bandgate/net.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "bandgate/error.hpp"

namespace bandgate {

namespace {

constexpr std::array<char, 6> kCheckpointMagic{'B', 'G', 'N', 'E', 'T', '1'};

void check_widths(const std::vector<std::size_t>& widths)
{
    if (widths.size() < 2) {
        throw ValidationError("classifier needs at least an input and an output width");
    }
    for (std::size_t w : widths) {
        if (w == 0) {
            throw ValidationError("classifier layer widths must be positive");
        }
    }
}

template <typename T>
void write_le(std::ostream& out, T value)
{
    static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian host");
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in)
{
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw ValidationError("checkpoint truncated");
    }
    return value;
}

} // namespace

Classifier::Classifier(std::vector<std::size_t> widths) : widths_(std::move(widths))
{
    check_widths(widths_);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        offsets_.push_back(offset);
        offset += widths_[l + 1] * widths_[l] + widths_[l + 1];
    }
    params_.assign(offset, 0.0);
}

Classifier::Classifier(std::vector<std::size_t> widths, Rng& rng) : Classifier(std::move(widths))
{
    for (std::size_t l = 0; l < layers(); ++l) {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(widths_[l] + widths_[l + 1]));
        auto w = weights(l);
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                w(i, j) = bound * (2.0 * rng.uniform01() - 1.0);
            }
        }
    }
}

Classifier Classifier::zeros(std::vector<std::size_t> widths)
{
    return Classifier(std::move(widths));
}

Eigen::Map<RowMatrix> Classifier::weights(std::size_t layer)
{
    return {params_.data() + offsets_[layer], static_cast<Eigen::Index>(widths_[layer + 1]),
            static_cast<Eigen::Index>(widths_[layer])};
}

Eigen::Map<const RowMatrix> Classifier::weights(std::size_t layer) const
{
    return {params_.data() + offsets_[layer], static_cast<Eigen::Index>(widths_[layer + 1]),
            static_cast<Eigen::Index>(widths_[layer])};
}

Eigen::Map<Eigen::VectorXd> Classifier::bias(std::size_t layer)
{
    return {params_.data() + offsets_[layer] + widths_[layer + 1] * widths_[layer],
            static_cast<Eigen::Index>(widths_[layer + 1])};
}

Eigen::Map<const Eigen::VectorXd> Classifier::bias(std::size_t layer) const
{
    return {params_.data() + offsets_[layer] + widths_[layer + 1] * widths_[layer],
            static_cast<Eigen::Index>(widths_[layer + 1])};
}

std::vector<double> Classifier::forward(std::span<const double> input) const
{
    RowMatrix batch(1, static_cast<Eigen::Index>(input.size()));
    std::copy(input.begin(), input.end(), batch.data());
    const RowMatrix logits = forward(batch);
    return {logits.data(), logits.data() + logits.size()};
}

RowMatrix Classifier::forward(const RowMatrix& inputs, Cache* cache) const
{
    if (static_cast<std::size_t>(inputs.cols()) != input_width()) {
        throw ValidationError("classifier: input width " + std::to_string(inputs.cols()) +
                              " does not match " + std::to_string(input_width()));
    }
    if (cache != nullptr) {
        cache->activations.clear();
        cache->activations.push_back(inputs);
    }
    RowMatrix current = inputs;
    for (std::size_t l = 0; l < layers(); ++l) {
        RowMatrix next = current * weights(l).transpose();
        next.rowwise() += bias(l).transpose();
        if (l + 1 < layers()) {
            next = next.cwiseMax(0.0);
        }
        if (cache != nullptr) {
            cache->activations.push_back(next);
        }
        current = std::move(next);
    }
    return current;
}

RowMatrix Classifier::backward(const Cache& cache, const RowMatrix& grad_logits,
                               std::span<double> grad_params) const
{
    if (cache.activations.size() != layers() + 1 ||
        cache.activations.back().rows() != grad_logits.rows() ||
        static_cast<std::size_t>(grad_logits.cols()) != classes()) {
        throw ValidationError("classifier: stale activation cache");
    }
    if (grad_params.size() != params_.size()) {
        throw ValidationError("classifier: gradient buffer has wrong size");
    }
    RowMatrix delta = grad_logits;
    for (std::size_t l = layers(); l-- > 0;) {
        if (l + 1 < layers()) {
            // Rectifier: units that were clamped to zero pass no gradient.
            delta = delta.cwiseProduct(
                (cache.activations[l + 1].array() > 0.0).cast<double>().matrix());
        }
        const RowMatrix& input = cache.activations[l];
        Eigen::Map<RowMatrix> grad_w(grad_params.data() + offsets_[l],
                                     static_cast<Eigen::Index>(widths_[l + 1]),
                                     static_cast<Eigen::Index>(widths_[l]));
        Eigen::Map<Eigen::VectorXd> grad_b(
            grad_params.data() + offsets_[l] + widths_[l + 1] * widths_[l],
            static_cast<Eigen::Index>(widths_[l + 1]));
        grad_w.noalias() += delta.transpose() * input;
        grad_b += delta.colwise().sum().transpose();
        delta = delta * weights(l);
    }
    return delta;
}

void Classifier::save(std::ostream& out) const
{
    out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(widths_.size()));
    for (std::size_t w : widths_) {
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(w));
    }
    for (double p : params_) {
        write_le<double>(out, p);
    }
    if (!out) {
        throw std::runtime_error("checkpoint write failed");
    }
}

Classifier Classifier::load(std::istream& in)
{
    std::array<char, 6> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kCheckpointMagic) {
        throw ValidationError("not a BGNET1 checkpoint");
    }
    const auto count = read_le<std::uint32_t>(in);
    if (count < 2 || count > 64) {
        throw ValidationError("checkpoint has an implausible layer count");
    }
    std::vector<std::size_t> widths(count);
    for (auto& w : widths) {
        w = read_le<std::uint32_t>(in);
    }
    Classifier net(std::move(widths));
    for (double& p : net.params_) {
        p = read_le<double>(in);
    }
    return net;
}

void Classifier::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    save(out);
}

Classifier Classifier::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return load(in);
}

LossSpec LossSpec::uniform(std::size_t classes)
{
    return {std::vector<double>(classes, 1.0)};
}

LossSpec LossSpec::inverse_frequency(std::span<const int> labels, std::size_t classes)
{
    std::vector<double> counts(classes, 0.0);
    for (int y : labels) {
        counts.at(static_cast<std::size_t>(y)) += 1.0;
    }
    LossSpec spec{std::vector<double>(classes, 1.0)};
    const double total = static_cast<double>(labels.size());
    for (std::size_t t = 0; t < classes; ++t) {
        if (counts[t] > 0.0) {
            spec.weights[t] = total / (static_cast<double>(classes) * counts[t]);
        }
    }
    return spec;
}

void LossSpec::validate(std::size_t classes) const
{
    if (weights.size() != classes) {
        throw ValidationError("loss weights must have one entry per class");
    }
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw ValidationError("loss weights must be positive and finite");
        }
    }
}

LossResult weighted_cross_entropy(std::span<const double> logits, int label, const LossSpec& spec)
{
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
        throw ValidationError("label " + std::to_string(label) + " outside [0, " +
                              std::to_string(logits.size()) + ")");
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double l : logits) {
        total += std::exp(l - top);
    }
    const double log_norm = top + std::log(total);
    const double w = spec.weights.at(static_cast<std::size_t>(label));
    LossResult result;
    result.loss = w * (log_norm - logits[static_cast<std::size_t>(label)]);
    result.grad.resize(logits.size());
    for (std::size_t t = 0; t < logits.size(); ++t) {
        result.grad[t] = w * std::exp(logits[t] - log_norm);
    }
    result.grad[static_cast<std::size_t>(label)] -= w;
    return result;
}

double batch_cross_entropy(const RowMatrix& logits, std::span<const int> labels,
                           const LossSpec& spec, RowMatrix& grad_logits)
{
    if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
        throw ValidationError("batch_cross_entropy: label count does not match batch");
    }
    grad_logits.resize(logits.rows(), logits.cols());
    const double scale = 1.0 / static_cast<double>(labels.size());
    double total = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const auto row = std::span<const double>(logits.data() + r * logits.cols(),
                                                 static_cast<std::size_t>(logits.cols()));
        const auto result = weighted_cross_entropy(row, labels[static_cast<std::size_t>(r)], spec);
        total += result.loss;
        for (Eigen::Index t = 0; t < logits.cols(); ++t) {
            grad_logits(r, t) = scale * result.grad[static_cast<std::size_t>(t)];
        }
    }
    return total * scale;
}

std::vector<int> predict_classes(const RowMatrix& logits)
{
    std::vector<int> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        Eigen::Index best = 0;
        logits.row(r).maxCoeff(&best);
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

} // namespace bandgate
