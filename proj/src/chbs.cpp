#include "bandgate/chbs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bandgate/error.hpp"
#include "bandgate/math.hpp"

namespace bandgate {

namespace {

void check_shape(std::size_t k, std::size_t n)
{
    if (k == 0 || k > n) {
        throw ValidationError("selector shape: k must lie in [1, n], got k=" + std::to_string(k) +
                              " n=" + std::to_string(n));
    }
}

} // namespace

std::vector<Segment> selector_segments(std::size_t k, std::size_t n)
{
    check_shape(k, n);
    const std::size_t width = n / k;
    std::vector<Segment> segments(k);
    for (std::size_t i = 0; i < k; ++i) {
        segments[i] = {i * width, i + 1 == k ? n : (i + 1) * width};
    }
    return segments;
}

SelectorMatrix init_plain_xavier(std::size_t k, std::size_t n, Rng& rng)
{
    check_shape(k, n);
    const double bound = xavier_bound(k, n);
    SelectorMatrix logits(k, n);
    for (double& v : logits.values) {
        v = bound * (2.0 * rng.uniform01() - 1.0);
    }
    return logits;
}

SelectorMatrix init_segmented_xavier(std::size_t k, std::size_t n, Rng& rng)
{
    SelectorMatrix logits = init_plain_xavier(k, n, rng);
    if (k == 1) {
        // A single segment spans every band; there is no "outside" to offset against.
        return logits;
    }
    const double delta = 0.5 * xavier_bound(k, n);
    const auto segments = selector_segments(k, n);
    for (std::size_t i = 0; i < k; ++i) {
        const auto [begin, end] = segments[i];
        const double inside = static_cast<double>(end - begin);
        const double outside_shift = -delta * inside / (static_cast<double>(n) - inside);
        auto row = logits.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            row[j] += (j >= begin && j < end) ? delta : outside_shift;
        }
    }
    return logits;
}

ConcreteLayer::ConcreteLayer(SelectorMatrix logits, double tau, double alpha, double beta)
    : logits_(std::move(logits)), tau_(tau), alpha_(alpha), beta_(beta)
{
    check_shape(logits_.rows, logits_.cols);
    if (logits_.values.size() != logits_.rows * logits_.cols) {
        throw ValidationError("selector logits storage does not match its shape");
    }
    if (!(tau > 0.0)) {
        throw ValidationError("temperature tau must be > 0");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("temperature decay alpha must lie in (0, 1)");
    }
    if (!(beta > 0.0 && beta < 1.0)) {
        throw ValidationError("gumbel scale beta must lie in (0, 1)");
    }
}

void ConcreteLayer::check_input(std::size_t got) const
{
    if (got != n()) {
        throw ValidationError("concrete layer: input has length " + std::to_string(got) +
                              ", expected " + std::to_string(n()));
    }
}

ConcreteForwardRecord ConcreteLayer::sample(Rng& rng) const
{
    SelectorMatrix g(k(), n());
    for (double& v : g.values) {
        v = sample_gumbel(rng, beta_);
    }
    return with_noise(g);
}

ConcreteForwardRecord ConcreteLayer::with_noise(const SelectorMatrix& g) const
{
    if (g.rows != k() || g.cols != n()) {
        throw ValidationError("concrete layer: noise matrix shape mismatch");
    }
    ConcreteForwardRecord record{SelectorMatrix(k(), n()), g, tau_};
    std::vector<double> perturbed(n());
    for (std::size_t i = 0; i < k(); ++i) {
        const auto l = logits_.row(i);
        const auto noise = g.row(i);
        for (std::size_t j = 0; j < n(); ++j) {
            perturbed[j] = l[j] + noise[j];
        }
        softmax_row(perturbed, tau_, record.m.row(i));
    }
    return record;
}

std::vector<double> ConcreteLayer::apply(const ConcreteForwardRecord& record,
                                         std::span<const double> x) const
{
    check_input(x.size());
    if (record.m.rows != k() || record.m.cols != n()) {
        throw ValidationError("concrete layer: stale forward record");
    }
    std::vector<double> out(k(), 0.0);
    for (std::size_t i = 0; i < k(); ++i) {
        const auto m = record.m.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < n(); ++j) {
            acc += m[j] * x[j];
        }
        out[i] = acc;
    }
    return out;
}

std::pair<std::vector<double>, ConcreteForwardRecord>
ConcreteLayer::forward_train(std::span<const double> x, Rng& rng) const
{
    check_input(x.size());
    ConcreteForwardRecord record = sample(rng);
    auto out = apply(record, x);
    return {std::move(out), std::move(record)};
}

std::vector<double> ConcreteLayer::forward_infer(std::span<const double> x) const
{
    check_input(x.size());
    const auto picks = row_argmax();
    std::vector<double> out(k());
    for (std::size_t i = 0; i < k(); ++i) {
        out[i] = x[picks[i]];
    }
    return out;
}

SelectorMatrix ConcreteLayer::backward(const ConcreteForwardRecord& record,
                                       std::span<const double> x,
                                       std::span<const double> grad_out) const
{
    check_input(x.size());
    if (grad_out.size() != k()) {
        throw ValidationError("concrete layer: upstream gradient has wrong length");
    }
    SelectorMatrix grad_m(k(), n());
    for (std::size_t i = 0; i < k(); ++i) {
        auto row = grad_m.row(i);
        for (std::size_t j = 0; j < n(); ++j) {
            row[j] = grad_out[i] * x[j];
        }
    }
    return backward_from_selection(record, grad_m);
}

SelectorMatrix ConcreteLayer::backward_from_selection(const ConcreteForwardRecord& record,
                                                      const SelectorMatrix& grad_m) const
{
    if (record.m.rows != k() || record.m.cols != n() || grad_m.rows != k() ||
        grad_m.cols != n()) {
        throw ValidationError("concrete layer: stale forward record");
    }
    SelectorMatrix grad(k(), n());
    for (std::size_t i = 0; i < k(); ++i) {
        const auto m = record.m.row(i);
        const auto dm = grad_m.row(i);
        double weighted = 0.0;
        for (std::size_t j = 0; j < n(); ++j) {
            weighted += dm[j] * m[j];
        }
        auto out = grad.row(i);
        for (std::size_t r = 0; r < n(); ++r) {
            out[r] = m[r] * (dm[r] - weighted) / record.tau;
        }
    }
    return grad;
}

std::vector<std::size_t> ConcreteLayer::row_argmax() const
{
    std::vector<std::size_t> picks(k());
    for (std::size_t i = 0; i < k(); ++i) {
        const auto row = logits_.row(i);
        picks[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return picks;
}

ConcreteSelectionReport ConcreteLayer::selected_bands() const
{
    ConcreteSelectionReport report;
    report.raw_picks = row_argmax();
    std::vector<std::size_t> unique = report.raw_picks;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    report.distinct = unique.size();
    report.selection = BandSelection(std::move(unique));
    return report;
}

} // namespace bandgate
