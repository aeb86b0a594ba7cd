#include "bandgate/ehbs.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "bandgate/error.hpp"
#include "bandgate/math.hpp"

namespace bandgate {

GateLayer::GateLayer(std::size_t n, double sigma, double lambda, double mu0)
    : mu_(n, mu0), sigma_(sigma), lambda_(lambda)
{
    if (n == 0) {
        throw ValidationError("gate layer needs at least one band");
    }
    if (!(sigma > 0.0)) {
        throw ValidationError("gate layer sigma must be > 0");
    }
    set_lambda(lambda);
}

void GateLayer::set_lambda(double lambda)
{
    if (!(lambda >= 0.0)) {
        throw ValidationError("gate layer lambda must be >= 0");
    }
    lambda_ = lambda;
}

void GateLayer::check_width(std::size_t got, const char* what) const
{
    if (got != mu_.size()) {
        throw ValidationError(std::string("gate layer: ") + what + " has length " +
                              std::to_string(got) + ", expected " + std::to_string(mu_.size()));
    }
}

GateForwardRecord GateLayer::sample(Rng& rng) const
{
    std::vector<double> eps(mu_.size());
    for (double& e : eps) {
        e = sample_gaussian(rng, sigma_);
    }
    return with_noise(eps);
}

GateForwardRecord GateLayer::with_noise(std::span<const double> epsilon) const
{
    check_width(epsilon.size(), "noise");
    GateForwardRecord record;
    record.epsilon.assign(epsilon.begin(), epsilon.end());
    record.z.resize(mu_.size());
    record.active.resize(mu_.size());
    for (std::size_t j = 0; j < mu_.size(); ++j) {
        const double pre = mu_[j] + epsilon[j];
        record.z[j] = clamp01(pre);
        record.active[j] = pre > 0.0 && pre < 1.0;
    }
    return record;
}

std::vector<double> GateLayer::apply(const GateForwardRecord& record,
                                     std::span<const double> x) const
{
    check_width(x.size(), "input");
    check_width(record.z.size(), "record");
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        out[j] = record.z[j] * x[j];
    }
    return out;
}

std::pair<std::vector<double>, GateForwardRecord>
GateLayer::forward_train(std::span<const double> x, Rng& rng) const
{
    check_width(x.size(), "input");
    GateForwardRecord record = sample(rng);
    auto out = apply(record, x);
    return {std::move(out), std::move(record)};
}

std::vector<double> GateLayer::forward_infer(std::span<const double> x) const
{
    check_width(x.size(), "input");
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        out[j] = clamp01(mu_[j]) * x[j];
    }
    return out;
}

double GateLayer::regularizer() const
{
    double total = 0.0;
    for (double m : mu_) {
        total += std_normal_cdf(m / sigma_);
    }
    return lambda_ * total;
}

std::vector<double> GateLayer::regularizer_gradient() const
{
    std::vector<double> grad(mu_.size());
    for (std::size_t j = 0; j < mu_.size(); ++j) {
        grad[j] = lambda_ * std_normal_pdf(mu_[j] / sigma_) / sigma_;
    }
    return grad;
}

void GateLayer::accumulate_data_gradient(const GateForwardRecord& record,
                                         std::span<const double> x,
                                         std::span<const double> grad_out,
                                         std::span<double> grad_mu) const
{
    check_width(record.z.size(), "record");
    check_width(x.size(), "input");
    check_width(grad_out.size(), "upstream gradient");
    check_width(grad_mu.size(), "gradient buffer");
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (record.active[j]) {
            grad_mu[j] += grad_out[j] * x[j];
        }
    }
}

std::vector<double> GateLayer::backward(const GateForwardRecord& record,
                                        std::span<const double> x,
                                        std::span<const double> grad_out) const
{
    std::vector<double> grad = regularizer_gradient();
    accumulate_data_gradient(record, x, grad_out, grad);
    return grad;
}

BandSelection GateLayer::select_top_k(std::size_t k) const
{
    if (k == 0 || k > mu_.size()) {
        throw ValidationError("select_top_k: k must lie in [1, " + std::to_string(mu_.size()) +
                              "], got " + std::to_string(k));
    }
    std::vector<std::size_t> order(mu_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [this](std::size_t a, std::size_t b) { return mu_[a] > mu_[b]; });
    order.resize(k);
    return BandSelection::from_unordered(std::move(order));
}

double lambda_for_k(double lambda0, std::size_t n, std::size_t k)
{
    if (!(lambda0 > 0.0)) {
        throw ValidationError("lambda0 must be > 0");
    }
    if (k == 0 || k > n) {
        throw ValidationError("lambda_for_k: k must lie in [1, n]");
    }
    return lambda0 * static_cast<double>(n) / static_cast<double>(k);
}

} // namespace bandgate
