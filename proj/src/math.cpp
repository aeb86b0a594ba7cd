#include "bandgate/math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bandgate/error.hpp"

namespace bandgate {

double std_normal_cdf(double x) noexcept
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double std_normal_pdf(double x) noexcept
{
    return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double sample_gaussian(Rng& rng, double sigma)
{
    if (!(sigma > 0.0)) {
        throw ValidationError("sample_gaussian: sigma must be > 0");
    }
    return sigma * rng.standard_normal();
}

double gumbel_from_uniform(double u) noexcept
{
    return -std::log(-std::log(std::max(u, kGumbelUniformFloor)));
}

double sample_gumbel(Rng& rng, double beta)
{
    if (!(beta > 0.0 && beta < 1.0)) {
        throw ValidationError("sample_gumbel: beta must lie in (0, 1)");
    }
    return gumbel_from_uniform(beta * rng.uniform01());
}

void softmax_row(std::span<const double> logits, double tau, std::span<double> out)
{
    if (!(tau > 0.0)) {
        throw ValidationError("softmax_row: tau must be > 0");
    }
    if (logits.empty()) {
        return;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        out[j] = std::exp((logits[j] - top) / tau);
        total += out[j];
    }
    for (double& v : out) {
        v /= total;
    }
}

std::vector<double> softmax_row(std::span<const double> logits, double tau)
{
    std::vector<double> out(logits.size());
    softmax_row(logits, tau, out);
    return out;
}

} // namespace bandgate
