#pragma once

#include <span>
#include <vector>

#include "bandgate/rng.hpp"

namespace bandgate {

/// Standard Gaussian CDF, via the complementary error function.
double std_normal_cdf(double x) noexcept;

/// Standard Gaussian density exp(-x^2/2)/sqrt(2*pi).
double std_normal_pdf(double x) noexcept;

/// One N(0, sigma^2) draw. Throws ValidationError when sigma <= 0.
double sample_gaussian(Rng& rng, double sigma);

/// Smallest u fed to the inner log of the Gumbel transform.
inline constexpr double kGumbelUniformFloor = 1e-300;

/// -log(-log(u)) with u floored at kGumbelUniformFloor.
double gumbel_from_uniform(double u) noexcept;

/// Gumbel noise with u ~ Uniform(0, beta). The result is bounded above by
/// gumbel_from_uniform(beta). Throws ValidationError unless 0 < beta < 1.
double sample_gumbel(Rng& rng, double beta);

constexpr double clamp01(double x) noexcept
{
    return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
}

/// softmax(logits / tau), max-subtracted. Throws ValidationError when tau <= 0.
std::vector<double> softmax_row(std::span<const double> logits, double tau);

/// In-place variant writing into out (same length as logits).
void softmax_row(std::span<const double> logits, double tau, std::span<double> out);

} // namespace bandgate
