#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bandgate/rng.hpp"
#include "bandgate/selection.hpp"

namespace bandgate {

/// Realized gates of one stochastic forward pass.
struct GateForwardRecord {
    std::vector<double> z;       ///< clamp01(mu + epsilon)
    std::vector<double> epsilon; ///< noise used for this pass
    std::vector<bool> active;    ///< 0 < mu + epsilon < 1, i.e. clamp is not saturated
};

/// Stochastic-gate band selector. Each band j is multiplied by
/// z_j = clamp01(mu_j + eps_j), eps_j ~ N(0, sigma^2), and the expected
/// number of open gates, lambda * sum Phi(mu_j / sigma), is added to the loss.
class GateLayer {
public:
    /// Throws ValidationError for n == 0, sigma <= 0 or lambda < 0.
    GateLayer(std::size_t n, double sigma, double lambda, double mu0 = 0.5);

    std::size_t bands() const noexcept { return mu_.size(); }
    double sigma() const noexcept { return sigma_; }
    double lambda() const noexcept { return lambda_; }
    void set_lambda(double lambda);

    std::span<double> mu() noexcept { return mu_; }
    std::span<const double> mu() const noexcept { return mu_; }

    /// Draws fresh noise and the gates it induces.
    GateForwardRecord sample(Rng& rng) const;

    /// Gates for a given (frozen) noise vector.
    GateForwardRecord with_noise(std::span<const double> epsilon) const;

    /// z (.) x for an existing record.
    std::vector<double> apply(const GateForwardRecord& record, std::span<const double> x) const;

    /// sample() followed by apply().
    std::pair<std::vector<double>, GateForwardRecord> forward_train(std::span<const double> x,
                                                                    Rng& rng) const;

    /// Deterministic gates clamp01(mu), i.e. zero noise.
    std::vector<double> forward_infer(std::span<const double> x) const;

    /// lambda * sum_j Phi(mu_j / sigma), in [0, lambda * n].
    double regularizer() const;

    /// d regularizer / d mu_j = lambda * phi(mu_j / sigma) / sigma.
    std::vector<double> regularizer_gradient() const;

    /// Data term only: grad_out_j * x_j on active gates, 0 where clamped.
    /// Accumulates into grad_mu so a batch can share one record.
    void accumulate_data_gradient(const GateForwardRecord& record, std::span<const double> x,
                                  std::span<const double> grad_out,
                                  std::span<double> grad_mu) const;

    /// Data term plus regularizer term for a single spectrum.
    std::vector<double> backward(const GateForwardRecord& record, std::span<const double> x,
                                 std::span<const double> grad_out) const;

    /// Top-k bands by mu (ties to the lower index), returned in spectral order.
    BandSelection select_top_k(std::size_t k) const;

private:
    void check_width(std::size_t got, const char* what) const;

    std::vector<double> mu_;
    double sigma_;
    double lambda_;
};

/// lambda0 * n / k: heavier sparsity pressure for small k.
double lambda_for_k(double lambda0, std::size_t n, std::size_t k);

} // namespace bandgate
