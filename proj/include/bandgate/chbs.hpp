#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bandgate/rng.hpp"
#include "bandgate/selection.hpp"

namespace bandgate {

/// Row-major k x n matrices used by the concrete selector.
struct SelectorMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    SelectorMatrix() = default;
    SelectorMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), values(r * c, fill)
    {
    }

    double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

/// Sampled selection matrix M and the Gumbel noise G that produced it.
struct ConcreteForwardRecord {
    SelectorMatrix m;
    SelectorMatrix g;
    double tau = 0.0;
};

struct ConcreteSelectionReport {
    BandSelection selection;            ///< distinct bands, ascending
    std::vector<std::size_t> raw_picks; ///< row-wise argmax of the logits
    std::size_t distinct = 0;
    bool collapsed() const noexcept { return distinct < raw_picks.size(); }
};

/// Segments used by the segmented initializer: row i owns [begin, end).
struct Segment {
    std::size_t begin;
    std::size_t end;
};
std::vector<Segment> selector_segments(std::size_t k, std::size_t n);

/// Xavier-uniform logits, row i shifted up inside its own contiguous
/// segment and down elsewhere so each row's offsets average to zero.
SelectorMatrix init_segmented_xavier(std::size_t k, std::size_t n, Rng& rng);

/// Plain Xavier-uniform logits with no offsets.
SelectorMatrix init_plain_xavier(std::size_t k, std::size_t n, Rng& rng);

inline double xavier_bound(std::size_t k, std::size_t n)
{
    return std::sqrt(6.0 / static_cast<double>(n + k));
}

/// Concrete (Gumbel-Softmax) selector compressing n bands into k.
class ConcreteLayer {
public:
    /// Throws ValidationError on tau <= 0, alpha outside (0,1) or beta outside (0,1).
    ConcreteLayer(SelectorMatrix logits, double tau, double alpha, double beta);

    std::size_t k() const noexcept { return logits_.rows; }
    std::size_t n() const noexcept { return logits_.cols; }
    double tau() const noexcept { return tau_; }
    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }

    const SelectorMatrix& logits() const noexcept { return logits_; }
    std::span<double> parameters() noexcept { return logits_.values; }

    /// Fresh Gumbel noise, one draw per logit.
    ConcreteForwardRecord sample(Rng& rng) const;

    /// Selection matrix for a given (frozen) noise matrix at the current tau.
    ConcreteForwardRecord with_noise(const SelectorMatrix& g) const;

    /// out_i = sum_j M_ij x_j
    std::vector<double> apply(const ConcreteForwardRecord& record, std::span<const double> x) const;

    std::pair<std::vector<double>, ConcreteForwardRecord> forward_train(std::span<const double> x,
                                                                        Rng& rng) const;

    /// out_i = x[argmax_j L_ij]; no noise, no temperature.
    std::vector<double> forward_infer(std::span<const double> x) const;

    /// Gradient w.r.t. the logits for a single spectrum, noise held fixed.
    SelectorMatrix backward(const ConcreteForwardRecord& record, std::span<const double> x,
                            std::span<const double> grad_out) const;

    /// Gradient w.r.t. the logits given the accumulated gradient w.r.t. M.
    /// dL_ir = M_ir (dM_ir - sum_j dM_ij M_ij) / tau
    SelectorMatrix backward_from_selection(const ConcreteForwardRecord& record,
                                           const SelectorMatrix& grad_m) const;

    /// tau <- tau * alpha. Called once per training batch.
    void anneal_temperature() noexcept { tau_ *= alpha_; }

    std::vector<std::size_t> row_argmax() const;
    ConcreteSelectionReport selected_bands() const;

private:
    void check_input(std::size_t got) const;

    SelectorMatrix logits_;
    double tau_;
    double alpha_;
    double beta_;
};

} // namespace bandgate
