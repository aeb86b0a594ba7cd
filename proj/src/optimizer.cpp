#include "bandgate/optimizer.hpp"

#include <cmath>
#include <string>

#include "bandgate/error.hpp"

namespace bandgate {

OptimizerKind parse_optimizer(std::string_view name)
{
    if (name == "sgd") {
        return OptimizerKind::sgd;
    }
    if (name == "adam") {
        return OptimizerKind::adam;
    }
    throw ValidationError("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

std::string_view to_string(OptimizerKind kind) noexcept
{
    return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

Optimizer::Optimizer(OptimizerKind kind, std::size_t size, double learning_rate, double beta1,
                     double beta2, double epsilon)
    : kind_(kind), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon)
{
    if (!(learning_rate > 0.0)) {
        throw ValidationError("learning rate must be > 0");
    }
    if (kind_ == OptimizerKind::adam) {
        m_.assign(size, 0.0);
        v_.assign(size, 0.0);
    }
}

void Optimizer::step(std::span<double> params, std::span<const double> grad)
{
    if (params.size() != grad.size()) {
        throw ValidationError("optimizer: parameter and gradient sizes differ");
    }
    ++t_;
    if (kind_ == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            params[i] -= lr_ * grad[i];
        }
        return;
    }
    if (params.size() != m_.size()) {
        throw ValidationError("optimizer: parameter block changed size");
    }
    const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        const double m_hat = m_[i] / correction1;
        const double v_hat = v_[i] / correction2;
        params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
}

} // namespace bandgate
