#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace bandgate {

enum class OptimizerKind { sgd, adam };

OptimizerKind parse_optimizer(std::string_view name);
std::string_view to_string(OptimizerKind kind) noexcept;

/// Plain SGD or Adam over one flat parameter block.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, std::size_t size, double learning_rate, double beta1 = 0.9,
              double beta2 = 0.999, double epsilon = 1e-8);

    void step(std::span<double> params, std::span<const double> grad);

    OptimizerKind kind() const noexcept { return kind_; }
    double learning_rate() const noexcept { return lr_; }
    std::size_t steps() const noexcept { return t_; }

private:
    OptimizerKind kind_;
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    std::size_t t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

} // namespace bandgate
