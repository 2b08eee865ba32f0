#include "affectlab/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace affectlab {

void OptimizerConfig::validate() const {
    if (!(base_learning_rate > 0.0) || !(value_learning_rate > 0.0)) {
        throw ConfigError("learning rates must be positive");
    }
    if (total_steps == 0) throw ConfigError("total_steps must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("dropout_rate must lie in [0, 1)");
    if (!(max_grad_norm >= 0.0)) throw ConfigError("max_grad_norm must be nonnegative");
}

double cosine_annealed_lr(double base, std::size_t step, std::size_t total_steps) {
    if (total_steps == 0) throw ConfigError("total_steps must be positive");
    if (step >= total_steps) return 0.0;
    const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
    return base * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void sgd_step(std::vector<Tensor>& params, double lr) {
    const bool any_grad = std::any_of(params.begin(), params.end(), [](const Tensor& p) { return p.has_grad(); });
    if (!any_grad) throw StateError("optimizer step without gradients; run backward first");
    for (auto& p : params) {
        if (!p.has_grad()) continue;
        auto data = p.mutable_data();
        auto grad = p.mutable_grad();
        if (lr != 0.0) {
            for (std::size_t i = 0; i < data.size(); ++i) data[i] -= lr * grad[i];
        }
        std::fill(grad.begin(), grad.end(), 0.0);
    }
}

double clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
    if (!(max_norm > 0.0)) throw ConfigError("clip_grad_norm: max_norm must be positive");
    double sq = 0.0;
    for (const auto& p : params) {
        if (!p.has_grad()) continue;
        for (double g : p.grad()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double factor = max_norm / norm;
        for (auto& p : params) {
            if (!p.has_grad()) continue;
            for (double& g : p.mutable_grad()) g *= factor;
        }
    }
    return norm;
}

double grad_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> params, double eps) {
    for (auto& p : params) p.zero_grad();
    loss_fn().backward();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) {
        analytic.emplace_back(p.has_grad() ? std::vector<double>(p.grad().begin(), p.grad().end())
                                           : std::vector<double>(p.numel(), 0.0));
        p.zero_grad();
    }

    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto data = params[k].mutable_data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double saved = data[i];
            data[i] = saved + eps;
            const double up = loss_fn().item();
            data[i] = saved - eps;
            const double down = loss_fn().item();
            data[i] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[k][i];
            const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6);
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace affectlab
