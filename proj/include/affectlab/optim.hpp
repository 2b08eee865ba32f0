#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "affectlab/nn.hpp"

namespace affectlab {

struct OptimizerConfig {
    double base_learning_rate = 2e-5;
    /// Learning rate for the critic; the actor uses base_learning_rate.
    double value_learning_rate = 2e-5;
    std::size_t total_steps = 1;
    std::size_t batch_size = 16;
    double dropout_rate = 0.1;
    /// Per-group gradient norm ceiling; 0 disables clipping.
    double max_grad_norm = 0.0;

    void validate() const;
};

/// base * 0.5 * (1 + cos(pi * step / total_steps)), clamped to zero past the end.
double cosine_annealed_lr(double base, std::size_t step, std::size_t total_steps);

/// Vanilla gradient descent: theta <- theta - lr * grad, then grads are zeroed.
/// Tensors that never received a gradient are left untouched; throws StateError
/// if none of them did (backward was not run).
void sgd_step(std::vector<Tensor>& params, double lr);

/// Rescales the gradients of `params` so their joint L2 norm is at most
/// `max_norm`. Returns the norm before clipping.
double clip_grad_norm(std::vector<Tensor>& params, double max_norm);

/// Max relative error between analytic gradients of `loss_fn` and central
/// differences (f(x+eps) - f(x-eps)) / 2eps, over every element of `params`.
/// Relative error is |a - n| / max(|a| + |n|, 1e-6).
double grad_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> params, double eps = 1e-5);

}  // namespace affectlab
