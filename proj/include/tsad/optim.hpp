#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "tsad/tensor.hpp"

namespace tsad {

enum class StepStatus {
    applied,
    /// A gradient entry was NaN or infinite; parameters were left untouched.
    skipped_nonfinite,
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment accumulators for one parameter group. Moments are created lazily on
/// the first step so they mirror whatever shapes the group has.
struct AdamState {
    AdamConfig config;
    std::size_t step = 0;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
};

StepStatus adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state);

/// Plain gradient descent: p <- p - lr * g.
StepStatus sgd_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, double learning_rate);

enum class OptimizerKind { adam, sgd };

OptimizerKind parse_optimizer_kind(std::string_view name);
std::string_view to_string(OptimizerKind kind);

/// Either optimizer behind one interface, bound to a single parameter group.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, AdamConfig config);

    StepStatus step(std::span<Tensor* const> params, std::span<const Tensor* const> grads);

    OptimizerKind kind() const noexcept { return kind_; }
    const AdamState& adam_state() const noexcept { return adam_; }

private:
    OptimizerKind kind_;
    AdamState adam_;
};

double global_norm(std::span<const Tensor* const> grads);

/// Rescales grads in place so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_global_norm(std::span<Tensor* const> grads, double max_norm);

} // namespace tsad
