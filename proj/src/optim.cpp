#include "tsad/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tsad {

namespace {

void check_group(std::span<Tensor* const> params, std::span<const Tensor* const> grads) {
    if (params.size() != grads.size()) {
        throw std::invalid_argument("optimizer: " + std::to_string(params.size()) + " parameters but " +
                                    std::to_string(grads.size()) + " gradients");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->shape() != grads[i]->shape()) {
            throw std::invalid_argument("optimizer: parameter " + std::to_string(i) + " has shape " +
                                        shape_string(params[i]->shape()) + " but gradient has " +
                                        shape_string(grads[i]->shape()));
        }
    }
}

bool all_finite(std::span<const Tensor* const> grads) {
    for (const Tensor* g : grads) {
        if (!g->all_finite()) return false;
    }
    return true;
}

} // namespace

StepStatus adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state) {
    check_group(params, grads);
    if (!all_finite(grads)) return StepStatus::skipped_nonfinite;

    if (state.first_moment.empty()) {
        for (const Tensor* p : params) {
            state.first_moment.emplace_back(p->shape());
            state.second_moment.emplace_back(p->shape());
        }
    } else if (state.first_moment.size() != params.size()) {
        throw std::invalid_argument("adam_step: parameter group changed size between steps");
    }

    const AdamConfig& cfg = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(cfg.beta1, t);
    const double bias2 = 1.0 - std::pow(cfg.beta2, t);

    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        const Tensor& g = *grads[k];
        Tensor& m = state.first_moment[k];
        Tensor& v = state.second_moment[k];
        if (m.shape() != p.shape()) throw std::invalid_argument("adam_step: moment shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
    return StepStatus::applied;
}

StepStatus sgd_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, double learning_rate) {
    check_group(params, grads);
    if (!all_finite(grads)) return StepStatus::skipped_nonfinite;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        const Tensor& g = *grads[k];
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= learning_rate * g[i];
    }
    return StepStatus::applied;
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "sgd") return OptimizerKind::sgd;
    throw std::invalid_argument("unknown optimizer '" + std::string(name) + "' (expected adam or sgd)");
}

std::string_view to_string(OptimizerKind kind) {
    return kind == OptimizerKind::adam ? "adam" : "sgd";
}

Optimizer::Optimizer(OptimizerKind kind, AdamConfig config) : kind_(kind) { adam_.config = config; }

StepStatus Optimizer::step(std::span<Tensor* const> params, std::span<const Tensor* const> grads) {
    if (kind_ == OptimizerKind::adam) return adam_step(params, grads, adam_);
    return sgd_step(params, grads, adam_.config.learning_rate);
}

double global_norm(std::span<const Tensor* const> grads) {
    double sum = 0.0;
    for (const Tensor* g : grads) sum += squared_norm(*g);
    return std::sqrt(sum);
}

double clip_global_norm(std::span<Tensor* const> grads, double max_norm) {
    double sum = 0.0;
    for (const Tensor* g : grads) sum += squared_norm(*g);
    const double norm = std::sqrt(sum);
    if (std::isfinite(norm) && norm > max_norm && norm > 0.0) {
        const double factor = max_norm / norm;
        for (Tensor* g : grads) {
            for (double& v : g->values()) v *= factor;
        }
    }
    return norm;
}

} // namespace tsad
