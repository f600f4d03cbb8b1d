#include "tsad/gan.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "tsad/mmd.hpp"

namespace tsad {

namespace {

double clamp_probability(double p) { return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor); }

double mean_neg_log(std::span<const double> values, bool complement) {
    double sum = 0.0;
    for (double p : values) sum -= std::log(complement ? 1.0 - clamp_probability(p) : clamp_probability(p));
    return sum / static_cast<double>(values.size());
}

// Gradient of the mean binary cross-entropy over every (window, timestep)
// probability w.r.t. the matching discriminator logit: (p - target) / count.
Tensor logit_grads(const Tensor& probs, double target) {
    Tensor grads(probs.shape());
    const double count = static_cast<double>(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) grads[i] = (probs[i] - target) / count;
    return grads;
}

void add_into(LstmStackParams& total, const LstmStackParams& part) {
    auto dst = total.tensors();
    const auto src = part.tensors();
    for (std::size_t k = 0; k < dst.size(); ++k) {
        for (std::size_t i = 0; i < dst[k]->size(); ++i) (*dst[k])[i] += (*src[k])[i];
    }
}

std::vector<const Tensor*> as_const(const std::vector<Tensor*>& tensors) {
    return {tensors.begin(), tensors.end()};
}

[[noreturn]] void diverged(const char* what, double value, std::size_t epoch, std::size_t batch) {
    throw std::runtime_error(std::string("training diverged: ") + what + " = " + std::to_string(value) +
                             " at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch));
}

} // namespace

double d_loss(std::span<const double> real_scores, std::span<const double> fake_scores) {
    if (real_scores.empty() || fake_scores.empty()) throw std::invalid_argument("d_loss: empty score set");
    return mean_neg_log(real_scores, false) + mean_neg_log(fake_scores, true);
}

double g_loss(std::span<const double> fake_scores) {
    if (fake_scores.empty()) throw std::invalid_argument("g_loss: empty score set");
    return mean_neg_log(fake_scores, false);
}

void TrainConfig::validate() const {
    const auto positive = [](std::size_t v, const char* name) {
        if (v == 0) throw std::invalid_argument(std::string("training config: ") + name + " must be positive");
    };
    positive(latent_dim, "latent_dim");
    positive(generator_hidden, "generator hidden size");
    positive(generator_depth, "generator depth");
    positive(discriminator_hidden, "discriminator hidden size");
    positive(discriminator_depth, "discriminator depth");
    positive(epochs, "epochs");
    positive(batch_size, "batch_size");
    positive(d_steps, "d_steps");
    if (monitor_size < 2) throw std::invalid_argument("training config: monitor_size must be at least 2");
    for (double v : {generator_learning_rate, discriminator_learning_rate, adam_epsilon, clip_norm}) {
        if (!(v > 0.0)) throw std::invalid_argument("training config: learning rates, epsilon and clip norm must be positive");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw std::invalid_argument("training config: Adam betas must lie in [0, 1)");
    }
}

void GanModel::validate() const {
    generator.validate();
    discriminator.validate();
    if (generator.dims.input_dim != latent_dim) throw std::invalid_argument("generator input does not match latent_dim");
    if (discriminator.dims.input_dim != generator.dims.output_dim) {
        throw std::invalid_argument("discriminator input dim " + std::to_string(discriminator.dims.input_dim) +
                                    " differs from generator output dim " + std::to_string(generator.dims.output_dim));
    }
    if (discriminator.dims.output_dim != 1) throw std::invalid_argument("discriminator must have one output");
    if (window_size == 0 || window_step == 0) throw std::invalid_argument("model window geometry must be positive");
    if (features.fitted() && features.output_dim() != data_dim()) {
        throw std::invalid_argument("feature pipeline produces " + std::to_string(features.output_dim()) +
                                    " variables but the networks expect " + std::to_string(data_dim()));
    }
}

AdversarialTrainer::AdversarialTrainer(GanModel& model, const TrainConfig& config, Rng& rng)
    : model_(model), config_(config), rng_(rng),
      generator_opt_(config.generator_optimizer,
                     {config.generator_learning_rate, config.adam_beta1, config.adam_beta2, config.adam_epsilon}),
      discriminator_opt_(config.discriminator_optimizer,
                         {config.discriminator_learning_rate, config.adam_beta1, config.adam_beta2, config.adam_epsilon}) {}

double AdversarialTrainer::discriminator_step(const Tensor& real) {
    const std::size_t b = real.dim(0);
    const std::size_t steps = real.dim(1);
    const Tensor z = sample_latent(rng_, b, steps, model_.latent_dim);
    const Tensor fake = lstm_forward(model_.generator, z, HeadActivation::tanh).outputs;
    const LstmForward real_pass = lstm_forward(model_.discriminator, real, HeadActivation::sigmoid);
    const LstmForward fake_pass = lstm_forward(model_.discriminator, fake, HeadActivation::sigmoid);

    const double loss = d_loss(real_pass.outputs.values(), fake_pass.outputs.values());
    if (!std::isfinite(loss)) return loss;

    LstmGradients grads = lstm_backward(model_.discriminator, real_pass.cache,
                                        logit_grads(real_pass.outputs, 1.0), GradientAt::pre_activation);
    const LstmGradients fake_grads = lstm_backward(model_.discriminator, fake_pass.cache,
                                                   logit_grads(fake_pass.outputs, 0.0),
                                                   GradientAt::pre_activation);
    add_into(grads.params, fake_grads.params);
    const auto grad_tensors = grads.params.tensors();
    clip_global_norm(grad_tensors, config_.clip_norm);
    discriminator_opt_.step(model_.discriminator.tensors(), as_const(grad_tensors));
    return loss;
}

double AdversarialTrainer::generator_step(std::size_t batch) {
    const std::size_t steps = model_.window_size;
    const Tensor z = sample_latent(rng_, batch, steps, model_.latent_dim);
    const LstmForward gen_fwd = lstm_forward(model_.generator, z, HeadActivation::tanh);
    const LstmForward disc_fwd = lstm_forward(model_.discriminator, gen_fwd.outputs, HeadActivation::sigmoid);
    const double loss = g_loss(disc_fwd.outputs.values());
    if (!std::isfinite(loss)) return loss;

    // Only input gradients are taken from D; its parameters stay frozen.
    const LstmGradients through_d =
        lstm_backward(model_.discriminator, disc_fwd.cache, logit_grads(disc_fwd.outputs, 1.0),
                      GradientAt::pre_activation, false);
    LstmGradients grads = lstm_backward(model_.generator, gen_fwd.cache, through_d.inputs);
    const auto grad_tensors = grads.params.tensors();
    clip_global_norm(grad_tensors, config_.clip_norm);
    generator_opt_.step(model_.generator.tensors(), as_const(grad_tensors));
    return loss;
}

GanModel train(const WindowSet& windows, const TrainConfig& config, Rng& rng, const EpochCallback& on_epoch) {
    config.validate();
    const std::size_t count = windows.count();
    if (count == 0) throw std::invalid_argument("train: no windows");
    if (!windows.windows.all_finite()) throw std::invalid_argument("train: windows contain non-finite values");
    const std::size_t d = windows.dim();

    GanModel model;
    model.latent_dim = config.latent_dim;
    model.window_size = windows.window_size;
    model.window_step = windows.step;
    model.generator = init_params(rng, {config.latent_dim, config.generator_hidden, config.generator_depth, d});
    model.discriminator = init_params(rng, {d, config.discriminator_hidden, config.discriminator_depth, 1});
    AdversarialTrainer trainer(model, config, rng);

    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;

    // Fixed real sample for the MMD monitor.
    std::vector<std::size_t> monitor_idx = order;
    rng.shuffle(monitor_idx);
    monitor_idx.resize(std::min(count, config.monitor_size));
    const Tensor monitor_real = gather_windows(windows.windows, monitor_idx);
    const bool can_monitor = monitor_idx.size() >= 2;

    const std::size_t batch_size = std::min(config.batch_size, count);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(order);
        double d_sum = 0.0;
        double g_sum = 0.0;
        std::size_t batches = 0;

        for (std::size_t begin = 0; begin < count; begin += batch_size) {
            const std::size_t end = std::min(begin + batch_size, count);
            const std::vector<std::size_t> batch_idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                                     order.begin() + static_cast<std::ptrdiff_t>(end));
            const Tensor real = gather_windows(windows.windows, batch_idx);
            ++batches;

            double batch_d_loss = 0.0;
            for (std::size_t k = 0; k < config.d_steps; ++k) {
                batch_d_loss = trainer.discriminator_step(real);
                if (!std::isfinite(batch_d_loss)) diverged("discriminator loss", batch_d_loss, epoch, batches);
            }
            const double batch_g_loss = trainer.generator_step(batch_idx.size());
            if (!std::isfinite(batch_g_loss)) diverged("generator loss", batch_g_loss, epoch, batches);

            d_sum += batch_d_loss;
            g_sum += batch_g_loss;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.d_loss = d_sum / static_cast<double>(batches);
        stats.g_loss = g_sum / static_cast<double>(batches);
        stats.mmd = can_monitor ? mmd2(generate(model, rng, monitor_idx.size()), monitor_real)
                                : std::numeric_limits<double>::quiet_NaN();
        model.training_log.push_back(stats);
        if (on_epoch) on_epoch(stats, model);
    }
    return model;
}

Tensor generate_from(const GanModel& model, const Tensor& latent) {
    return lstm_forward(model.generator, latent, HeadActivation::tanh).outputs;
}

Tensor generate(const GanModel& model, Rng& rng, std::size_t count) {
    return generate_from(model, sample_latent(rng, count, model.window_size, model.latent_dim));
}

Tensor discriminate(const GanModel& model, const Tensor& windows) {
    const Tensor probs = lstm_forward(model.discriminator, windows, HeadActivation::sigmoid).outputs;
    return probs.reshaped({probs.dim(0), probs.dim(1)});
}

std::vector<double> window_scores(const Tensor& per_step_probabilities) {
    const std::size_t n = per_step_probabilities.dim(0);
    const std::size_t steps = per_step_probabilities.dim(1);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = per_step_probabilities(i, steps - 1);
    return out;
}

void write_training_log(std::ostream& out, const std::vector<EpochStats>& log) {
    out << "epoch,d_loss,g_loss,mmd\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const EpochStats& e : log) out << e.epoch << ',' << e.d_loss << ',' << e.g_loss << ',' << e.mmd << '\n';
}

} // namespace tsad
