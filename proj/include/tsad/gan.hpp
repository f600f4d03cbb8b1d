#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "tsad/dataset.hpp"
#include "tsad/lstm.hpp"
#include "tsad/optim.hpp"
#include "tsad/rng.hpp"

namespace tsad {

/// Probabilities are clamped to [floor, 1 - floor] before logs are taken.
inline constexpr double kProbabilityFloor = 1e-7;

/// Discriminator loss: mean(-log D(x)) over real windows plus
/// mean(-log(1 - D(G(z)))) over generated ones.
double d_loss(std::span<const double> real_scores, std::span<const double> fake_scores);

/// Non-saturating generator loss: mean(-log D(G(z))).
double g_loss(std::span<const double> fake_scores);

struct TrainConfig {
    std::size_t latent_dim = 15;
    std::size_t generator_hidden = 100;
    std::size_t generator_depth = 3;
    std::size_t discriminator_hidden = 100;
    std::size_t discriminator_depth = 1;

    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    std::size_t d_steps = 1;

    OptimizerKind generator_optimizer = OptimizerKind::adam;
    OptimizerKind discriminator_optimizer = OptimizerKind::adam;
    double generator_learning_rate = 1e-3;
    double discriminator_learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double clip_norm = 5.0;

    /// Real windows held fixed for the per-epoch MMD monitor.
    std::size_t monitor_size = 100;
    std::uint64_t seed = 42;

    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    double mmd = 0.0;
};

struct GanModel {
    LstmStackParams generator;     // latent_dim -> d, tanh head
    LstmStackParams discriminator; // d -> 1, sigmoid head
    std::size_t latent_dim = 0;
    std::size_t window_size = 0;
    std::size_t window_step = 0;
    FeaturePipeline features; // filled in by whoever fitted it on the raw data
    std::vector<EpochStats> training_log;

    std::size_t data_dim() const { return generator.dims.output_dim; }
    void validate() const;
};

/// One network update at a time; train() is a loop over these.
class AdversarialTrainer {
public:
    AdversarialTrainer(GanModel& model, const TrainConfig& config, Rng& rng);

    /// One optimizer step on d_loss for `real` [b x s_w x d] against b fresh
    /// generated windows. Returns the loss before the step.
    double discriminator_step(const Tensor& real);

    /// One optimizer step on g_loss for `batch` fresh latent samples, with
    /// gradients flowing through the discriminator. Only the generator changes.
    double generator_step(std::size_t batch);

private:
    GanModel& model_;
    const TrainConfig& config_;
    Rng& rng_;
    Optimizer generator_opt_;
    Optimizer discriminator_opt_;
};

using EpochCallback = std::function<void(const EpochStats&, const GanModel&)>;

/// Adversarial training over already-preprocessed windows. Each epoch shuffles
/// the windows into mini-batches; per batch the discriminator takes `d_steps`
/// optimizer steps and then the generator takes one step through the frozen
/// discriminator. Throws std::runtime_error naming the epoch and batch if a
/// loss becomes non-finite.
GanModel train(const WindowSet& windows, const TrainConfig& config, Rng& rng, const EpochCallback& on_epoch = {});

/// `count` generated windows [count x s_w x d], every value in (-1, 1).
Tensor generate(const GanModel& model, Rng& rng, std::size_t count);

/// Generator output for explicit latent input [n x s_w x latent_dim].
Tensor generate_from(const GanModel& model, const Tensor& latent);

/// Per-timestep discriminator probabilities [n x s_w] for windows [n x s_w x d].
Tensor discriminate(const GanModel& model, const Tensor& windows);

/// Window-level score: the probability at each window's last timestep.
std::vector<double> window_scores(const Tensor& per_step_probabilities);

/// CSV with header `epoch,d_loss,g_loss,mmd`.
void write_training_log(std::ostream& out, const std::vector<EpochStats>& log);

} // namespace tsad
