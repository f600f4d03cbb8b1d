#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "tsad/dataset.hpp"
#include "tsad/gan.hpp"
#include "tsad/rng.hpp"
#include "tsad/tensor.hpp"

namespace tsad {

enum class Similarity {
    cosine,  // error = 1 - cos(x, G(z)) on flattened windows
    neg_mse, // error = mean squared difference
};

Similarity parse_similarity(std::string_view name);
std::string_view to_string(Similarity similarity);

struct InversionConfig {
    std::size_t iterations = 50;
    double learning_rate = 0.01;
    std::size_t restarts = 3;
    Similarity similarity = Similarity::cosine;
    /// Windows inverted together in one generator batch.
    std::size_t chunk_size = 64;

    void validate() const;
};

/// Reconstruction error between a window and its reconstruction, both
/// [s_w x d] (or any equal shapes).
double reconstruction_error(const Tensor& x, const Tensor& x_hat, Similarity similarity);

struct Inversion {
    Tensor latent;         // [s_w x latent_dim] of the best restart
    Tensor reconstruction; // G(latent), [s_w x d]
    double error = 0.0;
    double initial_error = 0.0; // starting error of the returned restart
    /// Per restart; discarded (non-finite) restarts are NaN.
    std::vector<double> restart_initial_errors;
    std::vector<double> restart_final_errors;
};

/// Gradient descent on the reconstruction error over the latent input, from
/// `restarts` standard-normal starting points. A step that would raise the
/// error is rejected and the step size halved, so each restart's error never
/// increases. Returns the restart with the smallest final error.
Inversion invert_window(const GanModel& model, const Tensor& x, const InversionConfig& config, Rng& rng);

/// invert_window for every window of `windows` [n x s_w x d]. Window i draws
/// its starting points from its own sub-stream, so the result for a window
/// does not depend on which other windows are inverted alongside it. Throws
/// std::runtime_error if every restart of some window diverges.
std::vector<Inversion> invert_windows(const GanModel& model, const Tensor& windows, const InversionConfig& config,
                                      Rng& rng);

/// Per-timestep sum over variables of |x - x_hat|; inputs are [s_w x d].
std::vector<double> residual(const Tensor& x, const Tensor& x_hat);

/// -log D(x) with the probability clamped away from 0.
double discrimination_loss(double probability);

/// Rescales values to [0, 1] by their own min and max; all zeros if constant.
std::vector<double> minmax_scale(std::span<const double> values);

/// lambda * residual + (1 - lambda) * discrimination, elementwise, for inputs
/// already scaled to [0, 1].
std::vector<double> combined_loss(std::span<const double> residual_norm, std::span<const double> discrimination_norm,
                                  double lambda);

/// Averages window-relative values back onto the timeline.
struct Remap {
    std::vector<double> values;        // [N]; 0 where uncovered
    std::vector<std::size_t> coverage; // [N]; number of (window, offset) pairs landing on t
};

/// Timestep t receives the mean of losses(j, s) over every window j and offset
/// s with start_indices[j] + s = t. `window_losses` is [n x s_w]; the starts
/// must be 0, step, 2 step, ... and every window must end inside [0, length).
Remap drs_remap(const Tensor& window_losses, std::span<const std::size_t> start_indices, std::size_t step,
                std::size_t length);

/// Per-window, per-timestep score components before any scaling, both [n x s_w].
struct WindowScores {
    Tensor residual;
    Tensor discrimination;
    std::vector<double> inversion_errors; // [n]
};

/// Inverts every window and evaluates the discriminator on it.
WindowScores score_windows(const GanModel& model, const WindowSet& windows, const InversionConfig& config, Rng& rng);

struct ScoreSeries {
    std::vector<double> drs;
    std::vector<double> residual_part;
    std::vector<double> discrimination_part;
    std::vector<std::size_t> coverage;
    double lambda = 0.5;

    std::size_t length() const { return drs.size(); }
    bool covered(std::size_t t) const { return coverage[t] > 0; }
};

/// Scales both components over the whole run, remaps them to timesteps and
/// combines them: drs = lambda * residual_part + (1 - lambda) * discrimination_part.
ScoreSeries combine_scores(const WindowScores& scores, const WindowSet& windows, double lambda);

struct LabelVector {
    LabelSeq labels;               // [N]
    std::vector<bool> uncovered;   // [N]; such timesteps are always labelled 0
    double tau = 0.0;

    std::size_t positives() const;
};

/// A_t = 1 iff t is covered and drs_t > tau.
LabelVector threshold_labels(const ScoreSeries& scores, double tau);

/// Empirical q-quantile (linear interpolation between order statistics).
double quantile(std::vector<double> values, double q);

} // namespace tsad
