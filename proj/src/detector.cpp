#include "tsad/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tsad {

Similarity parse_similarity(std::string_view name) {
    if (name == "cosine") return Similarity::cosine;
    if (name == "neg_mse") return Similarity::neg_mse;
    throw std::invalid_argument("unknown similarity '" + std::string(name) + "' (expected cosine or neg_mse)");
}

std::string_view to_string(Similarity similarity) {
    return similarity == Similarity::cosine ? "cosine" : "neg_mse";
}

void InversionConfig::validate() const {
    if (iterations == 0) throw std::invalid_argument("inversion: iterations must be at least 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("inversion: learning rate must be positive");
    }
    if (restarts == 0) throw std::invalid_argument("inversion: restarts must be at least 1");
    if (chunk_size == 0) throw std::invalid_argument("inversion: chunk size must be at least 1");
}

namespace {

// Accepted steps lengthen the next one; rejected steps halve it.
constexpr double kStepGrowth = 1.5;

// Error of x_hat against x (both `n` values) and its gradient w.r.t. x_hat.
double error_and_grad(const double* x, const double* x_hat, std::size_t n, Similarity similarity, double* grad) {
    if (similarity == Similarity::neg_mse) {
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double d = x_hat[k] - x[k];
            sum += d * d;
            if (grad) grad[k] = 2.0 * d / static_cast<double>(n);
        }
        return sum / static_cast<double>(n);
    }
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        xy += x[k] * x_hat[k];
        xx += x[k] * x[k];
        yy += x_hat[k] * x_hat[k];
    }
    const double norm = std::sqrt(xx) * std::sqrt(yy);
    if (norm < 1e-300) {
        if (grad) std::fill(grad, grad + n, 0.0);
        return 1.0;
    }
    const double cos = xy / norm;
    if (grad) {
        // d(1 - cos)/dy = -(x / (|x||y|) - cos * y / |y|^2)
        for (std::size_t k = 0; k < n; ++k) grad[k] = -(x[k] / norm - cos * x_hat[k] / yy);
    }
    return 1.0 - cos;
}

struct Evaluation {
    Tensor outputs;           // [b x s_w x d]
    std::vector<double> errors;
    Tensor latent_grads;      // [b x s_w x latent]
};

Evaluation evaluate(const GanModel& model, const Tensor& latent, const Tensor& targets, Similarity similarity) {
    const std::size_t b = latent.dim(0);
    LstmForward fwd = lstm_forward(model.generator, latent, HeadActivation::tanh);
    const std::size_t width = fwd.outputs.size() / b;
    Tensor output_grads(fwd.outputs.shape());
    std::vector<double> errors(b);
    for (std::size_t i = 0; i < b; ++i) {
        errors[i] = error_and_grad(targets.data() + i * width, fwd.outputs.data() + i * width, width, similarity,
                                   output_grads.data() + i * width);
    }
    Tensor latent_grads = lstm_backward(model.generator, fwd.cache, output_grads, GradientAt::outputs, false).inputs;
    return {std::move(fwd.outputs), std::move(errors), std::move(latent_grads)};
}

void copy_slot(const Tensor& from, Tensor& to, std::size_t slot) {
    const std::size_t width = from.size() / from.dim(0);
    std::copy_n(from.data() + slot * width, width, to.data() + slot * width);
}

Tensor slot_of(const Tensor& t, std::size_t slot) {
    const std::size_t width = t.size() / t.dim(0);
    Shape shape(t.shape().begin() + 1, t.shape().end());
    return Tensor(shape, std::vector<double>(t.data() + slot * width, t.data() + (slot + 1) * width));
}

// Inverts windows [begin, end) of `windows`; restart r of window i draws from
// the sub-stream mix_seed(stream, i).
void invert_chunk(const GanModel& model, const Tensor& windows, std::size_t begin, std::size_t end,
                  const InversionConfig& config, std::uint64_t stream, std::vector<Inversion>& out) {
    const std::size_t steps = windows.dim(1);
    const std::size_t restarts = config.restarts;
    const std::size_t b = (end - begin) * restarts;
    const std::size_t width = steps * windows.dim(2);
    const std::size_t latent_width = steps * model.latent_dim;

    Tensor latent({b, steps, model.latent_dim});
    Tensor targets({b, steps, windows.dim(2)});
    for (std::size_t i = begin; i < end; ++i) {
        Rng rng(mix_seed(stream, i));
        for (std::size_t r = 0; r < restarts; ++r) {
            const std::size_t slot = (i - begin) * restarts + r;
            const Tensor z = sample_latent(rng, 1, steps, model.latent_dim);
            std::copy_n(z.data(), latent_width, latent.data() + slot * latent_width);
            std::copy_n(windows.data() + i * width, width, targets.data() + slot * width);
        }
    }

    Evaluation current = evaluate(model, latent, targets, config.similarity);
    const std::vector<double> initial = current.errors;
    std::vector<bool> alive(b);
    for (std::size_t k = 0; k < b; ++k) alive[k] = std::isfinite(initial[k]);
    std::vector<double> step(b, config.learning_rate);

    Tensor candidate = latent;
    for (std::size_t it = 0; it < config.iterations; ++it) {
        for (std::size_t k = 0; k < b; ++k) {
            const double* z = latent.data() + k * latent_width;
            const double* g = current.latent_grads.data() + k * latent_width;
            double* c = candidate.data() + k * latent_width;
            for (std::size_t q = 0; q < latent_width; ++q) c[q] = alive[k] ? z[q] - step[k] * g[q] : z[q];
        }
        const Evaluation trial = evaluate(model, candidate, targets, config.similarity);
        for (std::size_t k = 0; k < b; ++k) {
            if (!alive[k]) continue;
            if (std::isfinite(trial.errors[k]) && trial.errors[k] <= current.errors[k]) {
                copy_slot(candidate, latent, k);
                copy_slot(trial.outputs, current.outputs, k);
                copy_slot(trial.latent_grads, current.latent_grads, k);
                current.errors[k] = trial.errors[k];
                step[k] *= kStepGrowth;
            } else {
                step[k] *= 0.5;
            }
        }
    }

    for (std::size_t i = begin; i < end; ++i) {
        Inversion inv;
        std::size_t best = b;
        for (std::size_t r = 0; r < restarts; ++r) {
            const std::size_t k = (i - begin) * restarts + r;
            const double nan = std::numeric_limits<double>::quiet_NaN();
            inv.restart_initial_errors.push_back(alive[k] ? initial[k] : nan);
            inv.restart_final_errors.push_back(alive[k] ? current.errors[k] : nan);
            if (alive[k] && (best == b || current.errors[k] < current.errors[best])) best = k;
        }
        if (best == b) {
            throw std::runtime_error("inversion of window " + std::to_string(i) +
                                     ": every restart produced a non-finite error");
        }
        inv.latent = slot_of(latent, best);
        inv.reconstruction = slot_of(current.outputs, best);
        inv.error = current.errors[best];
        inv.initial_error = initial[best];
        out[i] = std::move(inv);
    }
}

void check_windows(const GanModel& model, const Tensor& windows) {
    if (windows.rank() != 3) throw std::invalid_argument("expected windows [n x s_w x d], got " + shape_string(windows.shape()));
    if (windows.dim(2) != model.data_dim()) {
        throw std::invalid_argument("windows have " + std::to_string(windows.dim(2)) + " variables, model expects " +
                                    std::to_string(model.data_dim()));
    }
}

} // namespace

double reconstruction_error(const Tensor& x, const Tensor& x_hat, Similarity similarity) {
    if (x.shape() != x_hat.shape()) {
        throw std::invalid_argument("reconstruction_error: shapes " + shape_string(x.shape()) + " and " +
                                    shape_string(x_hat.shape()) + " differ");
    }
    return error_and_grad(x.data(), x_hat.data(), x.size(), similarity, nullptr);
}

std::vector<Inversion> invert_windows(const GanModel& model, const Tensor& windows, const InversionConfig& config,
                                      Rng& rng) {
    config.validate();
    check_windows(model, windows);
    const std::uint64_t stream = rng.next_u64();
    const std::size_t n = windows.dim(0);
    std::vector<Inversion> out(n);
    for (std::size_t begin = 0; begin < n; begin += config.chunk_size) {
        invert_chunk(model, windows, begin, std::min(n, begin + config.chunk_size), config, stream, out);
    }
    return out;
}

Inversion invert_window(const GanModel& model, const Tensor& x, const InversionConfig& config, Rng& rng) {
    if (x.rank() != 2) throw std::invalid_argument("invert_window: expected [s_w x d], got " + shape_string(x.shape()));
    return invert_windows(model, x.reshaped({1, x.dim(0), x.dim(1)}), config, rng).front();
}

std::vector<double> residual(const Tensor& x, const Tensor& x_hat) {
    if (x.rank() != 2 || x.shape() != x_hat.shape()) {
        throw std::invalid_argument("residual: shapes " + shape_string(x.shape()) + " and " +
                                    shape_string(x_hat.shape()) + " must be equal [s_w x d]");
    }
    std::vector<double> out(x.dim(0), 0.0);
    for (std::size_t s = 0; s < x.dim(0); ++s) {
        for (std::size_t k = 0; k < x.dim(1); ++k) out[s] += std::abs(x(s, k) - x_hat(s, k));
    }
    return out;
}

double discrimination_loss(double probability) {
    return -std::log(std::clamp(probability, kProbabilityFloor, 1.0 - kProbabilityFloor));
}

std::vector<double> minmax_scale(std::span<const double> values) {
    std::vector<double> out(values.size(), 0.0);
    if (values.empty()) return out;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) return out;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
    return out;
}

std::vector<double> combined_loss(std::span<const double> residual_norm, std::span<const double> discrimination_norm,
                                  double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
    if (residual_norm.size() != discrimination_norm.size()) {
        throw std::invalid_argument("combined_loss: component lengths differ");
    }
    std::vector<double> out(residual_norm.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = lambda * residual_norm[i] + (1.0 - lambda) * discrimination_norm[i];
    }
    return out;
}

Remap drs_remap(const Tensor& window_losses, std::span<const std::size_t> start_indices, std::size_t step,
                std::size_t length) {
    if (window_losses.rank() != 2) throw std::invalid_argument("drs_remap: window losses must be [n x s_w]");
    const std::size_t n = window_losses.dim(0);
    const std::size_t width = window_losses.dim(1);
    if (start_indices.size() != n) throw std::invalid_argument("drs_remap: one start index per window required");
    if (step == 0) throw std::invalid_argument("drs_remap: step must be positive");
    for (std::size_t j = 0; j < n; ++j) {
        if (start_indices[j] != j * step) {
            throw std::invalid_argument("drs_remap: window " + std::to_string(j) + " starts at " +
                                        std::to_string(start_indices[j]) + ", expected " + std::to_string(j * step));
        }
        if (start_indices[j] + width > length) {
            throw std::invalid_argument("drs_remap: window " + std::to_string(j) + " runs past the series end");
        }
    }
    Remap out{std::vector<double>(length, 0.0), std::vector<std::size_t>(length, 0)};
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t s = 0; s < width; ++s) {
            out.values[start_indices[j] + s] += window_losses(j, s);
            ++out.coverage[start_indices[j] + s];
        }
    }
    for (std::size_t t = 0; t < length; ++t) {
        if (out.coverage[t] > 0) out.values[t] /= static_cast<double>(out.coverage[t]);
    }
    return out;
}

WindowScores score_windows(const GanModel& model, const WindowSet& windows, const InversionConfig& config, Rng& rng) {
    check_windows(model, windows.windows);
    const std::size_t n = windows.count();
    const std::size_t steps = windows.window_size;
    const std::vector<Inversion> inversions = invert_windows(model, windows.windows, config, rng);

    WindowScores out{Tensor({n, steps}), Tensor({n, steps}), std::vector<double>(n)};
    for (std::size_t j = 0; j < n; ++j) {
        const Tensor x = gather_windows(windows.windows, {j}).reshaped({steps, windows.dim()});
        const std::vector<double> res = residual(x, inversions[j].reconstruction);
        std::copy(res.begin(), res.end(), out.residual.data() + j * steps);
        out.inversion_errors[j] = inversions[j].error;
    }
    for (std::size_t begin = 0; begin < n; begin += config.chunk_size) {
        std::vector<std::size_t> idx;
        for (std::size_t j = begin; j < std::min(n, begin + config.chunk_size); ++j) idx.push_back(j);
        const Tensor probs = discriminate(model, gather_windows(windows.windows, idx));
        for (std::size_t k = 0; k < probs.size(); ++k) {
            out.discrimination[begin * steps + k] = discrimination_loss(probs[k]);
        }
    }
    return out;
}

ScoreSeries combine_scores(const WindowScores& scores, const WindowSet& windows, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
    const Shape shape = scores.residual.shape();
    if (scores.discrimination.shape() != shape) throw std::invalid_argument("combine_scores: component shapes differ");
    const Tensor res(shape, minmax_scale(scores.residual.values()));
    const Tensor disc(shape, minmax_scale(scores.discrimination.values()));
    Remap r = drs_remap(res, windows.start_indices, windows.step, windows.origin_length);
    Remap d = drs_remap(disc, windows.start_indices, windows.step, windows.origin_length);

    ScoreSeries out;
    out.lambda = lambda;
    out.drs = combined_loss(r.values, d.values, lambda);
    out.residual_part = std::move(r.values);
    out.discrimination_part = std::move(d.values);
    out.coverage = std::move(r.coverage);
    return out;
}

std::size_t LabelVector::positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

LabelVector threshold_labels(const ScoreSeries& scores, double tau) {
    if (!std::isfinite(tau)) throw std::invalid_argument("threshold must be finite");
    LabelVector out{LabelSeq(scores.length(), 0), std::vector<bool>(scores.length(), false), tau};
    for (std::size_t t = 0; t < scores.length(); ++t) {
        out.uncovered[t] = !scores.covered(t);
        out.labels[t] = scores.covered(t) && scores.drs[t] > tau ? 1 : 0;
    }
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty set");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

} // namespace tsad
