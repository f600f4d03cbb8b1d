#pragma once

#include <optional>
#include <string_view>

#include "tsad/baselines.hpp"
#include "tsad/checkpoint.hpp"
#include "tsad/config.hpp"
#include "tsad/metrics.hpp"

namespace tsad {

/// Fits the feature pipeline on `train`, trains the GAN on its windows and,
/// if configured, stores the training data's own scores for the quantile
/// threshold policy.
Checkpoint fit_detector(const MultivariateSeries& train, const RunConfig& config, const EpochCallback& on_epoch = {});

/// Runs a raw series through the model's features, windows it, inverts and
/// discriminates every window, and combines the parts into DR-Scores. The
/// inversion starting points derive from config.train.seed only.
ScoreSeries score_series(const GanModel& model, const MultivariateSeries& series, const RunConfig& config);

struct Detection {
    ScoreSeries scores;
    LabelVector labels;
    std::optional<SweepResult> sweep; // set by the sweep policy
};

/// score_series followed by thresholding under config.tau_policy. The sweep
/// policy needs labels on `test`; the quantile policy needs calibration scores.
Detection detect(const Checkpoint& checkpoint, const MultivariateSeries& test, const RunConfig& config);

enum class BaselineMethod { pca, knn };
BaselineMethod parse_baseline_method(std::string_view name);

/// Scales both series with the normalizer fitted on `train`, then applies the
/// chosen per-timestep detector.
BaselineScore run_baseline(BaselineMethod method, const MultivariateSeries& train, const MultivariateSeries& test,
                           std::size_t k);

} // namespace tsad
