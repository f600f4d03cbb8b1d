#include "tsad/pipeline.hpp"

#include <stdexcept>
#include <string>

namespace tsad {

namespace {

// Sub-stream used for inversion starting points, kept apart from training draws.
constexpr std::uint64_t kDetectionStream = 0x64657465637421ULL;

} // namespace

Checkpoint fit_detector(const MultivariateSeries& train, const RunConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    train.validate();
    Checkpoint cp;
    cp.config = config;
    const FeaturePipeline features = fit_pipeline(train, config.pca);
    const WindowSet windows = make_windows(apply_pipeline(train, features), config.window_size, config.window_step);

    Rng rng(config.train.seed);
    cp.model = tsad::train(windows, config.train, rng, [&](const EpochStats& stats, const GanModel& model) {
        if (on_epoch) on_epoch(stats, model);
    });
    cp.model.features = features;

    if (config.calibrate) {
        const ScoreSeries scores = score_series(cp.model, train, config);
        for (std::size_t t = 0; t < scores.length(); ++t) {
            if (scores.covered(t)) cp.calibration.push_back(scores.drs[t]);
        }
    }
    return cp;
}

ScoreSeries score_series(const GanModel& model, const MultivariateSeries& series, const RunConfig& config) {
    if (series.variables() != model.features.input_dim()) {
        throw std::invalid_argument("data has " + std::to_string(series.variables()) + " variables, the model expects " +
                                    std::to_string(model.features.input_dim()));
    }
    series.validate();
    const WindowSet windows = make_windows(apply_pipeline(series, model.features), model.window_size, model.window_step);
    Rng rng(mix_seed(config.train.seed, kDetectionStream));
    return combine_scores(score_windows(model, windows, config.inversion, rng), windows, config.lambda);
}

Detection detect(const Checkpoint& checkpoint, const MultivariateSeries& test, const RunConfig& config) {
    config.validate();
    Detection out;
    out.scores = score_series(checkpoint.model, test, config);
    double tau = config.tau;
    switch (config.tau_policy) {
    case TauPolicy::fixed: break;
    case TauPolicy::quantile:
        if (checkpoint.calibration.empty()) {
            throw std::invalid_argument("tau_policy = quantile needs calibration scores; the checkpoint has none "
                                        "(train with calibrate = true or use another policy)");
        }
        tau = quantile(checkpoint.calibration, config.tau_quantile);
        break;
    case TauPolicy::sweep: {
        if (!test.labels) throw std::invalid_argument("tau_policy = sweep needs a label column in the test data");
        const std::vector<double> grid = quantile_grid();
        out.sweep = sweep_tau(out.scores, *test.labels, grid);
        tau = out.sweep->rows[out.sweep->best_f1].tau;
        break;
    }
    }
    out.labels = threshold_labels(out.scores, tau);
    return out;
}

BaselineMethod parse_baseline_method(std::string_view name) {
    if (name == "pca") return BaselineMethod::pca;
    if (name == "knn") return BaselineMethod::knn;
    throw std::invalid_argument("unknown baseline '" + std::string(name) + "' (expected pca or knn)");
}

BaselineScore run_baseline(BaselineMethod method, const MultivariateSeries& train, const MultivariateSeries& test,
                           std::size_t k) {
    const NormalizationState norm = fit_normalizer(train);
    const MultivariateSeries a = normalize(train, norm);
    const MultivariateSeries b = normalize(test, norm);
    return method == BaselineMethod::pca ? pca_detector(a, b, k) : knn_detector(a, b, k);
}

} // namespace tsad
