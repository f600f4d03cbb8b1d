// Acceptance gate: runs every criterion at its stated tolerance and prints one
// PASS/FAIL line each. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "tsad/baselines.hpp"
#include "tsad/checkpoint.hpp"
#include "tsad/gradcheck.hpp"
#include "tsad/metrics.hpp"
#include "tsad/mmd.hpp"
#include "tsad/pipeline.hpp"
#include "tsad/score_io.hpp"
#include "tsad/synth.hpp"

using namespace tsad;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1: BPTT against central differences

Outcome gradient_check() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(2024);
    LstmStackParams params = init_params(rng, {2, 8, 2, 2});
    for (auto& layer : params.layers)
        for (double& v : layer.bias.values()) v += rng.uniform(-0.5, 0.5);
    const Tensor inputs = sample_normal(rng, {3, 5, 2});
    const Tensor weights = sample_normal(rng, {3, 5, 2});
    auto loss = [&](const Tensor&) { return dot(lstm_forward(params, inputs, HeadActivation::tanh).outputs, weights); };

    const LstmForward fwd = lstm_forward(params, inputs, HeadActivation::tanh);
    const LstmStackParams analytic = lstm_backward(params, fwd.cache, weights).params;
    const auto grads = analytic.tensors();
    auto tensors = params.tensors();
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::size_t k = 0; k < tensors.size(); ++k) {
        const Tensor numeric = finite_diff_grad(loss, *tensors[k], 1e-5);
        for (std::size_t i = 0; i < numeric.size(); ++i) {
            worst = std::max(worst, relative_error((*grads[k])[i], numeric[i]));
            ++checked;
        }
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && secs < 60.0,
            fmt("worst relative error %.2e over %zu parameters (limit 1e-4), %.1f s (limit 60 s)", worst, checked, secs)};
}

// ---- 2: remap against enumeration

Outcome remap_oracle() {
    Rng rng(31337);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t sw = 1 + rng.below(40);
        const std::size_t ss = 1 + rng.below(15);
        const std::size_t length = sw + rng.below(500 - sw + 1);
        const std::size_t n = window_count(length, sw, ss);
        const Tensor losses = sample_normal(rng, {n, sw});
        std::vector<std::size_t> starts(n);
        for (std::size_t j = 0; j < n; ++j) starts[j] = j * ss;
        const Remap fast = drs_remap(losses, starts, ss, length);
        for (std::size_t t = 0; t < length; ++t) {
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t s = 0; s < sw; ++s)
                    if (j * ss + s == t) {
                        sum += losses(j, s);
                        ++count;
                    }
            const double want = count ? sum / static_cast<double>(count) : 0.0;
            if (fast.values[t] != want || fast.coverage[t] != count) ++mismatches;
        }
    }
    return {mismatches == 0, fmt("%zu mismatching timesteps over 50 geometries (exact equality)", mismatches)};
}

// ---- 3: metrics against a second counting loop

Outcome metrics_oracle() {
    Rng rng(4242);
    std::size_t failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        LabelSeq pred(1000), truth(1000);
        const double pp = rng.uniform(), pt = rng.uniform();
        for (std::size_t i = 0; i < 1000; ++i) {
            pred[i] = rng.uniform() < pp;
            truth[i] = rng.uniform() < pt;
        }
        std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < 1000; ++i) {
            if (pred[i] && truth[i]) ++tp;
            else if (pred[i]) ++fp;
            else if (truth[i]) ++fn;
            else ++tn;
        }
        const ConfusionCounts c = confusion(pred, truth);
        const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
        const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
        const double f = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
        if (!(c == ConfusionCounts{tp, fp, tn, fn}) || precision(c).value != p || recall(c).value != r || f1(c).value != f) {
            ++failures;
        }
    }
    return {failures == 0, fmt("%zu of 100 trials disagree (N = 1000, exact)", failures)};
}

// ---- 4: MMD calibration

Outcome mmd_calibration() {
    double worst_same = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const Tensor a = sample_normal(rng, {200, 10, 2});
        const Tensor b = sample_normal(rng, {200, 10, 2});
        worst_same = std::max(worst_same, std::abs(mmd2(a, b)));
    }
    Rng rng(99);
    const Tensor a = sample_normal(rng, {200, 10, 2});
    Tensor b = sample_normal(rng, {200, 10, 2});
    for (double& v : b.values()) v += 3.0;
    const double shifted = mmd2(a, b);
    return {worst_same < 0.05 && shifted > 0.5,
            fmt("max |MMD^2| same distribution %.4f over 20 seeds (limit 0.05); N(0,1) vs N(3,1) %.4f (needs > 0.5)",
                worst_same, shifted)};
}

// ---- 5: training signal on a sine

Outcome training_signal() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng data_rng(1);
    const MultivariateSeries s = generate_normal(coupled_sinusoids(1, 2000, 1), data_rng);
    const WindowSet windows = make_windows(normalize(s, fit_normalizer(s)), 30, 10);
    TrainConfig c;
    c.generator_hidden = 32;
    c.generator_depth = 1;
    c.discriminator_hidden = 32;
    c.discriminator_depth = 1;
    c.epochs = 100;
    Rng rng(c.seed);
    const GanModel m = train(windows, c, rng);
    const double first = m.training_log.front().mmd, last = m.training_log.back().mmd;
    const double secs = seconds_since(t0);
    return {last < first && secs < 600.0,
            fmt("MMD^2 epoch 1 %.4f, epoch 100 %.4f; %.0f s (limit 600 s)", first, last, secs)};
}

// ---- shared end-to-end setup for 6, 7, 8

struct EndToEnd {
    MultivariateSeries train;
    MultivariateSeries test;
    std::vector<AttackSpec> attacks;
    RunConfig config;
};

EndToEnd end_to_end_setup() {
    EndToEnd e;
    SynthConfig synth = coupled_sinusoids(2, 3000, 7);
    Rng rng(7);
    const MultivariateSeries all = generate_normal(synth, rng);
    e.train = slice_rows(all, 0, 2000);
    e.attacks = parse_attacks("spike:0:100:20;spike:1:300:20;stuck:0:450:60;stuck:1:650:60;drift:0:850:80");
    e.test = inject_attacks(slice_rows(all, 2000, 3000), e.attacks);

    RunConfig& c = e.config;
    c.window_size = 30;
    c.window_step = 1;
    c.train.latent_dim = 15;
    c.train.generator_hidden = 32;
    c.train.generator_depth = 1;
    c.train.discriminator_hidden = 32;
    c.train.discriminator_depth = 1;
    c.train.batch_size = 8;
    c.train.epochs = 100;
    c.lambda = 0.5;
    c.tau_policy = TauPolicy::sweep;
    c.calibrate = false;
    return e;
}

// Recall at the given labels restricted to the stuck-sensor intervals.
double stuck_recall(const LabelSeq& labels, const std::vector<AttackSpec>& attacks) {
    std::size_t hit = 0, total = 0;
    for (const AttackSpec& a : attacks) {
        if (a.kind != AttackKind::stuck) continue;
        for (std::size_t t = a.start; t < a.start + a.duration; ++t) {
            hit += labels[t];
            ++total;
        }
    }
    return total ? double(hit) / double(total) : 0.0;
}

LabelSeq labels_at(const std::vector<double>& scores, double tau) {
    LabelSeq out(scores.size());
    for (std::size_t t = 0; t < scores.size(); ++t) out[t] = scores[t] > tau;
    return out;
}

struct EndToEndRun {
    EndToEnd setup;
    Checkpoint checkpoint;
    Detection detection;
    double seconds = 0.0;
};

EndToEndRun& end_to_end() {
    static std::optional<EndToEndRun> run;
    if (!run) {
        const auto t0 = std::chrono::steady_clock::now();
        EndToEndRun r;
        r.setup = end_to_end_setup();
        r.checkpoint = fit_detector(r.setup.train, r.setup.config);
        r.detection = detect(r.checkpoint, r.setup.test, r.setup.config);
        r.seconds = seconds_since(t0);
        run = std::move(r);
    }
    return *run;
}

Outcome end_to_end_detection() {
    const EndToEndRun& r = end_to_end();
    const SweepResult& sweep = *r.detection.sweep;
    const SweepRow& best = sweep.rows[sweep.best_f1];
    return {best.recall >= 0.8 && best.f1 >= 0.5 && r.seconds < 900.0,
            fmt("best-F1 tau %.4f: precision %.3f recall %.3f (needs >= 0.8) F1 %.3f (needs >= 0.5); %.0f s (limit 900 s)",
                best.tau, best.precision, best.recall, best.f1, r.seconds)};
}

// ---- 7: inversion of the generator's own windows

Outcome inversion_contract() {
    const GanModel& model = end_to_end().checkpoint.model;
    Rng rng(777);
    const Tensor windows = generate(model, rng, 100);
    const std::vector<Inversion> inv = invert_windows(model, windows, InversionConfig{}, rng);
    std::size_t recovered = 0, restarts = 0, monotone = 0;
    for (const Inversion& i : inv) {
        if (i.error < 0.05) ++recovered;
        for (std::size_t k = 0; k < i.restart_final_errors.size(); ++k) {
            ++restarts;
            if (i.restart_final_errors[k] <= i.restart_initial_errors[k]) ++monotone;
        }
    }
    return {recovered >= 95 && monotone == restarts,
            fmt("%zu of 100 windows with cosine Er < 0.05 (needs >= 95); %zu of %zu restarts ended at or below their start",
                recovered, monotone, restarts)};
}

// ---- 8: per-timestep baselines on the stuck intervals

Outcome baseline_sanity() {
    const EndToEndRun& r = end_to_end();
    const LabelSeq& truth = *r.setup.test.labels;
    const std::vector<double> grid = quantile_grid();
    const double ours = stuck_recall(r.detection.labels.labels, r.setup.attacks);

    auto baseline_recall = [&](BaselineMethod method, std::size_t k) {
        const BaselineScore s = run_baseline(method, r.setup.train, r.setup.test, k);
        const SweepResult sweep = sweep_tau(s.scores, truth, grid);
        return stuck_recall(labels_at(s.scores, sweep.rows[sweep.best_f1].tau), r.setup.attacks);
    };
    const double pca = baseline_recall(BaselineMethod::pca, 1);
    const double knn = baseline_recall(BaselineMethod::knn, 5);
    return {pca < ours && knn < ours,
            fmt("stuck-interval recall at best-F1 tau: detector %.3f, PCA(k=1) %.3f, KNN(k=5) %.3f", ours, pca, knn)};
}

// ---- 9: determinism and persistence

Outcome determinism() {
    EndToEnd e = end_to_end_setup();
    e.config.window_step = 10;
    e.config.train.epochs = 10;
    const fs::path dir = fs::temp_directory_path() / "tsad_acceptance";
    fs::create_directories(dir);

    auto run_once = [&](const fs::path& scores, const fs::path& checkpoint) {
        const Checkpoint ck = fit_detector(e.train, e.config);
        const Detection d = detect(ck, e.test, e.config);
        save_scores_csv(scores, d.scores, d.labels, e.test.labels);
        save_checkpoint(checkpoint, ck);
        return d;
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    };
    const Detection first = run_once(dir / "a.csv", dir / "a.ckpt");
    run_once(dir / "b.csv", dir / "b.ckpt");
    const bool same_csv = slurp(dir / "a.csv") == slurp(dir / "b.csv") && !slurp(dir / "a.csv").empty();

    const Checkpoint loaded = load_checkpoint(dir / "a.ckpt");
    const Detection again = detect(loaded, e.test, loaded.config);
    const bool same_scores = again.scores.drs == first.scores.drs &&
                             again.scores.residual_part == first.scores.residual_part &&
                             again.scores.discrimination_part == first.scores.discrimination_part;
    fs::remove_all(dir);
    return {same_csv && same_scores,
            fmt("score CSVs of two seeded runs %s; scores after checkpoint reload %s",
                same_csv ? "byte-identical" : "DIFFER", same_scores ? "bit-identical" : "DIFFER")};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient correctness", gradient_check},
        {"remap oracle", remap_oracle},
        {"metrics oracle", metrics_oracle},
        {"MMD calibration", mmd_calibration},
        {"training signal", training_signal},
        {"end-to-end synthetic detection", end_to_end_detection},
        {"inversion contract", inversion_contract},
        {"baseline sanity", baseline_sanity},
        {"determinism and persistence", determinism},
    };
    std::set<std::size_t> only;
    for (int i = 1; i < argc; ++i) only.insert(std::strtoul(argv[i], nullptr, 10));

    std::size_t failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (!only.empty() && !only.count(k + 1)) continue;
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k + 1 << " (" << criteria[k].first << "): " << o.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
