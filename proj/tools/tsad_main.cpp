// tsad: train, score and evaluate GAN-based time-series anomaly detectors.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsad/pipeline.hpp"
#include "tsad/score_io.hpp"
#include "tsad/synth.hpp"

using namespace tsad;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kFailure = 1; // data, I/O or training errors
constexpr int kUsage = 2;   // bad arguments or configuration

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Registers `--key value` for every run-config key on a subcommand.
class ConfigOverrides {
public:
    void attach(CLI::App& app) {
        for (const std::string& key : RunConfig::keys()) {
            std::string dashed = key;
            std::replace(dashed.begin(), dashed.end(), '_', '-');
            std::string names = "--" + key;
            if (dashed != key) names += ",--" + dashed;
            app.add_option(names, values_[key], "config key " + key)->group("Config overrides");
        }
    }

    void apply(RunConfig& config) const {
        for (const auto& [key, value] : values_) {
            if (!value.empty()) config.set(key, value);
        }
        config.validate();
    }

private:
    std::map<std::string, std::string> values_;
};

RunConfig base_config(const std::string& path) { return path.empty() ? RunConfig{} : RunConfig::load(path); }

void print_counts(std::ostream& out, const ConfusionCounts& c) {
    out << std::fixed << std::setprecision(4) << "precision " << precision(c).value << "  recall " << recall(c).value
        << "  f1 " << f1(c).value << "  (tp " << c.tp << ", fp " << c.fp << ", tn " << c.tn << ", fn " << c.fn << ")\n";
}

void print_sweep_row(std::ostream& out, const char* name, const SweepRow& row) {
    out << std::left << std::setw(16) << name << std::right << std::fixed << std::setprecision(4) << "tau " << row.tau
        << "  precision " << row.precision << "  recall " << row.recall << "  f1 " << row.f1 << '\n';
}

void print_sweep(std::ostream& out, const SweepResult& s) {
    print_sweep_row(out, "best precision", s.rows[s.best_precision]);
    print_sweep_row(out, "best recall", s.rows[s.best_recall]);
    print_sweep_row(out, "best f1", s.rows[s.best_f1]);
}

void save_sweep(const std::string& path, const SweepResult& s) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_sweep_csv(out, s);
}

std::vector<std::size_t> parse_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            const unsigned long v = std::stoul(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("'" + item + "' in '" + text + "' is not a non-negative integer");
        }
    }
    if (out.empty()) throw UsageError("empty value list");
    return out;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string config, data, out, log;
    bool quiet = false;
    ConfigOverrides overrides;
};

int run_train(const TrainArgs& a) {
    RunConfig config = base_config(a.config);
    a.overrides.apply(config);
    const MultivariateSeries train = load_csv(a.data, config.label_column);
    const Checkpoint cp = fit_detector(train, config, [&](const EpochStats& e, const GanModel&) {
        if (!a.quiet && (e.epoch == 1 || e.epoch % 10 == 0 || e.epoch == config.train.epochs)) {
            std::cerr << "epoch " << e.epoch << "  d_loss " << e.d_loss << "  g_loss " << e.g_loss << "  mmd " << e.mmd
                      << '\n';
        }
    });
    save_checkpoint(a.out, cp);
    const std::string log_path = a.log.empty() ? a.out + ".log.csv" : a.log;
    std::ofstream log(log_path);
    if (!log) throw std::runtime_error("cannot write " + log_path);
    write_training_log(log, cp.model.training_log);

    const EpochStats& last = cp.model.training_log.back();
    std::cout << "trained " << last.epoch << " epochs on " << train.length() << " timesteps, "
              << cp.model.data_dim() << " feature(s): d_loss " << last.d_loss << ", g_loss " << last.g_loss
              << ", mmd " << last.mmd << "\ncheckpoint " << a.out << ", log " << log_path << '\n';
    return kOk;
}

struct DetectArgs {
    std::string model, data, scores, labels;
    ConfigOverrides overrides;
};

int run_detect(const DetectArgs& a) {
    const Checkpoint cp = load_checkpoint(a.model);
    RunConfig config = cp.config;
    a.overrides.apply(config);
    const MultivariateSeries test = load_csv(a.data, config.label_column);
    const Detection d = detect(cp, test, config);
    save_scores_csv(a.scores, d.scores, d.labels, test.labels);
    if (!a.labels.empty()) save_labels_csv(a.labels, d.labels);

    std::size_t covered = 0;
    for (bool u : d.labels.uncovered) covered += u ? 0 : 1;
    const double rate = covered ? static_cast<double>(d.labels.positives()) / static_cast<double>(covered) : 0.0;
    std::cout << d.scores.length() << " timesteps (" << covered << " covered), " << d.labels.positives()
              << " flagged, anomaly rate " << std::fixed << std::setprecision(4) << rate << ", tau " << d.labels.tau
              << " (" << to_string(config.tau_policy) << ")\n";
    if (test.labels) print_counts(std::cout, confusion(d.labels, *test.labels));
    return kOk;
}

struct EvalArgs {
    std::string scores, truth, label_column = "label", mode = "fixed", table;
    double tau = 0.0;
    bool has_tau = false;
    std::size_t grid = 200;
};

int run_eval(const EvalArgs& a) {
    const ScoreFile file = load_scores_csv(a.scores);
    LabelSeq truth;
    if (!a.truth.empty()) {
        const MultivariateSeries t = load_csv(a.truth, a.label_column);
        if (!t.labels) throw UsageError(a.truth + " has no column '" + a.label_column + "'");
        truth = *t.labels;
    } else if (file.truth) {
        truth = *file.truth;
    } else {
        throw UsageError("no ground truth: the scores file has no ground_truth column and --truth was not given");
    }
    if (truth.size() != file.scores.length()) {
        throw UsageError("truth has " + std::to_string(truth.size()) + " labels, scores have " +
                         std::to_string(file.scores.length()) + " timesteps");
    }

    if (a.mode == "sweep") {
        const SweepResult s = sweep_tau(file.scores, truth, quantile_grid(a.grid));
        print_sweep(std::cout, s);
        if (!a.table.empty()) save_sweep(a.table, s);
        return kOk;
    }
    if (a.mode != "fixed") throw UsageError("--mode must be fixed or sweep");
    LabelVector labels;
    if (a.has_tau) {
        labels = threshold_labels(file.scores, a.tau);
    } else {
        labels.labels = file.labels;
        labels.uncovered.resize(file.scores.length());
        for (std::size_t t = 0; t < labels.uncovered.size(); ++t) labels.uncovered[t] = !file.scores.covered(t);
    }
    print_counts(std::cout, confusion(labels, truth));
    return kOk;
}

struct SynthArgs {
    std::string out, train_out, attacks;
    std::size_t variables = 2, length = 1000, train_length = 0;
    std::uint64_t seed = 7;
    double noise = 0.05;
    std::string label_column = "label";
};

int run_synth(const SynthArgs& a) {
    if (a.train_length > 0 && a.train_out.empty()) throw UsageError("--train-length needs --train-out");
    SynthConfig config = coupled_sinusoids(a.variables, a.train_length + a.length, a.seed);
    config.noise_std = a.noise;
    config.validate();
    Rng rng(a.seed);
    const MultivariateSeries all = generate_normal(config, rng);
    const MultivariateSeries test = slice_rows(all, a.train_length, all.length());
    const std::vector<AttackSpec> attacks = a.attacks.empty() ? std::vector<AttackSpec>{} : parse_attacks(a.attacks);
    save_csv(inject_attacks(test, attacks), a.out, a.label_column);
    if (a.train_length > 0) save_csv(slice_rows(all, 0, a.train_length), a.train_out, a.label_column);
    std::cout << "wrote " << a.length << " rows with " << attacks.size() << " attack(s) to " << a.out;
    if (a.train_length > 0) std::cout << ", " << a.train_length << " clean rows to " << a.train_out;
    std::cout << '\n';
    return kOk;
}

struct SweepArgs {
    std::string config, train, test, axis = "window", values = "1,2", out;
    ConfigOverrides overrides;
};

int run_sweep(const SweepArgs& a) {
    RunConfig base = base_config(a.config);
    a.overrides.apply(base);
    if (a.axis != "window" && a.axis != "pc") throw UsageError("--axis must be window or pc");
    const std::vector<std::size_t> values = parse_list(a.values);
    const MultivariateSeries train = load_csv(a.train, base.label_column);
    const MultivariateSeries test = load_csv(a.test, base.label_column);
    if (!test.labels) throw UsageError(a.test + " has no column '" + base.label_column + "'");

    std::ofstream out;
    if (!a.out.empty()) {
        out.open(a.out);
        if (!out) throw std::runtime_error("cannot write " + a.out);
    }
    std::ostream& table = a.out.empty() ? std::cout : out;
    table << a.axis << ",value,precision,recall,f1,tau\n";
    for (std::size_t v : values) {
        RunConfig config = base;
        config.tau_policy = TauPolicy::sweep;
        config.calibrate = false;
        if (a.axis == "window") {
            if (v == 0) throw UsageError("window multiples start at 1");
            config.window_size = 30 * v;
        } else {
            config.pca.mode = PcaChoice::Mode::fixed;
            config.pca.components = v;
        }
        config.validate();
        std::cerr << a.axis << " = " << v << " ...\n";
        const Checkpoint cp = fit_detector(train, config);
        const Detection d = detect(cp, test, config);
        const SweepRow& best = d.sweep->rows[d.sweep->best_f1];
        table << v << ',' << (a.axis == "window" ? config.window_size : v) << ',' << best.precision << ','
              << best.recall << ',' << best.f1 << ',' << best.tau << '\n';
    }
    return kOk;
}

struct BaselineArgs {
    std::string method = "knn", train, test, scores, label_column = "label";
    std::size_t k = 5;
};

int run_baseline_cmd(const BaselineArgs& a) {
    const MultivariateSeries train = load_csv(a.train, a.label_column);
    const MultivariateSeries test = load_csv(a.test, a.label_column);
    const BaselineScore b = run_baseline(parse_baseline_method(a.method), train, test, a.k);

    ScoreSeries scores;
    scores.drs = b.scores;
    scores.residual_part = b.scores;
    scores.discrimination_part.assign(b.scores.size(), 0.0);
    scores.coverage.assign(b.scores.size(), 1);
    scores.lambda = 1.0;
    double tau = quantile(b.scores, 0.99);
    if (test.labels) {
        const SweepResult s = sweep_tau(scores, *test.labels, quantile_grid());
        print_sweep(std::cout, s);
        tau = s.rows[s.best_f1].tau;
    }
    const LabelVector labels = threshold_labels(scores, tau);
    if (!a.scores.empty()) save_scores_csv(a.scores, scores, labels, test.labels);
    std::cout << b.method << " baseline: " << labels.positives() << " of " << labels.labels.size()
              << " timesteps flagged at tau " << tau << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GAN-based anomaly detection for multivariate time series"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "train a detector on normal data");
    train_cmd->add_option("--config", train.config, "key = value configuration file");
    train_cmd->add_option("--data", train.data, "training CSV")->required();
    train_cmd->add_option("--out", train.out, "checkpoint to write")->required();
    train_cmd->add_option("--log", train.log, "training log CSV (default: <out>.log.csv)");
    train_cmd->add_flag("--quiet", train.quiet, "no per-epoch progress");
    train.overrides.attach(*train_cmd);

    DetectArgs det;
    auto* detect_cmd = app.add_subcommand("detect", "score a series with a trained detector");
    detect_cmd->add_option("--model", det.model, "checkpoint")->required();
    detect_cmd->add_option("--data", det.data, "test CSV")->required();
    detect_cmd->add_option("--scores", det.scores, "scores CSV to write")->required();
    detect_cmd->add_option("--labels", det.labels, "labels CSV to write");
    det.overrides.attach(*detect_cmd);

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "precision, recall and F1 of a scores file");
    eval_cmd->add_option("--scores", ev.scores, "scores CSV from detect or baseline")->required();
    eval_cmd->add_option("--truth", ev.truth, "CSV holding the true labels (default: ground_truth column)");
    eval_cmd->add_option("--label-column", ev.label_column, "label column of --truth");
    eval_cmd->add_option("--mode", ev.mode, "fixed or sweep")->check(CLI::IsMember({"fixed", "sweep"}));
    auto* tau_opt = eval_cmd->add_option("--tau", ev.tau, "relabel with this threshold (fixed mode)");
    eval_cmd->add_option("--table", ev.table, "write the full sweep table here");
    eval_cmd->add_option("--grid", ev.grid, "number of quantile steps in a sweep");

    SynthArgs syn;
    auto* synth_cmd = app.add_subcommand("synth", "generate labelled coupled-sinusoid data");
    synth_cmd->add_option("--out", syn.out, "CSV for the (attacked) series")->required();
    synth_cmd->add_option("--variables", syn.variables, "number of variables");
    synth_cmd->add_option("--length", syn.length, "rows in --out");
    synth_cmd->add_option("--train-length", syn.train_length, "clean rows preceding --out, written to --train-out");
    synth_cmd->add_option("--train-out", syn.train_out, "CSV for the clean training part");
    synth_cmd->add_option("--seed", syn.seed, "random seed");
    synth_cmd->add_option("--noise", syn.noise, "noise standard deviation");
    synth_cmd->add_option("--attacks", syn.attacks, "kind:var:start:duration[:magnitude];... (starts relative to --out)");
    synth_cmd->add_option("--label-column", syn.label_column, "name of the label column");

    SweepArgs sw;
    auto* sweep_cmd = app.add_subcommand("sweep", "best-F1 metrics across window sizes or PC counts");
    sweep_cmd->add_option("--config", sw.config, "base configuration file");
    sweep_cmd->add_option("--train", sw.train, "training CSV")->required();
    sweep_cmd->add_option("--test", sw.test, "labelled test CSV")->required();
    sweep_cmd->add_option("--axis", sw.axis, "window (s_w = 30 i) or pc")->check(CLI::IsMember({"window", "pc"}));
    sweep_cmd->add_option("--values", sw.values, "comma-separated axis values");
    sweep_cmd->add_option("--out", sw.out, "results CSV (default: stdout)");
    sw.overrides.attach(*sweep_cmd);

    BaselineArgs bl;
    auto* baseline_cmd = app.add_subcommand("baseline", "per-timestep PCA or KNN detector");
    baseline_cmd->add_option("--method", bl.method, "pca or knn")->check(CLI::IsMember({"pca", "knn"}));
    baseline_cmd->add_option("--train", bl.train, "training CSV")->required();
    baseline_cmd->add_option("--test", bl.test, "test CSV")->required();
    baseline_cmd->add_option("--k", bl.k, "components (pca) or neighbours (knn)");
    baseline_cmd->add_option("--scores", bl.scores, "scores CSV to write");
    baseline_cmd->add_option("--label-column", bl.label_column, "label column name");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*train_cmd) return run_train(train);
        if (*detect_cmd) return run_detect(det);
        if (*eval_cmd) {
            ev.has_tau = tau_opt->count() > 0;
            return run_eval(ev);
        }
        if (*synth_cmd) return run_synth(syn);
        if (*sweep_cmd) return run_sweep(sw);
        if (*baseline_cmd) return run_baseline_cmd(bl);
    } catch (const std::invalid_argument& e) {
        std::cerr << "tsad: error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "tsad: error: " << e.what() << '\n';
        return kFailure;
    }
    return kOk;
}
