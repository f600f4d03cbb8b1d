#include "tsad/metrics.hpp"

#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace tsad {

ConfusionCounts confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                          const std::vector<bool>* evaluated) {
    if (predicted.size() != truth.size()) {
        throw std::invalid_argument("confusion: " + std::to_string(predicted.size()) + " predictions vs " +
                                    std::to_string(truth.size()) + " truth labels");
    }
    if (evaluated && evaluated->size() != truth.size()) throw std::invalid_argument("confusion: mask length differs");
    ConfusionCounts c;
    for (std::size_t t = 0; t < truth.size(); ++t) {
        if (evaluated && !(*evaluated)[t]) continue;
        const bool p = predicted[t] != 0;
        const bool a = truth[t] != 0;
        if (p && a) ++c.tp;
        else if (p) ++c.fp;
        else if (a) ++c.fn;
        else ++c.tn;
    }
    return c;
}

ConfusionCounts confusion(const LabelVector& predicted, std::span<const std::uint8_t> truth) {
    std::vector<bool> covered(predicted.uncovered.size());
    for (std::size_t t = 0; t < covered.size(); ++t) covered[t] = !predicted.uncovered[t];
    return confusion(predicted.labels, truth, &covered);
}

namespace {

Ratio ratio(std::size_t num, std::size_t den) {
    if (den == 0) return {0.0, true};
    return {static_cast<double>(num) / static_cast<double>(den), false};
}

} // namespace

Ratio precision(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fp); }

Ratio recall(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fn); }

Ratio f1(const ConfusionCounts& c) {
    const Ratio p = precision(c);
    const Ratio r = recall(c);
    if (p.value + r.value == 0.0) return {0.0, true};
    return {2.0 * p.value * r.value / (p.value + r.value), p.degenerate || r.degenerate};
}

std::vector<double> quantile_grid(std::size_t steps) {
    if (steps == 0) throw std::invalid_argument("quantile grid needs at least one step");
    std::vector<double> grid(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) grid[i] = static_cast<double>(i) / static_cast<double>(steps);
    return grid;
}

SweepResult sweep_tau(std::span<const double> scores, std::span<const std::uint8_t> truth,
                      std::span<const double> grid, const std::vector<bool>* evaluated) {
    if (grid.empty()) throw std::invalid_argument("sweep: empty threshold grid");
    if (scores.size() != truth.size()) throw std::invalid_argument("sweep: score and truth lengths differ");
    std::vector<double> pool;
    for (std::size_t t = 0; t < scores.size(); ++t) {
        if (!evaluated || (*evaluated)[t]) pool.push_back(scores[t]);
    }
    if (pool.empty()) throw std::invalid_argument("sweep: no evaluated timesteps");

    SweepResult out;
    LabelSeq predicted(scores.size());
    for (double q : grid) {
        SweepRow row;
        row.quantile = q;
        row.tau = quantile(pool, q);
        for (std::size_t t = 0; t < scores.size(); ++t) predicted[t] = scores[t] > row.tau ? 1 : 0;
        row.counts = confusion(predicted, truth, evaluated);
        row.precision = precision(row.counts).value;
        row.recall = recall(row.counts).value;
        row.f1 = f1(row.counts).value;
        out.rows.push_back(row);
    }
    for (std::size_t i = 1; i < out.rows.size(); ++i) {
        if (out.rows[i].precision > out.rows[out.best_precision].precision) out.best_precision = i;
        if (out.rows[i].recall > out.rows[out.best_recall].recall) out.best_recall = i;
        if (out.rows[i].f1 > out.rows[out.best_f1].f1) out.best_f1 = i;
    }
    return out;
}

SweepResult sweep_tau(const ScoreSeries& scores, std::span<const std::uint8_t> truth, std::span<const double> grid) {
    std::vector<bool> covered(scores.length());
    for (std::size_t t = 0; t < covered.size(); ++t) covered[t] = scores.covered(t);
    return sweep_tau(scores.drs, truth, grid, &covered);
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
    out << "quantile,tau,tp,fp,tn,fn,precision,recall,f1\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const SweepRow& r : sweep.rows) {
        out << r.quantile << ',' << r.tau << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.tn << ','
            << r.counts.fn << ',' << r.precision << ',' << r.recall << ',' << r.f1 << '\n';
    }
}

} // namespace tsad
