#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "tsad/dataset.hpp"
#include "tsad/detector.hpp"

namespace tsad {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Point-wise counts. Positions where `evaluated` is false (if given) are skipped.
ConfusionCounts confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                          const std::vector<bool>* evaluated = nullptr);

/// Counts over the covered timesteps of a label vector.
ConfusionCounts confusion(const LabelVector& predicted, std::span<const std::uint8_t> truth);

/// A ratio whose denominator may vanish; then value is 0 and degenerate is set.
struct Ratio {
    double value = 0.0;
    bool degenerate = false;
};

Ratio precision(const ConfusionCounts& c);
Ratio recall(const ConfusionCounts& c);
Ratio f1(const ConfusionCounts& c);

struct SweepRow {
    double quantile = 0.0;
    double tau = 0.0;
    ConfusionCounts counts;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::size_t best_precision = 0; // row indices; ties go to the earliest row
    std::size_t best_recall = 0;
    std::size_t best_f1 = 0;
};

/// 0, 1/steps, ..., 1.
std::vector<double> quantile_grid(std::size_t steps = 200);

/// Labels score > tau for tau at every quantile of the evaluated scores and
/// tabulates Pre/Rec/F1 against the truth.
SweepResult sweep_tau(std::span<const double> scores, std::span<const std::uint8_t> truth,
                      std::span<const double> grid, const std::vector<bool>* evaluated = nullptr);

/// Sweep over the covered timesteps of a detector run.
SweepResult sweep_tau(const ScoreSeries& scores, std::span<const std::uint8_t> truth, std::span<const double> grid);

/// CSV with header `quantile,tau,tp,fp,tn,fn,precision,recall,f1`.
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

} // namespace tsad
