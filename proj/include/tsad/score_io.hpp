#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "tsad/dataset.hpp"
#include "tsad/detector.hpp"

namespace tsad {

/// Rows of `timestep,drs,residual_part,discrimination_part,lc,label` plus a
/// trailing `ground_truth` column when truth is given.
void write_scores_csv(std::ostream& out, const ScoreSeries& scores, const LabelVector& labels,
                      const std::optional<LabelSeq>& truth = std::nullopt);
void save_scores_csv(const std::filesystem::path& path, const ScoreSeries& scores, const LabelVector& labels,
                     const std::optional<LabelSeq>& truth = std::nullopt);

/// Rows of `timestep,label,covered`.
void write_labels_csv(std::ostream& out, const LabelVector& labels);
void save_labels_csv(const std::filesystem::path& path, const LabelVector& labels);

struct ScoreFile {
    ScoreSeries scores;
    LabelSeq labels;
    std::optional<LabelSeq> truth;
};

/// Reads a file written by write_scores_csv. Lambda is not stored and is left
/// at its default.
ScoreFile load_scores_csv(const std::filesystem::path& path);

} // namespace tsad
