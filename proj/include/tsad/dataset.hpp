#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsad/tensor.hpp"

namespace tsad {

using LabelSeq = std::vector<std::uint8_t>;

/// M timesteps of T variables, optionally labelled per timestep (1 = anomalous).
struct MultivariateSeries {
    Tensor values; // [M x T]
    std::optional<LabelSeq> labels;
    std::vector<std::string> variable_names;
    std::string timestep_unit = "1 step";

    std::size_t length() const { return values.empty() ? 0 : values.dim(0); }
    std::size_t variables() const { return values.empty() ? 0 : values.dim(1); }

    /// Throws std::invalid_argument on non-finite values or malformed labels.
    void validate() const;
};

/// Rows [begin, end) of a series, labels included.
MultivariateSeries slice_rows(const MultivariateSeries& series, std::size_t begin, std::size_t end);

/// Reads a header-first, comma-separated file. The column named `label_column`
/// (if given and present) becomes the label vector; every other column must
/// hold finite reals. Errors name the offending data row (1-based) and column.
MultivariateSeries load_csv(const std::filesystem::path& path,
                            const std::optional<std::string>& label_column = std::nullopt);

/// Writes values (and labels, as a trailing column named `label_column`) with
/// round-trip precision.
void save_csv(const MultivariateSeries& series, const std::filesystem::path& path,
              const std::string& label_column = "label");

// ---------------------------------------------------------------------------
// Min-max scaling to [-1, 1]

struct NormalizationState {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t variables() const { return min.size(); }
};

NormalizationState fit_normalizer(const MultivariateSeries& series);

/// 2 (x - min) / (max - min) - 1 per variable; constant variables map to 0.
MultivariateSeries normalize(const MultivariateSeries& series, const NormalizationState& state);
MultivariateSeries denormalize(const MultivariateSeries& series, const NormalizationState& state);

// ---------------------------------------------------------------------------
// Principal components

struct PcaState {
    std::vector<double> mean;          // [T]
    Tensor components;                 // [k x T], rows are orthonormal axes
    std::vector<double> variance_ratio; // [k], non-increasing

    std::size_t input_dim() const { return mean.size(); }
    std::size_t output_dim() const { return components.empty() ? 0 : components.dim(0); }
};

/// Explained-variance ratios of every principal axis of the sample covariance,
/// in descending order (length T).
std::vector<double> pca_spectrum(const MultivariateSeries& series);

PcaState fit_pca(const MultivariateSeries& series, std::size_t k);

/// Smallest k whose cumulative variance ratio reaches `target`.
std::size_t components_for_variance(const std::vector<double>& spectrum, double target);

MultivariateSeries project(const MultivariateSeries& series, const PcaState& pca);
MultivariateSeries reconstruct(const MultivariateSeries& projected, const PcaState& pca);

// ---------------------------------------------------------------------------
// Sliding windows

struct WindowSet {
    Tensor windows; // [m x s_w x d]
    std::size_t window_size = 0;
    std::size_t step = 0;
    std::size_t origin_length = 0;
    std::vector<std::size_t> start_indices;

    std::size_t count() const { return start_indices.size(); }
    std::size_t dim() const { return windows.empty() ? 0 : windows.dim(2); }
};

/// Number of complete windows: floor((length - window_size) / step) + 1.
std::size_t window_count(std::size_t length, std::size_t window_size, std::size_t step);

WindowSet make_windows(const MultivariateSeries& series, std::size_t window_size, std::size_t step);

/// Gathers the windows at `indices` into a [indices.size() x s_w x d] batch.
Tensor gather_windows(const Tensor& windows, const std::vector<std::size_t>& indices);

// ---------------------------------------------------------------------------
// Feature pipeline: scale, optionally project onto principal axes and rescale
// the projections back into [-1, 1]. Everything is fitted on training data.

struct PcaChoice {
    enum class Mode { none, fixed, variance } mode = Mode::variance;
    std::size_t components = 0;
    double variance_target = 0.995;
};

struct FeaturePipeline {
    NormalizationState normalization;
    std::optional<PcaState> pca;
    std::optional<NormalizationState> projected_normalization;

    bool fitted() const { return normalization.variables() > 0; }
    std::size_t input_dim() const { return normalization.variables(); }
    std::size_t output_dim() const;
};

FeaturePipeline fit_pipeline(const MultivariateSeries& train, const PcaChoice& choice);
MultivariateSeries apply_pipeline(const MultivariateSeries& series, const FeaturePipeline& pipeline);

} // namespace tsad
