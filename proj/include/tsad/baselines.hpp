#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tsad/dataset.hpp"

namespace tsad {

/// Per-timestep anomaly scores from a non-temporal detector.
struct BaselineScore {
    std::vector<double> scores; // [N]
    std::string method;
};

/// Squared reconstruction error of every test row under the k-component PCA
/// fitted on the training rows.
BaselineScore pca_detector(const MultivariateSeries& train, const MultivariateSeries& test, std::size_t k);

/// Mean Euclidean distance from every test row to its k nearest training rows.
BaselineScore knn_detector(const MultivariateSeries& train, const MultivariateSeries& test, std::size_t k);

} // namespace tsad
