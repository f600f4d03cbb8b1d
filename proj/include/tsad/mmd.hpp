#pragma once

#include "tsad/tensor.hpp"

namespace tsad {

// Samples are tensors whose first axis indexes the sample; every sample is
// flattened to one vector before distances are taken.

/// exp(-||x - y||^2 / (2 bandwidth^2)) between sample i of a and sample j of b.
double rbf_kernel(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j, double bandwidth);

/// Median Euclidean distance over all distinct pairs of the pooled sample
/// a ∪ b. Falls back to 1 when the median is zero.
double median_heuristic_bandwidth(const Tensor& a, const Tensor& b);

/// Unbiased MMD^2 estimate with a Gaussian RBF kernel:
///   mean_{i!=j} K(a_i, a_j) - 2 mean_{i,j} K(a_i, b_j) + mean_{i!=j} K(b_i, b_j).
/// Needs at least two samples on each side.
double mmd2(const Tensor& a, const Tensor& b, double bandwidth);

/// Same estimator with the median-heuristic bandwidth.
double mmd2(const Tensor& a, const Tensor& b);

} // namespace tsad
