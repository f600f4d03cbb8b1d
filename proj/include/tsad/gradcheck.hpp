#pragma once

#include <functional>

#include "tsad/tensor.hpp"

namespace tsad {

/// Central-difference gradient of a scalar function, one coordinate at a time.
/// `params` is perturbed in place during the sweep and restored afterwards.
/// Throws if f is non-finite at any probe point.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, Tensor& params, double h = 1e-5);

/// |a - b| / max(|a|, |b|), with pairs whose magnitudes are both below
/// `floor` compared absolutely instead.
double relative_error(double a, double b, double floor = 1e-8);

} // namespace tsad
