#include "tsad/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsad {

namespace {

std::size_t sample_count(const Tensor& t) { return t.empty() ? 0 : t.dim(0); }

std::size_t sample_width(const Tensor& t) { return t.empty() ? 0 : t.size() / t.dim(0); }

double squared_distance(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
    const std::size_t width = sample_width(a);
    const double* x = a.data() + i * width;
    const double* y = b.data() + j * width;
    double sum = 0.0;
    for (std::size_t k = 0; k < width; ++k) {
        const double d = x[k] - y[k];
        sum += d * d;
    }
    return sum;
}

void check_samples(const Tensor& a, const Tensor& b) {
    if (sample_count(a) < 2 || sample_count(b) < 2) {
        throw std::invalid_argument("mmd2: each sample needs at least 2 members (got " +
                                    std::to_string(sample_count(a)) + " and " + std::to_string(sample_count(b)) + ")");
    }
    if (sample_width(a) != sample_width(b)) throw std::invalid_argument("mmd2: samples have different shapes");
}

// Sum of K over all ordered pairs i != j within one sample.
double within_sum(const Tensor& a, double gamma) {
    const std::size_t n = sample_count(a);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) sum += 2.0 * std::exp(-gamma * squared_distance(a, i, a, j));
    }
    return sum;
}

} // namespace

double rbf_kernel(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j, double bandwidth) {
    return std::exp(-squared_distance(a, i, b, j) / (2.0 * bandwidth * bandwidth));
}

double median_heuristic_bandwidth(const Tensor& a, const Tensor& b) {
    check_samples(a, b);
    const std::size_t n = sample_count(a);
    const std::size_t m = sample_count(b);
    std::vector<double> distances;
    distances.reserve((n + m) * (n + m - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) distances.push_back(squared_distance(a, i, a, j));
        for (std::size_t j = 0; j < m; ++j) distances.push_back(squared_distance(a, i, b, j));
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) distances.push_back(squared_distance(b, i, b, j));
    }
    const auto mid = distances.begin() + static_cast<std::ptrdiff_t>(distances.size() / 2);
    std::nth_element(distances.begin(), mid, distances.end());
    const double median = std::sqrt(*mid);
    return median > 0.0 ? median : 1.0;
}

double mmd2(const Tensor& a, const Tensor& b, double bandwidth) {
    check_samples(a, b);
    if (!(bandwidth > 0.0)) throw std::invalid_argument("mmd2: bandwidth must be positive");
    const double gamma = 1.0 / (2.0 * bandwidth * bandwidth);
    const auto n = static_cast<double>(sample_count(a));
    const auto m = static_cast<double>(sample_count(b));

    double cross = 0.0;
    for (std::size_t i = 0; i < sample_count(a); ++i) {
        for (std::size_t j = 0; j < sample_count(b); ++j) cross += std::exp(-gamma * squared_distance(a, i, b, j));
    }
    return within_sum(a, gamma) / (n * (n - 1.0)) - 2.0 * cross / (n * m) + within_sum(b, gamma) / (m * (m - 1.0));
}

double mmd2(const Tensor& a, const Tensor& b) { return mmd2(a, b, median_heuristic_bandwidth(a, b)); }

} // namespace tsad
