#include "tsad/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsad {

namespace {

void check_dims(const MultivariateSeries& train, const MultivariateSeries& test) {
    if (train.variables() != test.variables()) {
        throw std::invalid_argument("baseline: training data has " + std::to_string(train.variables()) +
                                    " variables, test data " + std::to_string(test.variables()));
    }
}

} // namespace

BaselineScore pca_detector(const MultivariateSeries& train, const MultivariateSeries& test, std::size_t k) {
    check_dims(train, test);
    const PcaState pca = fit_pca(train, k);
    const MultivariateSeries back = reconstruct(project(test, pca), pca);
    BaselineScore out{std::vector<double>(test.length(), 0.0), "pca"};
    for (std::size_t t = 0; t < test.length(); ++t) {
        for (std::size_t j = 0; j < test.variables(); ++j) {
            const double d = test.values(t, j) - back.values(t, j);
            out.scores[t] += d * d;
        }
    }
    return out;
}

BaselineScore knn_detector(const MultivariateSeries& train, const MultivariateSeries& test, std::size_t k) {
    check_dims(train, test);
    const std::size_t m = train.length();
    if (k == 0 || k > m) {
        throw std::invalid_argument("knn: k = " + std::to_string(k) + " must lie in [1, " + std::to_string(m) + "]");
    }
    const std::size_t dim = test.variables();
    BaselineScore out{std::vector<double>(test.length(), 0.0), "knn"};
    std::vector<double> dist(m);
    for (std::size_t t = 0; t < test.length(); ++t) {
        const double* x = test.values.data() + t * dim;
        for (std::size_t i = 0; i < m; ++i) {
            const double* y = train.values.data() + i * dim;
            double sum = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double d = x[j] - y[j];
                sum += d * d;
            }
            dist[i] = std::sqrt(sum);
        }
        std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
        // The k smallest now sit in front of position k - 1; sort them so the sum has a fixed order.
        std::sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k));
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) sum += dist[i];
        out.scores[t] = sum / static_cast<double>(k);
    }
    return out;
}

} // namespace tsad
