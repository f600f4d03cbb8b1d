#include "tsad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tsad {

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, Tensor& params, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
    Tensor grad(params.shape());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double original = params[i];
        params[i] = original + h;
        const double plus = f(params);
        params[i] = original - h;
        const double minus = f(params);
        params[i] = original;
        if (!std::isfinite(plus) || !std::isfinite(minus)) {
            throw std::runtime_error("finite_diff_grad: non-finite function value at coordinate " +
                                     std::to_string(i));
        }
        grad[i] = (plus - minus) / (2.0 * h);
    }
    return grad;
}

double relative_error(double a, double b, double floor) {
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale < floor) return std::abs(a - b);
    return std::abs(a - b) / scale;
}

} // namespace tsad
