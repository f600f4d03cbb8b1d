#include "tsad/lstm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tsad {

namespace {

using Eigen::Index;
using StridedMap = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;

Index idx(std::size_t v) { return static_cast<Index>(v); }

std::size_t layer_input_dim(const LstmDims& dims, std::size_t layer) {
    return layer == 0 ? dims.input_dim : dims.hidden;
}

void require_shape(const Tensor& t, const Shape& expected, const std::string& name) {
    if (t.shape() != expected) {
        throw std::invalid_argument("LSTM parameter " + name + " has shape " + shape_string(t.shape()) +
                                    ", expected " + shape_string(expected));
    }
}

// Timestep t of a [batch x steps x dim] tensor as a [batch x dim] view.
StridedMap timestep(const Tensor& seq, std::size_t t) {
    const std::size_t steps = seq.dim(1);
    const std::size_t dim = seq.dim(2);
    return StridedMap(seq.data() + t * dim, idx(seq.dim(0)), idx(dim), Eigen::OuterStride<>(idx(steps * dim)));
}

void scatter_timestep(Tensor& seq, std::size_t t, const Matrix& values) {
    const std::size_t steps = seq.dim(1);
    const std::size_t dim = seq.dim(2);
    for (Index b = 0; b < values.rows(); ++b) {
        double* dst = seq.data() + (static_cast<std::size_t>(b) * steps + t) * dim;
        for (Index k = 0; k < values.cols(); ++k) dst[k] = values(b, k);
    }
}

double stable_sigmoid(double x) { return sigmoid(x); }

// a * m for row-major m [a.cols() x cols], batch-size independent (see matmul_rows).
Matrix times(const Matrix& a, const double* m, Index cols) {
    Matrix out(a.rows(), cols);
    matmul_rows(a.data(), static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(a.cols()), m,
                static_cast<std::size_t>(cols), out.data());
    return out;
}

void add_times(Matrix& out, const Matrix& a, const double* m) {
    matmul_rows(a.data(), static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(a.cols()), m,
                static_cast<std::size_t>(out.cols()), out.data(), true);
}

} // namespace

LstmStackParams LstmStackParams::zeros(const LstmDims& dims) {
    if (dims.input_dim == 0 || dims.hidden == 0 || dims.depth == 0 || dims.output_dim == 0) {
        throw std::invalid_argument("LSTM dimensions must all be positive");
    }
    LstmStackParams p;
    p.dims = dims;
    const std::size_t gates = 4 * dims.hidden;
    for (std::size_t l = 0; l < dims.depth; ++l) {
        p.layers.push_back({Tensor({gates, layer_input_dim(dims, l)}), Tensor({gates, dims.hidden}), Tensor({gates})});
    }
    p.head_weights = Tensor({dims.output_dim, dims.hidden});
    p.head_bias = Tensor({dims.output_dim});
    return p;
}

std::vector<Tensor*> LstmStackParams::tensors() {
    std::vector<Tensor*> out;
    for (auto& layer : layers) {
        out.push_back(&layer.input_weights);
        out.push_back(&layer.recurrent_weights);
        out.push_back(&layer.bias);
    }
    out.push_back(&head_weights);
    out.push_back(&head_bias);
    return out;
}

std::vector<const Tensor*> LstmStackParams::tensors() const {
    std::vector<const Tensor*> out;
    for (const auto& layer : layers) {
        out.push_back(&layer.input_weights);
        out.push_back(&layer.recurrent_weights);
        out.push_back(&layer.bias);
    }
    out.push_back(&head_weights);
    out.push_back(&head_bias);
    return out;
}

std::size_t LstmStackParams::parameter_count() const {
    std::size_t n = 0;
    for (const Tensor* t : tensors()) n += t->size();
    return n;
}

void LstmStackParams::validate() const {
    if (layers.size() != dims.depth) {
        throw std::invalid_argument("LSTM has " + std::to_string(layers.size()) + " layers, dims say " +
                                    std::to_string(dims.depth));
    }
    const std::size_t gates = 4 * dims.hidden;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string prefix = "layer " + std::to_string(l) + " ";
        require_shape(layers[l].input_weights, {gates, layer_input_dim(dims, l)}, prefix + "W");
        require_shape(layers[l].recurrent_weights, {gates, dims.hidden}, prefix + "U");
        require_shape(layers[l].bias, {gates}, prefix + "b");
    }
    require_shape(head_weights, {dims.output_dim, dims.hidden}, "head V");
    require_shape(head_bias, {dims.output_dim}, "head c");
}

LstmStackParams init_params(Rng& rng, const LstmDims& dims) {
    LstmStackParams p = LstmStackParams::zeros(dims);
    const double r = 1.0 / std::sqrt(static_cast<double>(dims.hidden));
    for (auto& layer : p.layers) {
        for (double& w : layer.input_weights.values()) w = rng.uniform(-r, r);
        for (double& w : layer.recurrent_weights.values()) w = rng.uniform(-r, r);
        for (std::size_t k = dims.hidden; k < 2 * dims.hidden; ++k) layer.bias[k] = 1.0;
    }
    for (double& w : p.head_weights.values()) w = rng.uniform(-r, r);
    return p;
}

LstmForward lstm_forward(const LstmStackParams& params, const Tensor& inputs, HeadActivation head) {
    params.validate();
    const LstmDims& dims = params.dims;
    if (inputs.rank() != 3 || inputs.dim(2) != dims.input_dim) {
        throw std::invalid_argument("lstm_forward: inputs have shape " + shape_string(inputs.shape()) +
                                    ", expected [batch x steps x " + std::to_string(dims.input_dim) + "]");
    }
    const std::size_t batch = inputs.dim(0);
    const std::size_t steps = inputs.dim(1);
    const Index H = idx(dims.hidden);

    LstmForward result;
    LstmCache& cache = result.cache;
    cache.batch = batch;
    cache.steps = steps;
    cache.head = head;
    cache.layers.resize(dims.depth);

    for (std::size_t l = 0; l < dims.depth; ++l) {
        const LstmLayerParams& lp = params.layers[l];
        const Matrix Wt = lp.input_weights.as_matrix().transpose();
        const Matrix Ut = lp.recurrent_weights.as_matrix().transpose();
        const Eigen::Map<const Eigen::RowVectorXd> b(lp.bias.data(), 4 * H);
        LstmCache::Layer& layer = cache.layers[l];
        layer.inputs.resize(steps);
        layer.gates.resize(steps);
        layer.cells.resize(steps);
        layer.hidden.resize(steps);

        for (std::size_t t = 0; t < steps; ++t) {
            layer.inputs[t] = l == 0 ? Matrix(timestep(inputs, t)) : cache.layers[l - 1].hidden[t];
            Matrix a = times(layer.inputs[t], Wt.data(), 4 * H);
            if (t > 0) add_times(a, layer.hidden[t - 1], Ut.data());
            a.rowwise() += b;

            a.leftCols(2 * H) = a.leftCols(2 * H).unaryExpr(&stable_sigmoid);
            a.middleCols(2 * H, H) = a.middleCols(2 * H, H).array().tanh();
            a.rightCols(H) = a.rightCols(H).unaryExpr(&stable_sigmoid);

            Matrix c = a.leftCols(H).cwiseProduct(a.middleCols(2 * H, H));
            if (t > 0) c.array() += a.middleCols(H, H).array() * layer.cells[t - 1].array();
            layer.hidden[t] = a.rightCols(H).cwiseProduct(Matrix(c.array().tanh()));
            layer.cells[t] = std::move(c);
            layer.gates[t] = std::move(a);
        }
    }

    const Matrix Vt = params.head_weights.as_matrix().transpose();
    const Eigen::Map<const Eigen::RowVectorXd> c(params.head_bias.data(), idx(dims.output_dim));
    result.outputs = Tensor({batch, steps, dims.output_dim});
    cache.outputs.resize(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        Matrix y = times(cache.layers.back().hidden[t], Vt.data(), idx(dims.output_dim));
        y.rowwise() += c;
        if (head == HeadActivation::tanh) {
            y = y.array().tanh();
        } else if (head == HeadActivation::sigmoid) {
            y = y.unaryExpr(&stable_sigmoid);
        }
        scatter_timestep(result.outputs, t, y);
        cache.outputs[t] = std::move(y);
    }
    return result;
}

LstmGradients lstm_backward(const LstmStackParams& params, const LstmCache& cache, const Tensor& output_grads,
                            GradientAt at, bool want_param_grads) {
    params.validate();
    const LstmDims& dims = params.dims;
    const std::size_t batch = cache.batch;
    const std::size_t steps = cache.steps;
    if (cache.layers.size() != dims.depth || cache.outputs.size() != steps) {
        throw std::invalid_argument("lstm_backward: cache does not match the parameter stack");
    }
    if (output_grads.shape() != Shape{batch, steps, dims.output_dim}) {
        throw std::invalid_argument("lstm_backward: output gradients have shape " +
                                    shape_string(output_grads.shape()) + ", expected " +
                                    shape_string({batch, steps, dims.output_dim}));
    }
    const Index H = idx(dims.hidden);
    const Index B = idx(batch);

    LstmGradients grads;
    if (want_param_grads) grads.params = LstmStackParams::zeros(dims);

    // Head.
    std::vector<Matrix> dh_from_above(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        Matrix da = timestep(output_grads, t);
        if (at == GradientAt::outputs) {
            const Matrix& y = cache.outputs[t];
            if (cache.head == HeadActivation::tanh) {
                da.array() *= 1.0 - y.array().square();
            } else if (cache.head == HeadActivation::sigmoid) {
                da.array() *= y.array() * (1.0 - y.array());
            }
        }
        if (want_param_grads) {
            grads.params.head_weights.as_matrix().noalias() += da.transpose() * cache.layers.back().hidden[t];
            Eigen::Map<Eigen::RowVectorXd>(grads.params.head_bias.data(), idx(dims.output_dim)) += da.colwise().sum();
        }
        dh_from_above[t] = times(da, params.head_weights.data(), H);
    }

    // Layers, top to bottom, each swept backwards in time.
    for (std::size_t l = dims.depth; l-- > 0;) {
        const LstmCache::Layer& layer = cache.layers[l];
        const Tensor& W = params.layers[l].input_weights;
        const Tensor& U = params.layers[l].recurrent_weights;

        std::vector<Matrix> dx(steps);
        Matrix dh_next = Matrix::Zero(B, H);
        Matrix dc_next = Matrix::Zero(B, H);
        Matrix da(B, 4 * H);

        for (std::size_t t = steps; t-- > 0;) {
            const Matrix& g = layer.gates[t];
            const auto i_gate = g.leftCols(H).array();
            const auto f_gate = g.middleCols(H, H).array();
            const auto c_gate = g.middleCols(2 * H, H).array();
            const auto o_gate = g.rightCols(H).array();
            const Eigen::ArrayXXd tanh_c = layer.cells[t].array().tanh();

            const Eigen::ArrayXXd dh = (dh_from_above[t] + dh_next).array();
            const Eigen::ArrayXXd dc = dc_next.array() + dh * o_gate * (1.0 - tanh_c.square());

            da.leftCols(H).array() = dc * c_gate * i_gate * (1.0 - i_gate);
            if (t > 0) {
                da.middleCols(H, H).array() = dc * layer.cells[t - 1].array() * f_gate * (1.0 - f_gate);
            } else {
                da.middleCols(H, H).setZero();
            }
            da.middleCols(2 * H, H).array() = dc * i_gate * (1.0 - c_gate.square());
            da.rightCols(H).array() = dh * tanh_c * o_gate * (1.0 - o_gate);

            dc_next = (dc * f_gate).matrix();
            dh_next = times(da, U.data(), H);
            dx[t] = times(da, W.data(), idx(W.dim(1)));

            if (want_param_grads) {
                LstmLayerParams& gp = grads.params.layers[l];
                gp.input_weights.as_matrix().noalias() += da.transpose() * layer.inputs[t];
                if (t > 0) gp.recurrent_weights.as_matrix().noalias() += da.transpose() * layer.hidden[t - 1];
                Eigen::Map<Eigen::RowVectorXd>(gp.bias.data(), 4 * H) += da.colwise().sum();
            }
        }
        dh_from_above = std::move(dx);
    }

    grads.inputs = Tensor({batch, steps, dims.input_dim});
    for (std::size_t t = 0; t < steps; ++t) scatter_timestep(grads.inputs, t, dh_from_above[t]);
    return grads;
}

} // namespace tsad
