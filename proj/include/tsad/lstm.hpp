#pragma once

#include <cstddef>
#include <vector>

#include "tsad/rng.hpp"
#include "tsad/tensor.hpp"

namespace tsad {

enum class HeadActivation { tanh, sigmoid, none };

struct LstmDims {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    std::size_t depth = 1;
    std::size_t output_dim = 0;

    friend bool operator==(const LstmDims&, const LstmDims&) = default;
};

/// One LSTM layer. Rows of W, U and b are split into four gate blocks of
/// `hidden` rows each, in the order input, forget, cell, output.
struct LstmLayerParams {
    Tensor input_weights;     // W [4H x D]
    Tensor recurrent_weights; // U [4H x H]
    Tensor bias;              // b [4H]
};

/// Stacked LSTM followed by an affine head applied at every timestep.
struct LstmStackParams {
    LstmDims dims;
    std::vector<LstmLayerParams> layers;
    Tensor head_weights; // V [out x H]
    Tensor head_bias;    // c [out]

    /// Zero-valued parameters of the given shape.
    static LstmStackParams zeros(const LstmDims& dims);

    /// Every parameter tensor in a fixed order (layer by layer, then the head).
    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;

    std::size_t parameter_count() const;
    /// Throws if any tensor shape disagrees with `dims`.
    void validate() const;
};

/// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, zero biases except the forget gate
/// block which starts at 1.
LstmStackParams init_params(Rng& rng, const LstmDims& dims);

/// Everything the backward pass needs from a forward pass. Per layer and per
/// timestep the [batch x ...] activations are kept.
struct LstmCache {
    std::size_t batch = 0;
    std::size_t steps = 0;
    HeadActivation head = HeadActivation::none;

    struct Layer {
        std::vector<Matrix> inputs; // x_t fed into this layer
        std::vector<Matrix> gates;  // [i f g o] after their nonlinearities
        std::vector<Matrix> cells;  // c_t
        std::vector<Matrix> hidden; // h_t
    };
    std::vector<Layer> layers;
    std::vector<Matrix> outputs; // head outputs after activation
};

struct LstmForward {
    Tensor outputs; // [batch x steps x output_dim]
    LstmCache cache;
};

/// Runs the stack over a [batch x steps x input_dim] tensor from zero initial
/// states; the head is applied at every timestep.
LstmForward lstm_forward(const LstmStackParams& params, const Tensor& inputs, HeadActivation head);

/// Which quantity the gradients handed to lstm_backward are taken with respect to.
enum class GradientAt {
    outputs,        // dL/dy after the head activation
    pre_activation, // dL/da where y = act(a); skips the activation derivative
};

struct LstmGradients {
    LstmStackParams params; // zero-sized if parameter gradients were not requested
    Tensor inputs;          // [batch x steps x input_dim]
};

/// Backpropagation through time over every timestep and layer.
LstmGradients lstm_backward(const LstmStackParams& params, const LstmCache& cache, const Tensor& output_grads,
                            GradientAt at = GradientAt::outputs, bool want_param_grads = true);

} // namespace tsad
