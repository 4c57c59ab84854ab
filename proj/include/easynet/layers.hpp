#pragma once

#include "easynet/tensor.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace easynet {

/// A trainable array, its accumulated gradient, and its checkpoint key.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
};

using ParameterList = std::vector<Parameter*>;
using ConstParameterList = std::vector<const Parameter*>;

/// Stride-1 "same" convolution. k = 1 doubles as a per-pixel linear layer.
class Conv2d {
public:
    Conv2d() = default;
    /// He-uniform weights, zero bias.
    Conv2d(const std::string& name, int in_channels, int out_channels, int kernel,
           std::mt19937_64& rng);

    Tensor forward(const Tensor& x) const;
    /// Accumulates parameter gradients; writes the input gradient when grad_x is set.
    void backward(const Tensor& x, const Tensor& grad_y, Tensor* grad_x);

    int in_channels() const { return weight.value.c(); }
    int out_channels() const { return weight.value.n(); }
    int kernel() const { return weight.value.h(); }

    void collect(ParameterList& out) { out.push_back(&weight); out.push_back(&bias); }
    void collect(ConstParameterList& out) const { out.push_back(&weight); out.push_back(&bias); }

    Parameter weight;
    Parameter bias;
};

/// Squeeze-and-excitation: global pool, bottleneck MLP, sigmoid channel scores.
/// forward() rescales the input channels by those scores.
class SqueezeExcitation {
public:
    struct Trace {
        Tensor pooled; // (N, C, 1, 1)
        Tensor hidden; // post-ReLU bottleneck
        Tensor scores; // (N, C, 1, 1), in (0, 1)
    };

    SqueezeExcitation() = default;
    SqueezeExcitation(const std::string& name, int channels, int reduction, std::mt19937_64& rng);

    Tensor scores(const Tensor& x, Trace* trace = nullptr) const;
    Tensor forward(const Tensor& x, Trace& trace) const;
    void backward(const Tensor& x, const Trace& trace, const Tensor& grad_y, Tensor& grad_x);

    int channels() const { return squeeze.in_channels(); }
    int bottleneck() const { return squeeze.out_channels(); }

    void collect(ParameterList& out) { squeeze.collect(out); excite.collect(out); }
    void collect(ConstParameterList& out) const { squeeze.collect(out); excite.collect(out); }

    Conv2d squeeze; // C -> C / reduction
    Conv2d excite;  // C / reduction -> C
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    Adam(ParameterList params, AdamConfig config = {});

    void zero_grad();
    void step(double learning_rate);
    std::int64_t steps() const { return step_; }

private:
    ParameterList params_;
    AdamConfig config_;
    std::vector<std::vector<double>> first_;
    std::vector<std::vector<double>> second_;
    std::int64_t step_ = 0;
};

} // namespace easynet
