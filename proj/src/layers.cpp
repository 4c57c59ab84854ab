#include "easynet/layers.hpp"

#include "easynet/error.hpp"
#include "easynet/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace easynet {

Conv2d::Conv2d(const std::string& name, int in_channels, int out_channels, int kernel,
               std::mt19937_64& rng) {
    if (in_channels < 1 || out_channels < 1 || kernel < 1 || kernel % 2 == 0) {
        throw InvalidArgument("Conv2d " + name + ": invalid geometry");
    }
    weight.name = name + ".weight";
    bias.name = name + ".bias";
    weight.value = Tensor({out_channels, in_channels, kernel, kernel});
    weight.grad = Tensor(weight.value.shape());
    bias.value = Tensor({out_channels, 1, 1, 1});
    bias.grad = Tensor(bias.value.shape());

    const double fan_in = static_cast<double>(in_channels) * kernel * kernel;
    const double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (real& v : weight.value.data()) v = static_cast<real>(dist(rng));
}

Tensor Conv2d::forward(const Tensor& x) const {
    Tensor y;
    kernels::conv2d_forward(x, weight.value, bias.value, y);
    return y;
}

void Conv2d::backward(const Tensor& x, const Tensor& grad_y, Tensor* grad_x) {
    kernels::conv2d_backward(x, weight.value, grad_y, grad_x, weight.grad, bias.grad);
}

SqueezeExcitation::SqueezeExcitation(const std::string& name, int channels, int reduction,
                                     std::mt19937_64& rng) {
    if (reduction < 1) throw ConfigError("SE reduction must be >= 1");
    const int mid = std::max(1, channels / reduction);
    squeeze = Conv2d(name + ".squeeze", channels, mid, 1, rng);
    excite = Conv2d(name + ".excite", mid, channels, 1, rng);
}

Tensor SqueezeExcitation::scores(const Tensor& x, Trace* trace) const {
    Trace local;
    Trace& t = trace != nullptr ? *trace : local;
    kernels::global_avg_pool(x, t.pooled);
    t.hidden = squeeze.forward(t.pooled);
    kernels::relu_inplace(t.hidden);
    t.scores = excite.forward(t.hidden);
    kernels::sigmoid_inplace(t.scores);
    return t.scores;
}

Tensor SqueezeExcitation::forward(const Tensor& x, Trace& trace) const {
    scores(x, &trace);
    Tensor y;
    kernels::channel_scale(x, trace.scores, y);
    return y;
}

void SqueezeExcitation::backward(const Tensor& x, const Trace& trace, const Tensor& grad_y,
                                 Tensor& grad_x) {
    kernels::channel_scale(grad_y, trace.scores, grad_x);

    const int planes = x.n() * x.c();
    const std::size_t plane = x.shape().plane();
    Tensor grad_scores(trace.scores.shape());
    for (int p = 0; p < planes; ++p) {
        const real* gy = grad_y.raw() + p * plane;
        const real* in = x.raw() + p * plane;
        double s = 0;
        for (std::size_t i = 0; i < plane; ++i) s += static_cast<double>(gy[i]) * in[i];
        grad_scores[static_cast<std::size_t>(p)] = static_cast<real>(s);
    }
    kernels::sigmoid_backward(trace.scores, grad_scores);
    Tensor grad_hidden;
    excite.backward(trace.hidden, grad_scores, &grad_hidden);
    kernels::relu_backward(trace.hidden, grad_hidden);
    Tensor grad_pooled;
    squeeze.backward(trace.pooled, grad_hidden, &grad_pooled);

    const real inv = real(1) / static_cast<real>(plane);
    for (int p = 0; p < planes; ++p) {
        const real g = grad_pooled[static_cast<std::size_t>(p)] * inv;
        real* gx = grad_x.raw() + p * plane;
        for (std::size_t i = 0; i < plane; ++i) gx[i] += g;
    }
}

Adam::Adam(ParameterList params, AdamConfig config) : params_(std::move(params)), config_(config) {
    first_.reserve(params_.size());
    second_.reserve(params_.size());
    for (const Parameter* p : params_) {
        first_.emplace_back(p->value.numel(), 0.0);
        second_.emplace_back(p->value.numel(), 0.0);
    }
}

void Adam::zero_grad() {
    for (Parameter* p : params_) p->grad.zero();
}

void Adam::step(double learning_rate) {
    ++step_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Parameter& p = *params_[k];
        std::vector<double>& m = first_[k];
        std::vector<double>& v = second_[k];
        real* value = p.value.raw();
        const real* grad = p.grad.raw();
        const std::size_t n = p.value.numel();
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < n; ++i) {
            const double g = grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double update = (m[i] / correction1) / (std::sqrt(v[i] / correction2) + config_.epsilon);
            value[i] = static_cast<real>(value[i] - learning_rate * update);
        }
    }
}

} // namespace easynet
