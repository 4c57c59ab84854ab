#pragma once

#include "easynet/tensor.hpp"

#include <span>
#include <vector>

// Data-parallel building blocks for the networks and losses. Every kernel
// here has a serial twin in reference_kernels.hpp with the same signature;
// the tests hold the two to agreement and bench/ compares their speed.
//
// Convolutions are stride 1 with "same" zero padding and odd square kernels.
// Weights are laid out (out_channels, in_channels, k, k); biases (out_channels, 1, 1, 1).
namespace easynet::kernels {

void conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias, Tensor& y);

/// Accumulates into grad_weight/grad_bias; overwrites *grad_x when non-null.
void conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_y,
                     Tensor* grad_x, Tensor& grad_weight, Tensor& grad_bias);

void relu_inplace(Tensor& t);
/// grad *= (activated > 0)
void relu_backward(const Tensor& activated, Tensor& grad);

void sigmoid_inplace(Tensor& t);
/// grad *= s (1 - s)
void sigmoid_backward(const Tensor& activated, Tensor& grad);

/// 2×2 max pooling, stride 2. Ties resolve to the first element in row-major order.
void maxpool2_forward(const Tensor& x, Tensor& y);
void maxpool2_backward(const Tensor& x, const Tensor& grad_y, Tensor& grad_x);

void upsample_nearest2_forward(const Tensor& x, Tensor& y);
void upsample_nearest2_backward(const Tensor& grad_y, Tensor& grad_x);

/// Bilinear resize with half-pixel centers (align_corners = false).
void upsample_bilinear_forward(const Tensor& x, int out_h, int out_w, Tensor& y);
/// grad_x must already carry the input shape.
void upsample_bilinear_backward(const Tensor& grad_y, Tensor& grad_x);

/// y[n,c] = x[n,c] * scale[n,c] for every pixel; scale is (N, C, 1, 1).
void channel_scale(const Tensor& x, const Tensor& scale, Tensor& y);

/// Global average pool to (N, C, 1, 1).
void global_avg_pool(const Tensor& x, Tensor& y);

// Single-plane filters in double precision with edge-replicated borders.

/// Separable correlation with a symmetric 1-D kernel (odd length).
void separable_filter(std::span<const double> in, int h, int w, std::span<const double> taps,
                      std::span<double> out);
/// Adjoint of separable_filter: out = Fᵀ in.
void separable_filter_adjoint(std::span<const double> in, int h, int w,
                              std::span<const double> taps, std::span<double> out);

/// Normalized 1-D Gaussian of odd length `size`.
std::vector<double> gaussian_taps(int size, double sigma);

/// Per-axis bilinear sampling plan shared by both implementations.
struct LinearAxis {
    std::vector<int> i0;
    std::vector<int> i1;
    std::vector<double> w1; // weight of i1; i0 gets 1 - w1
};
LinearAxis make_linear_axis(int in_size, int out_size);

} // namespace easynet::kernels
