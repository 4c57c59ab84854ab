#pragma once

#include "easynet/tensor.hpp"

#include <span>

// Straight-line serial versions of kernels.hpp. Slow and obvious on purpose;
// they are the oracle for the parallel kernels.
namespace easynet::kernels::reference {

void conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias, Tensor& y);
void conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_y,
                     Tensor* grad_x, Tensor& grad_weight, Tensor& grad_bias);

void maxpool2_forward(const Tensor& x, Tensor& y);
void maxpool2_backward(const Tensor& x, const Tensor& grad_y, Tensor& grad_x);

void upsample_nearest2_forward(const Tensor& x, Tensor& y);
void upsample_nearest2_backward(const Tensor& grad_y, Tensor& grad_x);

void upsample_bilinear_forward(const Tensor& x, int out_h, int out_w, Tensor& y);
void upsample_bilinear_backward(const Tensor& grad_y, Tensor& grad_x);

void separable_filter(std::span<const double> in, int h, int w, std::span<const double> taps,
                      std::span<double> out);
void separable_filter_adjoint(std::span<const double> in, int h, int w,
                              std::span<const double> taps, std::span<double> out);

} // namespace easynet::kernels::reference
