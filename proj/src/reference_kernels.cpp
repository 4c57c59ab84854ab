#include "easynet/reference_kernels.hpp"

#include "easynet/error.hpp"
#include "easynet/kernels.hpp"

#include <algorithm>

namespace easynet::kernels::reference {

namespace {
int clamp_index(int i, int size) { return std::clamp(i, 0, size - 1); }
} // namespace

void conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias, Tensor& y) {
    const int k = weight.h();
    const int pad = k / 2;
    if (weight.c() != x.c()) throw InvalidArgument("reference conv2d: channel mismatch");
    y.reset({x.n(), weight.n(), x.h(), x.w()});
    for (int n = 0; n < x.n(); ++n)
        for (int o = 0; o < weight.n(); ++o)
            for (int i = 0; i < x.h(); ++i)
                for (int j = 0; j < x.w(); ++j) {
                    double s = bias[static_cast<std::size_t>(o)];
                    for (int c = 0; c < x.c(); ++c)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                const int yy = i + ky - pad;
                                const int xx = j + kx - pad;
                                if (yy < 0 || yy >= x.h() || xx < 0 || xx >= x.w()) continue;
                                s += static_cast<double>(weight.at(o, c, ky, kx)) * x.at(n, c, yy, xx);
                            }
                    y.at(n, o, i, j) = static_cast<real>(s);
                }
}

void conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_y,
                     Tensor* grad_x, Tensor& grad_weight, Tensor& grad_bias) {
    const int k = weight.h();
    const int pad = k / 2;
    if (grad_x != nullptr) grad_x->reset(x.shape());
    for (int n = 0; n < x.n(); ++n)
        for (int o = 0; o < weight.n(); ++o)
            for (int i = 0; i < x.h(); ++i)
                for (int j = 0; j < x.w(); ++j) {
                    const real g = grad_y.at(n, o, i, j);
                    grad_bias[static_cast<std::size_t>(o)] += g;
                    for (int c = 0; c < x.c(); ++c)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                const int yy = i + ky - pad;
                                const int xx = j + kx - pad;
                                if (yy < 0 || yy >= x.h() || xx < 0 || xx >= x.w()) continue;
                                grad_weight.at(o, c, ky, kx) += g * x.at(n, c, yy, xx);
                                if (grad_x != nullptr) {
                                    grad_x->at(n, c, yy, xx) += g * weight.at(o, c, ky, kx);
                                }
                            }
                }
}

void maxpool2_forward(const Tensor& x, Tensor& y) {
    y.reset({x.n(), x.c(), x.h() / 2, x.w() / 2});
    for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < x.c(); ++c)
            for (int i = 0; i < y.h(); ++i)
                for (int j = 0; j < y.w(); ++j) {
                    real m = x.at(n, c, 2 * i, 2 * j);
                    for (int t = 1; t < 4; ++t) m = std::max(m, x.at(n, c, 2 * i + t / 2, 2 * j + t % 2));
                    y.at(n, c, i, j) = m;
                }
}

void maxpool2_backward(const Tensor& x, const Tensor& grad_y, Tensor& grad_x) {
    grad_x.reset(x.shape());
    for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < x.c(); ++c)
            for (int i = 0; i < grad_y.h(); ++i)
                for (int j = 0; j < grad_y.w(); ++j) {
                    int best = 0;
                    for (int t = 1; t < 4; ++t) {
                        if (x.at(n, c, 2 * i + t / 2, 2 * j + t % 2) >
                            x.at(n, c, 2 * i + best / 2, 2 * j + best % 2)) {
                            best = t;
                        }
                    }
                    grad_x.at(n, c, 2 * i + best / 2, 2 * j + best % 2) += grad_y.at(n, c, i, j);
                }
}

void upsample_nearest2_forward(const Tensor& x, Tensor& y) {
    y.reset({x.n(), x.c(), 2 * x.h(), 2 * x.w()});
    for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < x.c(); ++c)
            for (int i = 0; i < y.h(); ++i)
                for (int j = 0; j < y.w(); ++j) y.at(n, c, i, j) = x.at(n, c, i / 2, j / 2);
}

void upsample_nearest2_backward(const Tensor& grad_y, Tensor& grad_x) {
    grad_x.reset({grad_y.n(), grad_y.c(), grad_y.h() / 2, grad_y.w() / 2});
    for (int n = 0; n < grad_y.n(); ++n)
        for (int c = 0; c < grad_y.c(); ++c)
            for (int i = 0; i < grad_y.h(); ++i)
                for (int j = 0; j < grad_y.w(); ++j) grad_x.at(n, c, i / 2, j / 2) += grad_y.at(n, c, i, j);
}

void upsample_bilinear_forward(const Tensor& x, int out_h, int out_w, Tensor& y) {
    y.reset({x.n(), x.c(), out_h, out_w});
    const LinearAxis ay = make_linear_axis(x.h(), out_h);
    const LinearAxis ax = make_linear_axis(x.w(), out_w);
    for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < x.c(); ++c)
            for (int i = 0; i < out_h; ++i)
                for (int j = 0; j < out_w; ++j) {
                    const double a = ay.w1[i];
                    const double b = ax.w1[j];
                    const double v = (1 - a) * (1 - b) * x.at(n, c, ay.i0[i], ax.i0[j]) +
                                     (1 - a) * b * x.at(n, c, ay.i0[i], ax.i1[j]) +
                                     a * (1 - b) * x.at(n, c, ay.i1[i], ax.i0[j]) +
                                     a * b * x.at(n, c, ay.i1[i], ax.i1[j]);
                    y.at(n, c, i, j) = static_cast<real>(v);
                }
}

void upsample_bilinear_backward(const Tensor& grad_y, Tensor& grad_x) {
    grad_x.zero();
    const LinearAxis ay = make_linear_axis(grad_x.h(), grad_y.h());
    const LinearAxis ax = make_linear_axis(grad_x.w(), grad_y.w());
    for (int n = 0; n < grad_y.n(); ++n)
        for (int c = 0; c < grad_y.c(); ++c)
            for (int i = 0; i < grad_y.h(); ++i)
                for (int j = 0; j < grad_y.w(); ++j) {
                    const double a = ay.w1[i];
                    const double b = ax.w1[j];
                    const double g = grad_y.at(n, c, i, j);
                    grad_x.at(n, c, ay.i0[i], ax.i0[j]) += static_cast<real>((1 - a) * (1 - b) * g);
                    grad_x.at(n, c, ay.i0[i], ax.i1[j]) += static_cast<real>((1 - a) * b * g);
                    grad_x.at(n, c, ay.i1[i], ax.i0[j]) += static_cast<real>(a * (1 - b) * g);
                    grad_x.at(n, c, ay.i1[i], ax.i1[j]) += static_cast<real>(a * b * g);
                }
}

void separable_filter(std::span<const double> in, int h, int w, std::span<const double> taps,
                      std::span<double> out) {
    const int r = static_cast<int>(taps.size()) / 2;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    s += taps[dy + r] * taps[dx + r] *
                         in[static_cast<std::size_t>(clamp_index(y + dy, h)) * w + clamp_index(x + dx, w)];
                }
            out[static_cast<std::size_t>(y) * w + x] = s;
        }
}

void separable_filter_adjoint(std::span<const double> in, int h, int w,
                              std::span<const double> taps, std::span<double> out) {
    const int r = static_cast<int>(taps.size()) / 2;
    std::fill(out.begin(), out.end(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    out[static_cast<std::size_t>(clamp_index(y + dy, h)) * w + clamp_index(x + dx, w)] +=
                        taps[dy + r] * taps[dx + r] * in[static_cast<std::size_t>(y) * w + x];
                }
}

} // namespace easynet::kernels::reference
