#include "easynet/kernels.hpp"

#include "easynet/error.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>

namespace easynet::kernels {

namespace {

using RowMatrix = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

void check_conv_shapes(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    const int k = weight.h();
    if (weight.w() != k || k % 2 == 0) {
        throw InvalidArgument("conv2d: kernel must be square and odd, got " + weight.shape().str());
    }
    if (weight.c() != x.c()) {
        throw InvalidArgument("conv2d: input has " + std::to_string(x.c()) +
                              " channels, weight expects " + std::to_string(weight.c()));
    }
    if (bias.numel() != static_cast<std::size_t>(weight.n())) {
        throw InvalidArgument("conv2d: bias size does not match output channels");
    }
}

// col[(c, ky, kx), (y, x)] = x[c, y + ky - pad, x + kx - pad], zero outside.
void im2col(const real* src, int channels, int h, int w, int k, real* col) {
    const int pad = k / 2;
    const int rows = channels * k * k;
    const std::size_t hw = static_cast<std::size_t>(h) * w;
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        const int c = r / (k * k);
        const int ky = (r / k) % k;
        const int kx = r % k;
        const real* plane = src + static_cast<std::size_t>(c) * hw;
        real* dst = col + static_cast<std::size_t>(r) * hw;
        for (int y = 0; y < h; ++y) {
            const int sy = y + ky - pad;
            real* out_row = dst + static_cast<std::size_t>(y) * w;
            if (sy < 0 || sy >= h) {
                std::fill(out_row, out_row + w, real(0));
                continue;
            }
            const real* in_row = plane + static_cast<std::size_t>(sy) * w;
            const int x_begin = std::max(0, pad - kx);
            const int x_end = std::min(w, w + pad - kx);
            std::fill(out_row, out_row + x_begin, real(0));
            for (int x = x_begin; x < x_end; ++x) out_row[x] = in_row[x + kx - pad];
            std::fill(out_row + x_end, out_row + w, real(0));
        }
    }
}

// Inverse scatter of im2col. Each channel owns disjoint output rows.
void col2im(const real* col, int channels, int h, int w, int k, real* dst) {
    const int pad = k / 2;
    const std::size_t hw = static_cast<std::size_t>(h) * w;
#pragma omp parallel for schedule(static)
    for (int c = 0; c < channels; ++c) {
        real* plane = dst + static_cast<std::size_t>(c) * hw;
        std::fill(plane, plane + hw, real(0));
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const real* src = col + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * hw;
                const int x_begin = std::max(0, pad - kx);
                const int x_end = std::min(w, w + pad - kx);
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - pad;
                    if (sy < 0 || sy >= h) continue;
                    real* out_row = plane + static_cast<std::size_t>(sy) * w;
                    const real* in_row = src + static_cast<std::size_t>(y) * w;
                    for (int x = x_begin; x < x_end; ++x) out_row[x + kx - pad] += in_row[x];
                }
            }
        }
    }
}

int clamp_index(int i, int size) { return i < 0 ? 0 : (i >= size ? size - 1 : i); }

} // namespace

void conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias, Tensor& y) {
    check_conv_shapes(x, weight, bias);
    const int k = weight.h();
    const int cin = x.c();
    const int cout = weight.n();
    const int hw = x.h() * x.w();
    const int kk = cin * k * k;
    y.reset({x.n(), cout, x.h(), x.w()});

    std::vector<real> col(k == 1 ? 0 : static_cast<std::size_t>(kk) * hw);
    const ConstMap wmat(weight.raw(), cout, kk);
    for (int n = 0; n < x.n(); ++n) {
        const real* colp = x.plane(n, 0);
        if (k != 1) {
            im2col(x.plane(n, 0), cin, x.h(), x.w(), k, col.data());
            colp = col.data();
        }
        MutMap out(y.plane(n, 0), cout, hw);
        out.noalias() = wmat * ConstMap(colp, kk, hw);
#pragma omp parallel for schedule(static)
        for (int o = 0; o < cout; ++o) {
            const real b = bias[static_cast<std::size_t>(o)];
            real* row = y.plane(n, o);
            for (int i = 0; i < hw; ++i) row[i] += b;
        }
    }
}

void conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_y,
                     Tensor* grad_x, Tensor& grad_weight, Tensor& grad_bias) {
    check_conv_shapes(x, weight, grad_bias);
    const int k = weight.h();
    const int cin = x.c();
    const int cout = weight.n();
    const int hw = x.h() * x.w();
    const int kk = cin * k * k;
    if (grad_y.shape() != Shape{x.n(), cout, x.h(), x.w()}) {
        throw InvalidArgument("conv2d_backward: grad_y shape " + grad_y.shape().str());
    }
    require_same_shape(grad_weight, weight, "conv2d_backward grad_weight");
    if (grad_x != nullptr) grad_x->reset(x.shape());

    std::vector<real> col(k == 1 ? 0 : static_cast<std::size_t>(kk) * hw);
    std::vector<real> gcol(grad_x != nullptr && k != 1 ? static_cast<std::size_t>(kk) * hw : 0);
    const ConstMap wmat(weight.raw(), cout, kk);
    MutMap gw(grad_weight.raw(), cout, kk);
    for (int n = 0; n < x.n(); ++n) {
        const real* colp = x.plane(n, 0);
        if (k != 1) {
            im2col(x.plane(n, 0), cin, x.h(), x.w(), k, col.data());
            colp = col.data();
        }
        const ConstMap gy(grad_y.plane(n, 0), cout, hw);
        gw.noalias() += gy * ConstMap(colp, kk, hw).transpose();
#pragma omp parallel for schedule(static)
        for (int o = 0; o < cout; ++o) {
            const real* row = grad_y.plane(n, o);
            real s = 0;
            for (int i = 0; i < hw; ++i) s += row[i];
            grad_bias[static_cast<std::size_t>(o)] += s;
        }
        if (grad_x != nullptr) {
            if (k == 1) {
                MutMap(grad_x->plane(n, 0), kk, hw).noalias() = wmat.transpose() * gy;
            } else {
                MutMap(gcol.data(), kk, hw).noalias() = wmat.transpose() * gy;
                col2im(gcol.data(), cin, x.h(), x.w(), k, grad_x->plane(n, 0));
            }
        }
    }
}

void relu_inplace(Tensor& t) {
    real* p = t.raw();
    const std::size_t n = t.numel();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) p[i] = p[i] > real(0) ? p[i] : real(0);
}

void relu_backward(const Tensor& activated, Tensor& grad) {
    require_same_shape(activated, grad, "relu_backward");
    const real* a = activated.raw();
    real* g = grad.raw();
    const std::size_t n = grad.numel();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        if (!(a[i] > real(0))) g[i] = real(0);
    }
}

void sigmoid_inplace(Tensor& t) {
    real* p = t.raw();
    const std::size_t n = t.numel();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) p[i] = real(1) / (real(1) + std::exp(-p[i]));
}

void sigmoid_backward(const Tensor& activated, Tensor& grad) {
    require_same_shape(activated, grad, "sigmoid_backward");
    const real* a = activated.raw();
    real* g = grad.raw();
    const std::size_t n = grad.numel();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) g[i] *= a[i] * (real(1) - a[i]);
}

void maxpool2_forward(const Tensor& x, Tensor& y) {
    if (x.h() % 2 != 0 || x.w() % 2 != 0) throw InvalidArgument("maxpool2: odd spatial size");
    const int oh = x.h() / 2;
    const int ow = x.w() / 2;
    y.reset({x.n(), x.c(), oh, ow});
    const int planes = x.n() * x.c();
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const real* in = x.raw() + static_cast<std::size_t>(p) * x.shape().plane();
        real* out = y.raw() + static_cast<std::size_t>(p) * y.shape().plane();
        for (int i = 0; i < oh; ++i) {
            const real* r0 = in + static_cast<std::size_t>(2 * i) * x.w();
            const real* r1 = r0 + x.w();
            for (int j = 0; j < ow; ++j) {
                real m = r0[2 * j];
                m = r0[2 * j + 1] > m ? r0[2 * j + 1] : m;
                m = r1[2 * j] > m ? r1[2 * j] : m;
                m = r1[2 * j + 1] > m ? r1[2 * j + 1] : m;
                out[static_cast<std::size_t>(i) * ow + j] = m;
            }
        }
    }
}

void maxpool2_backward(const Tensor& x, const Tensor& grad_y, Tensor& grad_x) {
    const int oh = x.h() / 2;
    const int ow = x.w() / 2;
    if (grad_y.shape() != Shape{x.n(), x.c(), oh, ow}) {
        throw InvalidArgument("maxpool2_backward: grad_y shape " + grad_y.shape().str());
    }
    grad_x.reset(x.shape());
    const int planes = x.n() * x.c();
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const real* in = x.raw() + static_cast<std::size_t>(p) * x.shape().plane();
        const real* gy = grad_y.raw() + static_cast<std::size_t>(p) * grad_y.shape().plane();
        real* gx = grad_x.raw() + static_cast<std::size_t>(p) * x.shape().plane();
        for (int i = 0; i < oh; ++i) {
            for (int j = 0; j < ow; ++j) {
                const std::size_t cand[4] = {
                    static_cast<std::size_t>(2 * i) * x.w() + 2 * j,
                    static_cast<std::size_t>(2 * i) * x.w() + 2 * j + 1,
                    static_cast<std::size_t>(2 * i + 1) * x.w() + 2 * j,
                    static_cast<std::size_t>(2 * i + 1) * x.w() + 2 * j + 1,
                };
                std::size_t best = cand[0];
                for (int t = 1; t < 4; ++t) {
                    if (in[cand[t]] > in[best]) best = cand[t];
                }
                gx[best] += gy[static_cast<std::size_t>(i) * ow + j];
            }
        }
    }
}

void upsample_nearest2_forward(const Tensor& x, Tensor& y) {
    const int oh = x.h() * 2;
    const int ow = x.w() * 2;
    y.reset({x.n(), x.c(), oh, ow});
    const int planes = x.n() * x.c();
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const real* in = x.raw() + static_cast<std::size_t>(p) * x.shape().plane();
        real* out = y.raw() + static_cast<std::size_t>(p) * y.shape().plane();
        for (int i = 0; i < oh; ++i) {
            const real* src = in + static_cast<std::size_t>(i / 2) * x.w();
            real* dst = out + static_cast<std::size_t>(i) * ow;
            for (int j = 0; j < ow; ++j) dst[j] = src[j / 2];
        }
    }
}

void upsample_nearest2_backward(const Tensor& grad_y, Tensor& grad_x) {
    if (grad_y.h() % 2 != 0 || grad_y.w() % 2 != 0) {
        throw InvalidArgument("upsample_nearest2_backward: odd gradient size");
    }
    const int ih = grad_y.h() / 2;
    const int iw = grad_y.w() / 2;
    grad_x.reset({grad_y.n(), grad_y.c(), ih, iw});
    const int planes = grad_y.n() * grad_y.c();
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const real* gy = grad_y.raw() + static_cast<std::size_t>(p) * grad_y.shape().plane();
        real* gx = grad_x.raw() + static_cast<std::size_t>(p) * grad_x.shape().plane();
        for (int i = 0; i < ih; ++i) {
            const real* r0 = gy + static_cast<std::size_t>(2 * i) * grad_y.w();
            const real* r1 = r0 + grad_y.w();
            for (int j = 0; j < iw; ++j) {
                gx[static_cast<std::size_t>(i) * iw + j] =
                    r0[2 * j] + r0[2 * j + 1] + r1[2 * j] + r1[2 * j + 1];
            }
        }
    }
}

LinearAxis make_linear_axis(int in_size, int out_size) {
    LinearAxis axis;
    axis.i0.resize(out_size);
    axis.i1.resize(out_size);
    axis.w1.resize(out_size);
    const double scale = static_cast<double>(in_size) / out_size;
    for (int o = 0; o < out_size; ++o) {
        const double src = std::max(0.0, (o + 0.5) * scale - 0.5);
        const int i0 = std::min(static_cast<int>(src), in_size - 1);
        axis.i0[o] = i0;
        axis.i1[o] = i0 + (i0 < in_size - 1 ? 1 : 0);
        axis.w1[o] = src - i0;
    }
    return axis;
}

void upsample_bilinear_forward(const Tensor& x, int out_h, int out_w, Tensor& y) {
    y.reset({x.n(), x.c(), out_h, out_w});
    const LinearAxis ay = make_linear_axis(x.h(), out_h);
    const LinearAxis ax = make_linear_axis(x.w(), out_w);
    const int planes = x.n() * x.c();
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const real* in = x.raw() + static_cast<std::size_t>(p) * x.shape().plane();
        real* out = y.raw() + static_cast<std::size_t>(p) * y.shape().plane();
        for (int i = 0; i < out_h; ++i) {
            const real* r0 = in + static_cast<std::size_t>(ay.i0[i]) * x.w();
            const real* r1 = in + static_cast<std::size_t>(ay.i1[i]) * x.w();
            const real wy1 = static_cast<real>(ay.w1[i]);
            const real wy0 = real(1) - wy1;
            real* dst = out + static_cast<std::size_t>(i) * out_w;
            for (int j = 0; j < out_w; ++j) {
                const real wx1 = static_cast<real>(ax.w1[j]);
                const real wx0 = real(1) - wx1;
                dst[j] = wy0 * (wx0 * r0[ax.i0[j]] + wx1 * r0[ax.i1[j]]) +
                         wy1 * (wx0 * r1[ax.i0[j]] + wx1 * r1[ax.i1[j]]);
            }
        }
    }
}

void upsample_bilinear_backward(const Tensor& grad_y, Tensor& grad_x) {
    if (grad_x.n() != grad_y.n() || grad_x.c() != grad_y.c()) {
        throw InvalidArgument("upsample_bilinear_backward: grad_x must carry the input shape");
    }
    grad_x.zero();
    const LinearAxis ay = make_linear_axis(grad_x.h(), grad_y.h());
    const LinearAxis ax = make_linear_axis(grad_x.w(), grad_y.w());
    const int planes = grad_y.n() * grad_y.c();
    const int iw = grad_x.w();
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const real* gy = grad_y.raw() + static_cast<std::size_t>(p) * grad_y.shape().plane();
        real* gx = grad_x.raw() + static_cast<std::size_t>(p) * grad_x.shape().plane();
        for (int i = 0; i < grad_y.h(); ++i) {
            real* r0 = gx + static_cast<std::size_t>(ay.i0[i]) * iw;
            real* r1 = gx + static_cast<std::size_t>(ay.i1[i]) * iw;
            const real wy1 = static_cast<real>(ay.w1[i]);
            const real wy0 = real(1) - wy1;
            const real* src = gy + static_cast<std::size_t>(i) * grad_y.w();
            for (int j = 0; j < grad_y.w(); ++j) {
                const real wx1 = static_cast<real>(ax.w1[j]);
                const real wx0 = real(1) - wx1;
                const real g = src[j];
                r0[ax.i0[j]] += wy0 * wx0 * g;
                r0[ax.i1[j]] += wy0 * wx1 * g;
                r1[ax.i0[j]] += wy1 * wx0 * g;
                r1[ax.i1[j]] += wy1 * wx1 * g;
            }
        }
    }
}

void channel_scale(const Tensor& x, const Tensor& scale, Tensor& y) {
    if (scale.n() != x.n() || scale.c() != x.c() || scale.h() != 1 || scale.w() != 1) {
        throw InvalidArgument("channel_scale: scale shape " + scale.shape().str());
    }
    y.reset(x.shape());
    const int planes = x.n() * x.c();
    const std::size_t plane = x.shape().plane();
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const real s = scale[static_cast<std::size_t>(p)];
        const real* in = x.raw() + p * plane;
        real* out = y.raw() + p * plane;
        for (std::size_t i = 0; i < plane; ++i) out[i] = in[i] * s;
    }
}

void global_avg_pool(const Tensor& x, Tensor& y) {
    if (x.h() == 0 || x.w() == 0) throw InvalidArgument("global_avg_pool: empty feature map");
    y.reset({x.n(), x.c(), 1, 1});
    const int planes = x.n() * x.c();
    const std::size_t plane = x.shape().plane();
#pragma omp parallel for schedule(static)
    for (int p = 0; p < planes; ++p) {
        const real* in = x.raw() + p * plane;
        double s = 0;
        for (std::size_t i = 0; i < plane; ++i) s += in[i];
        y[static_cast<std::size_t>(p)] = static_cast<real>(s / static_cast<double>(plane));
    }
}

std::vector<double> gaussian_taps(int size, double sigma) {
    if (size < 1 || size % 2 == 0) throw InvalidArgument("gaussian_taps: size must be odd");
    std::vector<double> taps(size);
    const int r = size / 2;
    double sum = 0;
    for (int i = 0; i < size; ++i) {
        const double d = i - r;
        taps[i] = std::exp(-(d * d) / (2 * sigma * sigma));
        sum += taps[i];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

void separable_filter(std::span<const double> in, int h, int w, std::span<const double> taps,
                      std::span<double> out) {
    const int r = static_cast<int>(taps.size()) / 2;
    std::vector<double> tmp(static_cast<std::size_t>(h) * w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const double* row = in.data() + static_cast<std::size_t>(y) * w;
        double* dst = tmp.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int t = -r; t <= r; ++t) s += taps[t + r] * row[clamp_index(x + t, w)];
            dst[x] = s;
        }
    }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        double* dst = out.data() + static_cast<std::size_t>(y) * w;
        std::fill(dst, dst + w, 0.0);
        for (int t = -r; t <= r; ++t) {
            const double* src = tmp.data() + static_cast<std::size_t>(clamp_index(y + t, h)) * w;
            const double c = taps[t + r];
            for (int x = 0; x < w; ++x) dst[x] += c * src[x];
        }
    }
}

void separable_filter_adjoint(std::span<const double> in, int h, int w,
                              std::span<const double> taps, std::span<double> out) {
    const int r = static_cast<int>(taps.size()) / 2;
    std::vector<double> tmp(static_cast<std::size_t>(h) * w, 0.0);
    // Vertical adjoint: scatter each input row into clamped source rows.
    // Columns are independent.
#pragma omp parallel for schedule(static)
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            const double v = in[static_cast<std::size_t>(y) * w + x];
            for (int t = -r; t <= r; ++t) {
                tmp[static_cast<std::size_t>(clamp_index(y + t, h)) * w + x] += taps[t + r] * v;
            }
        }
    }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const double* src = tmp.data() + static_cast<std::size_t>(y) * w;
        double* dst = out.data() + static_cast<std::size_t>(y) * w;
        std::fill(dst, dst + w, 0.0);
        for (int x = 0; x < w; ++x) {
            for (int t = -r; t <= r; ++t) dst[clamp_index(x + t, w)] += taps[t + r] * src[x];
        }
    }
}

} // namespace easynet::kernels
