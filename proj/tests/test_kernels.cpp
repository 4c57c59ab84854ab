#include "easynet/error.hpp"
#include "easynet/kernels.hpp"
#include "easynet/reference_kernels.hpp"
#include "support.hpp"

#include <doctest.h>

#include <array>

using namespace easynet;
using easynet::test::max_abs;
using easynet::test::max_abs_diff;
using easynet::test::random_tensor;
namespace fast = easynet::kernels;
namespace ref = easynet::kernels::reference;

namespace {

double rel_diff(const Tensor& a, const Tensor& b) {
    return max_abs_diff(a, b) / std::max(1.0, max_abs(b));
}

} // namespace

TEST_CASE("conv2d forward and backward agree with the serial reference") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 24; ++trial) {
        std::uniform_int_distribution<int> dim(1, 5);
        const int n = dim(rng), cin = dim(rng), cout = dim(rng);
        const int k = std::array{1, 3, 5}[trial % 3];
        const int h = 3 + trial % 7, w = 2 + trial % 9;
        const Tensor x = random_tensor({n, cin, h, w}, rng);
        const Tensor wt = random_tensor({cout, cin, k, k}, rng);
        const Tensor b = random_tensor({cout, 1, 1, 1}, rng);
        Tensor y_fast, y_ref;
        fast::conv2d_forward(x, wt, b, y_fast);
        ref::conv2d_forward(x, wt, b, y_ref);
        REQUIRE(y_fast.shape() == y_ref.shape());
        CHECK(rel_diff(y_fast, y_ref) < 1e-5);

        const Tensor gy = random_tensor(y_ref.shape(), rng);
        Tensor gx_f, gx_r;
        Tensor gw_f(wt.shape()), gw_r(wt.shape()), gb_f(b.shape()), gb_r(b.shape());
        fast::conv2d_backward(x, wt, gy, &gx_f, gw_f, gb_f);
        ref::conv2d_backward(x, wt, gy, &gx_r, gw_r, gb_r);
        CHECK(rel_diff(gx_f, gx_r) < 1e-5);
        CHECK(rel_diff(gw_f, gw_r) < 1e-5);
        CHECK(rel_diff(gb_f, gb_r) < 1e-5);
    }
}

TEST_CASE("conv2d backward accumulates parameter gradients") {
    std::mt19937_64 rng(12);
    const Tensor x = random_tensor({2, 3, 6, 6}, rng);
    const Tensor wt = random_tensor({4, 3, 3, 3}, rng);
    const Tensor b = random_tensor({4, 1, 1, 1}, rng);
    const Tensor gy = random_tensor({2, 4, 6, 6}, rng);
    Tensor gw1(wt.shape()), gb1(b.shape()), gw2(wt.shape()), gb2(b.shape());
    fast::conv2d_backward(x, wt, gy, nullptr, gw1, gb1);
    fast::conv2d_backward(x, wt, gy, nullptr, gw2, gb2);
    fast::conv2d_backward(x, wt, gy, nullptr, gw2, gb2);
    gw1 *= real(2);
    CHECK(max_abs_diff(gw1, gw2) < 1e-4);
}

TEST_CASE("pooling and upsampling agree with the serial reference") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 12; ++trial) {
        const int h = 2 * (1 + trial % 5), w = 2 * (1 + trial % 4);
        Tensor x = random_tensor({2, 3, h, w}, rng);
        if (trial % 2 == 0) {
            for (std::size_t i = 0; i < x.numel(); i += 3) x[i] = real(0.25);
        }
        Tensor pf, pr;
        fast::maxpool2_forward(x, pf);
        ref::maxpool2_forward(x, pr);
        CHECK(test::bit_equal(pf, pr));
        const Tensor gy = random_tensor(pr.shape(), rng);
        Tensor gf, gr;
        fast::maxpool2_backward(x, gy, gf);
        ref::maxpool2_backward(x, gy, gr);
        CHECK(test::bit_equal(gf, gr));

        Tensor uf, ur;
        fast::upsample_nearest2_forward(x, uf);
        ref::upsample_nearest2_forward(x, ur);
        CHECK(test::bit_equal(uf, ur));
        const Tensor gu = random_tensor(ur.shape(), rng);
        Tensor guf, gur;
        fast::upsample_nearest2_backward(gu, guf);
        ref::upsample_nearest2_backward(gu, gur);
        CHECK(max_abs_diff(guf, gur) < 1e-6);

        const int oh = 3 + trial * 2, ow = 5 + trial;
        Tensor bf, br;
        fast::upsample_bilinear_forward(x, oh, ow, bf);
        ref::upsample_bilinear_forward(x, oh, ow, br);
        CHECK(max_abs_diff(bf, br) < 1e-6);
        const Tensor gb = random_tensor(br.shape(), rng);
        Tensor gbf(x.shape()), gbr(x.shape());
        fast::upsample_bilinear_backward(gb, gbf);
        ref::upsample_bilinear_backward(gb, gbr);
        CHECK(max_abs_diff(gbf, gbr) < 1e-5);
    }
}

TEST_CASE("bilinear upsample of a constant stays constant and is the identity at equal size") {
    Tensor x({1, 1, 4, 4}, real(0.7));
    Tensor y;
    fast::upsample_bilinear_forward(x, 16, 16, y);
    for (real v : y.data()) CHECK(v == doctest::Approx(0.7).epsilon(1e-6));
    std::mt19937_64 rng(14);
    const Tensor r = random_tensor({1, 2, 5, 7}, rng);
    fast::upsample_bilinear_forward(r, 5, 7, y);
    CHECK(max_abs_diff(r, y) < 1e-7);
}

TEST_CASE("bilinear backward is the adjoint of forward") {
    std::mt19937_64 rng(15);
    const Tensor x = random_tensor({1, 2, 4, 6}, rng);
    Tensor y;
    fast::upsample_bilinear_forward(x, 11, 9, y);
    const Tensor g = random_tensor(y.shape(), rng);
    Tensor gx(x.shape());
    fast::upsample_bilinear_backward(g, gx);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) lhs += double(y[i]) * g[i];
    for (std::size_t i = 0; i < x.numel(); ++i) rhs += double(x[i]) * gx[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
}

TEST_CASE("separable filter agrees with the reference and its adjoint passes the dot test") {
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 10; ++trial) {
        const int h = 3 + trial, w = 20 - trial;
        const auto taps = fast::gaussian_taps(2 * (trial % 5) + 1, 1.5);
        std::vector<double> in(static_cast<std::size_t>(h) * w), a(in.size()), b(in.size());
        for (double& v : in) v = u(rng);
        fast::separable_filter(in, h, w, taps, a);
        ref::separable_filter(in, h, w, taps, b);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));

        std::vector<double> g(in.size()), adj_f(in.size()), adj_r(in.size());
        for (double& v : g) v = u(rng);
        fast::separable_filter_adjoint(g, h, w, taps, adj_f);
        ref::separable_filter_adjoint(g, h, w, taps, adj_r);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            lhs += a[i] * g[i];
            rhs += in[i] * adj_f[i];
            CHECK(adj_f[i] == doctest::Approx(adj_r[i]).epsilon(1e-12));
        }
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("gaussian taps are normalized and symmetric") {
    const auto t = fast::gaussian_taps(11, 1.5);
    REQUIRE(t.size() == 11);
    double s = 0.0;
    for (double v : t) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    for (int i = 0; i < 5; ++i) CHECK(t[i] == doctest::Approx(t[10 - i]));
    CHECK(t[5] > t[4]);
    CHECK(t[1] / t[0] == doctest::Approx(std::exp((25.0 - 16.0) / (2 * 2.25))));
}

TEST_CASE("activations and channel ops") {
    Tensor t({1, 2, 1, 2});
    t[0] = -1; t[1] = 2; t[2] = 0; t[3] = -0.5;
    Tensor r = t;
    fast::relu_inplace(r);
    CHECK(r[0] == 0);
    CHECK(r[1] == 2);
    Tensor g({1, 2, 1, 2}, real(1));
    fast::relu_backward(r, g);
    CHECK(g[0] == 0);
    CHECK(g[1] == 1);
    CHECK(g[2] == 0);

    Tensor s = t;
    fast::sigmoid_inplace(s);
    CHECK(s[2] == doctest::Approx(0.5));
    CHECK(s[1] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));

    Tensor pooled;
    fast::global_avg_pool(t, pooled);
    CHECK(pooled.shape() == Shape{1, 2, 1, 1});
    CHECK(pooled[0] == doctest::Approx(0.5));
    CHECK(pooled[1] == doctest::Approx(-0.25));

    Tensor scale({1, 2, 1, 1});
    scale[0] = 2; scale[1] = 3;
    Tensor y;
    fast::channel_scale(t, scale, y);
    CHECK(y[1] == 4);
    CHECK(y[3] == doctest::Approx(-1.5));
}

TEST_CASE("tensor helpers") {
    Tensor a({1, 1, 2, 2}, real(1));
    Tensor b({1, 2, 2, 2}, real(2));
    const Tensor* parts[] = {&a, &b};
    const Tensor c = concat_channels(parts);
    CHECK(c.shape() == Shape{1, 3, 2, 2});
    CHECK(c.at(0, 0, 1, 1) == 1);
    CHECK(c.at(0, 2, 0, 0) == 2);
    const Tensor s = slice_channels(c, 1, 2);
    CHECK(s.shape() == Shape{1, 2, 2, 2});
    CHECK(s.at(0, 0, 0, 0) == 2);
    const Tensor* batch[] = {&a, &a, &a};
    CHECK(stack_batch(batch).shape() == Shape{3, 1, 2, 2});
    CHECK_THROWS_AS(require_same_shape(a, b, "a vs b"), InvalidArgument);
    Tensor bad = a;
    bad[2] = std::nanf("");
    CHECK_FALSE(bad.all_finite());
    CHECK(bad.count_nonfinite() == 1);
}
