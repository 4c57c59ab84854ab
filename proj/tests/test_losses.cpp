#include "easynet/error.hpp"
#include "easynet/losses.hpp"
#include "easynet/segmentation_net.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace easynet;

namespace {

Tensor random_mask(Shape s, std::mt19937_64& rng, double p = 0.3) {
    Tensor m(s);
    std::bernoulli_distribution b(p);
    for (real& v : m.data()) v = b(rng) ? real(1) : real(0);
    return m;
}

struct Inputs {
    Tensor rgb, recon_rgb, depth, recon_depth, probs, mask;
};

Inputs random_inputs(std::mt19937_64& rng, int size = 16) {
    Inputs in;
    in.rgb = test::random_tensor({2, 3, size, size}, rng, 0, 1);
    in.recon_rgb = test::random_tensor({2, 3, size, size}, rng, 0, 1);
    in.depth = test::random_tensor({2, 1, size, size}, rng, 0, 1);
    in.recon_depth = test::random_tensor({2, 1, size, size}, rng, 0, 1);
    in.probs = test::random_tensor({2, 1, size, size}, rng, 0.01, 0.99);
    in.mask = random_mask({2, 1, size, size}, rng);
    return in;
}

} // namespace

TEST_CASE("ssim loss: identity, constant closed form, symmetry") {
    const LossConfig cfg;
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 5; ++trial) {
        const Tensor x = test::random_tensor({1, 3, 20, 17}, rng, 0, 1);
        CHECK(std::abs(ssim_loss(x, x, cfg)) < 1e-7);
        const Tensor y = test::random_tensor({1, 3, 20, 17}, rng, 0, 1);
        CHECK(ssim_loss(x, y, cfg) == doctest::Approx(ssim_loss(y, x, cfg)).epsilon(1e-12));
        CHECK(ssim_loss(x, y, cfg) > 0.0);
    }
    const double a = 0.2, b = 0.8, c1 = 1e-4;
    const Tensor ta({1, 3, 16, 16}, real(a)), tb({1, 3, 16, 16}, real(b));
    const double expected = 1.0 - (2 * a * b + c1) / (a * a + b * b + c1);
    CHECK(ssim_loss(ta, tb, cfg) == doctest::Approx(expected).epsilon(1e-6));
    CHECK_THROWS_AS(ssim_loss(ta, Tensor({1, 3, 16, 15}), cfg), InvalidArgument);
}

TEST_CASE("mse loss values") {
    Tensor x({1, 1, 1, 2}), y({1, 1, 1, 2}, real(1));
    x[1] = 1;
    CHECK(mse_loss(x, y) == doctest::Approx(0.5));
    CHECK(mse_loss(x, x) == 0.0);
    CHECK(mse_loss(Tensor({1, 1, 1, 1}), Tensor({1, 1, 1, 1}, real(1))) == 1.0);
    CHECK_THROWS_AS(mse_loss(x, Tensor({1, 1, 2, 1})), InvalidArgument);
}

TEST_CASE("focal loss at p_t = 0.5, gamma 2, alpha_t 0.25") {
    const LossConfig cfg;
    Tensor p({1, 1, 1, 1}, real(0.5)), m({1, 1, 1, 1}, real(1));
    CHECK(std::abs(focal_loss(p, m, cfg) - 0.043322) < 1e-6);
    CHECK(focal_loss(p, m, cfg) == doctest::Approx(0.0625 * std::log(2.0)).epsilon(1e-7));
}

TEST_CASE("focal loss reduces to cross-entropy at gamma 0 and alpha_t 1") {
    LossConfig cfg;
    cfg.focal_gamma = 0.0;
    cfg.focal_alpha_anomaly = cfg.focal_alpha_normal = 1.0;
    std::mt19937_64 rng(52);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor p = test::random_tensor({1, 1, 16, 16}, rng, 0.001, 0.999);
        const Tensor m = random_mask({1, 1, 16, 16}, rng, 0.5);
        double ce = 0.0;
        for (std::size_t i = 0; i < p.numel(); ++i) {
            ce -= m[i] == 1 ? std::log(double(p[i])) : std::log(1.0 - double(p[i]));
        }
        ce /= double(p.numel());
        CHECK(std::abs(focal_loss(p, m, cfg) - ce) < 1e-6);
    }
}

TEST_CASE("focal loss limits, logits form and validation") {
    const LossConfig cfg;
    std::mt19937_64 rng(53);
    const Tensor m = random_mask({1, 1, 8, 8}, rng);
    CHECK(focal_loss(m, m, cfg) < 1e-12);
    const Tensor logits = test::random_tensor({1, 2, 8, 8}, rng, -4, 4);
    CHECK(focal_loss_logits(logits, m, cfg) == doctest::Approx(focal_loss(anomaly_probs(logits), m, cfg)).epsilon(1e-5));
    Tensor bad = m;
    bad[0] = real(0.5);
    CHECK_THROWS_AS(focal_loss(m, bad, cfg), InvalidArgument);
    CHECK_THROWS_AS(focal_loss(Tensor({1, 1, 8, 7}), m, cfg), InvalidArgument);
    const Tensor p = test::random_tensor({1, 1, 8, 8}, rng, 0, 1);
    CHECK(focal_loss(p, m, cfg) >= 0.0);
}

TEST_CASE("total loss equals the weighted sum of its parts and is linear in each lambda") {
    std::mt19937_64 rng(54);
    const Inputs in = random_inputs(rng);
    LossConfig base;
    base.lambda1 = 0.7;
    base.lambda2 = 1.3;
    base.lambda3 = 0.4;
    base.lambda4 = 2.1;
    const LossBreakdown b =
        total_loss(in.rgb, in.recon_rgb, in.depth, in.recon_depth, in.probs, in.mask, base);
    const double ssim = ssim_loss(in.recon_rgb, in.rgb, base);
    const double mse_rgb = mse_loss(in.recon_rgb, in.rgb);
    const double mse_depth = mse_loss(in.recon_depth, in.depth);
    const double focal = focal_loss(in.probs, in.mask, base);
    CHECK(b.ssim_rgb == doctest::Approx(ssim).epsilon(1e-12));
    CHECK(b.mse_rgb == doctest::Approx(mse_rgb).epsilon(1e-12));
    CHECK(b.mse_depth == doctest::Approx(mse_depth).epsilon(1e-12));
    CHECK(b.focal == doctest::Approx(focal).epsilon(1e-12));
    CHECK(std::abs(b.total - (0.7 * ssim + 1.3 * mse_rgb + 0.4 * mse_depth + 2.1 * focal)) < 1e-9);

    double* lambdas[] = {&base.lambda1, &base.lambda2, &base.lambda3, &base.lambda4};
    const double parts[] = {ssim, mse_rgb, mse_depth, focal};
    for (int i = 0; i < 4; ++i) {
        LossConfig scaled = base;
        double* l[] = {&scaled.lambda1, &scaled.lambda2, &scaled.lambda3, &scaled.lambda4};
        *l[i] = *lambdas[i] * 3.0;
        const double t =
            total_loss(in.rgb, in.recon_rgb, in.depth, in.recon_depth, in.probs, in.mask, scaled).total;
        CHECK(std::abs(t - b.total - 2.0 * *lambdas[i] * parts[i]) < 1e-9);
    }

    LossConfig zero;
    zero.lambda1 = zero.lambda2 = zero.lambda3 = zero.lambda4 = 0.0;
    CHECK(total_loss(in.rgb, in.recon_rgb, in.depth, in.recon_depth, in.probs, in.mask, zero).total == 0.0);
    const LossConfig ones;
    CHECK(total_loss(in.rgb, in.rgb, in.depth, in.depth, in.mask, in.mask, ones).total < 1e-7);
}

TEST_CASE("total loss from logits matches the probability form") {
    std::mt19937_64 rng(55);
    const Inputs in = random_inputs(rng, 12);
    const Tensor logits = test::random_tensor({2, 2, 12, 12}, rng, -3, 3);
    const LossConfig cfg;
    LossGradients g;
    const LossBreakdown a =
        total_loss_logits(in.rgb, in.recon_rgb, in.depth, in.recon_depth, logits, in.mask, cfg, &g);
    const LossBreakdown b =
        total_loss(in.rgb, in.recon_rgb, in.depth, in.recon_depth, anomaly_probs(logits), in.mask, cfg);
    CHECK(a.total == doctest::Approx(b.total).epsilon(1e-5));
    CHECK(g.recon_rgb.shape() == in.rgb.shape());
    CHECK(g.recon_depth.shape() == in.depth.shape());
    CHECK(g.logits.shape() == logits.shape());
}

TEST_CASE("loss config validation") {
    LossConfig c;
    c.ssim_window = 4;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = LossConfig{};
    c.focal_gamma = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = LossConfig{};
    c.lambda2 = std::nan("");
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
