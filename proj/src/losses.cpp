#include "easynet/losses.hpp"

#include "easynet/error.hpp"
#include "easynet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace easynet {

void LossConfig::validate() const {
    for (double l : {lambda1, lambda2, lambda3, lambda4}) {
        if (!std::isfinite(l)) throw ConfigError("loss: lambdas must be finite");
    }
    if (!(focal_gamma >= 0.0)) throw ConfigError("loss: focal_gamma must be >= 0");
    if (!(focal_alpha_anomaly >= 0.0) || !(focal_alpha_normal >= 0.0)) {
        throw ConfigError("loss: focal alphas must be >= 0");
    }
    if (!(focal_epsilon > 0.0 && focal_epsilon < 0.5)) throw ConfigError("loss: focal_epsilon must be in (0, 0.5)");
    if (ssim_window < 3 || ssim_window % 2 == 0) {
        throw ConfigError("loss: ssim_window must be odd and >= 3, got " + std::to_string(ssim_window));
    }
    if (!(ssim_sigma > 0.0) || !(ssim_c1 > 0.0) || !(ssim_c2 > 0.0)) {
        throw ConfigError("loss: ssim_sigma, ssim_c1 and ssim_c2 must be positive");
    }
}

double ssim_loss(const Tensor& x, const Tensor& y, const LossConfig& cfg, Tensor* grad_x) {
    require_same_shape(x, y, "ssim_loss");
    if (x.numel() == 0) throw InvalidArgument("ssim_loss: empty input");
    const int h = x.h();
    const int w = x.w();
    const std::size_t plane = x.shape().plane();
    const std::vector<double> taps = kernels::gaussian_taps(cfg.ssim_window, cfg.ssim_sigma);
    const double c1 = cfg.ssim_c1;
    const double c2 = cfg.ssim_c2;
    const double count = static_cast<double>(x.numel());

    if (grad_x != nullptr) grad_x->reset(x.shape());
    std::vector<double> xs(plane), ys(plane), xx(plane), yy(plane), xy(plane);
    std::vector<double> mx(plane), my(plane), qx(plane), qy(plane), qxy(plane);
    std::vector<double> d_mx(plane), d_qx(plane), d_qxy(plane), back(plane);
    double ssim_sum = 0.0;

    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            const real* px = x.plane(n, c);
            const real* py = y.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i) {
                xs[i] = px[i];
                ys[i] = py[i];
                xx[i] = xs[i] * xs[i];
                yy[i] = ys[i] * ys[i];
                xy[i] = xs[i] * ys[i];
            }
            kernels::separable_filter(xs, h, w, taps, mx);
            kernels::separable_filter(ys, h, w, taps, my);
            kernels::separable_filter(xx, h, w, taps, qx);
            kernels::separable_filter(yy, h, w, taps, qy);
            kernels::separable_filter(xy, h, w, taps, qxy);
            for (std::size_t i = 0; i < plane; ++i) {
                const double a1 = 2.0 * mx[i] * my[i] + c1;
                const double a2 = 2.0 * (qxy[i] - mx[i] * my[i]) + c2;
                const double b1 = mx[i] * mx[i] + my[i] * my[i] + c1;
                const double b2 = (qx[i] - mx[i] * mx[i]) + (qy[i] - my[i] * my[i]) + c2;
                const double s = (a1 * a2) / (b1 * b2);
                ssim_sum += s;
                if (grad_x != nullptr) {
                    d_mx[i] = s * (2.0 * my[i] / a1 - 2.0 * my[i] / a2 - 2.0 * mx[i] / b1 + 2.0 * mx[i] / b2);
                    d_qx[i] = -s / b2;
                    d_qxy[i] = 2.0 * s / a2;
                }
            }
            if (grad_x == nullptr) continue;
            real* g = grad_x->plane(n, c);
            kernels::separable_filter_adjoint(d_mx, h, w, taps, back);
            for (std::size_t i = 0; i < plane; ++i) xx[i] = back[i];
            kernels::separable_filter_adjoint(d_qx, h, w, taps, back);
            for (std::size_t i = 0; i < plane; ++i) xx[i] += 2.0 * xs[i] * back[i];
            kernels::separable_filter_adjoint(d_qxy, h, w, taps, back);
            for (std::size_t i = 0; i < plane; ++i) {
                g[i] = static_cast<real>(-(xx[i] + ys[i] * back[i]) / count);
            }
        }
    }
    return 1.0 - ssim_sum / count;
}

double mse_loss(const Tensor& pred, const Tensor& target, Tensor* grad_pred) {
    require_same_shape(pred, target, "mse_loss");
    if (pred.numel() == 0) throw InvalidArgument("mse_loss: empty input");
    const double count = static_cast<double>(pred.numel());
    if (grad_pred != nullptr) grad_pred->reset(pred.shape());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double d = static_cast<double>(pred[i]) - target[i];
        sum += d * d;
        if (grad_pred != nullptr) (*grad_pred)[i] = static_cast<real>(2.0 * d / count);
    }
    return sum / count;
}

namespace {

void check_mask(const Tensor& mask, int n, int h, int w, const char* who) {
    if (mask.n() != n || mask.c() != 1 || mask.h() != h || mask.w() != w) {
        throw InvalidArgument(std::string(who) + ": mask shape " + mask.shape().str() + " does not match");
    }
    for (real m : mask.data()) {
        if (m != real(0) && m != real(1)) throw InvalidArgument(std::string(who) + ": mask is not binary");
    }
}

double alpha_for(bool anomalous, const LossConfig& cfg) {
    return anomalous ? cfg.focal_alpha_anomaly : cfg.focal_alpha_normal;
}

double focal_term(double p_t, double alpha, const LossConfig& cfg) {
    const double p = std::clamp(p_t, cfg.focal_epsilon, 1.0 - cfg.focal_epsilon);
    return -alpha * std::pow(1.0 - p, cfg.focal_gamma) * std::log(p);
}

} // namespace

double focal_loss(const Tensor& probs, const Tensor& mask, const LossConfig& cfg) {
    if (probs.c() != 1) throw InvalidArgument("focal_loss: probs must have one channel");
    check_mask(mask, probs.n(), probs.h(), probs.w(), "focal_loss");
    if (probs.numel() == 0) throw InvalidArgument("focal_loss: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.numel(); ++i) {
        const bool anomalous = mask[i] != real(0);
        const double p = probs[i];
        sum += focal_term(anomalous ? p : 1.0 - p, alpha_for(anomalous, cfg), cfg);
    }
    return sum / static_cast<double>(probs.numel());
}

double focal_loss_logits(const Tensor& logits, const Tensor& mask, const LossConfig& cfg, Tensor* grad_logits) {
    if (logits.c() != 2) throw InvalidArgument("focal_loss_logits: expected 2 logit channels");
    check_mask(mask, logits.n(), logits.h(), logits.w(), "focal_loss_logits");
    const std::size_t plane = logits.shape().plane();
    const double count = static_cast<double>(logits.n()) * plane;
    if (count == 0) throw InvalidArgument("focal_loss_logits: empty input");
    if (grad_logits != nullptr) grad_logits->reset(logits.shape());
    const double gamma = cfg.focal_gamma;
    const double eps = cfg.focal_epsilon;
    double sum = 0.0;
    for (int n = 0; n < logits.n(); ++n) {
        const real* z0 = logits.plane(n, 0);
        const real* z1 = logits.plane(n, 1);
        const real* m = mask.plane(n, 0);
        for (std::size_t i = 0; i < plane; ++i) {
            const bool anomalous = m[i] != real(0);
            // p_t = sigmoid(u) with u the logit margin in favour of the true class
            const double u = anomalous ? static_cast<double>(z1[i]) - z0[i] : static_cast<double>(z0[i]) - z1[i];
            const double p_t = 1.0 / (1.0 + std::exp(-u));
            const double alpha = alpha_for(anomalous, cfg);
            sum += focal_term(p_t, alpha, cfg);
            if (grad_logits == nullptr) continue;
            double du = 0.0;
            if (p_t > eps && p_t < 1.0 - eps) {
                const double q = 1.0 - p_t;
                du = alpha * (gamma * std::pow(q, gamma) * p_t * std::log(p_t) - std::pow(q, gamma + 1.0));
            }
            du /= count;
            const real g1 = static_cast<real>(anomalous ? du : -du);
            grad_logits->plane(n, 1)[i] = g1;
            grad_logits->plane(n, 0)[i] = -g1;
        }
    }
    return sum / count;
}

namespace {

LossBreakdown reconstruction_terms(const Tensor& rgb, const Tensor& recon_rgb, const Tensor& depth,
                                   const Tensor& recon_depth, const LossConfig& cfg, LossGradients* grads) {
    LossBreakdown b;
    Tensor g_ssim;
    Tensor g_mse;
    const bool want = grads != nullptr;
    b.ssim_rgb = ssim_loss(recon_rgb, rgb, cfg, want ? &g_ssim : nullptr);
    b.mse_rgb = mse_loss(recon_rgb, rgb, want ? &g_mse : nullptr);
    b.mse_depth = mse_loss(recon_depth, depth, want ? &grads->recon_depth : nullptr);
    if (want) {
        grads->recon_rgb.reset(recon_rgb.shape());
        for (std::size_t i = 0; i < g_ssim.numel(); ++i) {
            grads->recon_rgb[i] = static_cast<real>(cfg.lambda1 * g_ssim[i] + cfg.lambda2 * g_mse[i]);
        }
        grads->recon_depth *= static_cast<real>(cfg.lambda3);
    }
    return b;
}

void finish(LossBreakdown& b, const LossConfig& cfg) {
    b.total = cfg.lambda1 * b.ssim_rgb + cfg.lambda2 * b.mse_rgb + cfg.lambda3 * b.mse_depth + cfg.lambda4 * b.focal;
}

} // namespace

LossBreakdown total_loss(const Tensor& rgb, const Tensor& recon_rgb, const Tensor& depth, const Tensor& recon_depth,
                         const Tensor& probs, const Tensor& mask, const LossConfig& cfg) {
    LossBreakdown b = reconstruction_terms(rgb, recon_rgb, depth, recon_depth, cfg, nullptr);
    b.focal = focal_loss(probs, mask, cfg);
    finish(b, cfg);
    return b;
}

LossBreakdown total_loss_logits(const Tensor& rgb, const Tensor& recon_rgb, const Tensor& depth,
                                const Tensor& recon_depth, const Tensor& logits, const Tensor& mask,
                                const LossConfig& cfg, LossGradients* grads) {
    LossBreakdown b = reconstruction_terms(rgb, recon_rgb, depth, recon_depth, cfg, grads);
    b.focal = focal_loss_logits(logits, mask, cfg, grads != nullptr ? &grads->logits : nullptr);
    if (grads != nullptr) grads->logits *= static_cast<real>(cfg.lambda4);
    finish(b, cfg);
    return b;
}

} // namespace easynet
