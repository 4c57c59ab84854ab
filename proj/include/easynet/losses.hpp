#pragma once

#include "easynet/tensor.hpp"

namespace easynet {

struct LossConfig {
    double lambda1 = 1.0; // SSIM, RGB
    double lambda2 = 1.0; // MSE, RGB
    double lambda3 = 1.0; // MSE, depth
    double lambda4 = 1.0; // focal
    /// α_t for the anomaly class (t = 1) and the normal class (t = 0).
    double focal_alpha_anomaly = 0.25;
    double focal_alpha_normal = 0.75;
    double focal_gamma = 2.0;
    double focal_epsilon = 1e-7;
    int ssim_window = 11;
    double ssim_sigma = 1.5;
    double ssim_c1 = 0.01 * 0.01;
    double ssim_c2 = 0.03 * 0.03;

    void validate() const;
};

/// 1 - mean SSIM over every pixel of every (sample, channel) plane.
/// Local statistics use a Gaussian window with edge-replicated borders.
/// When grad_x is non-null it receives d(loss)/dx.
double ssim_loss(const Tensor& x, const Tensor& y, const LossConfig& cfg, Tensor* grad_x = nullptr);

/// Mean squared difference; grad_pred receives d(loss)/d(pred).
double mse_loss(const Tensor& pred, const Tensor& target, Tensor* grad_pred = nullptr);

/// Mean of -α_t (1 - p_t)^γ log p_t over pixels, with p_t = probs where
/// mask = 1 and 1 - probs elsewhere, clamped to [ε, 1 - ε].
double focal_loss(const Tensor& probs, const Tensor& mask, const LossConfig& cfg);

/// Focal loss on 2-channel logits (anomaly probability = softmax channel 1).
/// grad_logits receives d(loss)/d(logits).
double focal_loss_logits(const Tensor& logits, const Tensor& mask, const LossConfig& cfg,
                         Tensor* grad_logits = nullptr);

struct LossBreakdown {
    double ssim_rgb = 0.0;
    double mse_rgb = 0.0;
    double mse_depth = 0.0;
    double focal = 0.0;
    double total = 0.0;
};

struct LossGradients {
    Tensor recon_rgb;
    Tensor recon_depth;
    Tensor logits;
};

/// λ1·SSIM(rgb) + λ2·MSE(rgb) + λ3·MSE(depth) + λ4·focal, from probabilities.
LossBreakdown total_loss(const Tensor& rgb, const Tensor& recon_rgb, const Tensor& depth,
                         const Tensor& recon_depth, const Tensor& probs, const Tensor& mask,
                         const LossConfig& cfg);

/// Same total from logits, filling grads when non-null.
LossBreakdown total_loss_logits(const Tensor& rgb, const Tensor& recon_rgb, const Tensor& depth,
                                const Tensor& recon_depth, const Tensor& logits, const Tensor& mask,
                                const LossConfig& cfg, LossGradients* grads = nullptr);

} // namespace easynet
