#pragma once

#include "easynet/layers.hpp"
#include "easynet/segmentation_net.hpp"
#include "easynet/tensor.hpp"

#include <span>
#include <vector>

namespace easynet {

enum class EntropyMode {
    /// Entropy divided by ln C, so paths with different channel counts share a [0,1] scale.
    normalized,
    raw,
};

struct GateConfig {
    /// Threshold adjustment: the fused path wins when H_fused > H_rgb + alpha.
    double alpha = 0.0;
    int reduction = 16;
    EntropyMode entropy_mode = EntropyMode::normalized;

    void validate() const;
};

struct AttentionScores {
    std::vector<double> scores; // post-sigmoid, one per channel
    double entropy = 0.0;       // nats, in [0, ln C]
};

/// Shannon entropy (nats) of scores normalized to sum to one.
/// Throws InvalidArgument on negative or non-finite entries and
/// DegenerateInput when every entry is zero.
double information_entropy(std::span<const double> scores);

/// SE channel scores of sample n of a (N,C,H,W) map, with their entropy.
AttentionScores channel_attention(const Tensor& features, const SqueezeExcitation& se, int n = 0);

struct GateDecision {
    SegMode mode = SegMode::rgb_only;
    double entropy_fused = 0.0; // as compared (normalized or raw)
    double entropy_rgb = 0.0;
    double alpha = 0.0;
};

/// Chooses the segmentation path for sample n from the segmentation
/// streams' outputs: fused iff f_IE(SE_fused([s_rgb, s_depth])) > f_IE(SE_rgb(s_rgb)) + alpha.
GateDecision gate_select(const Tensor& stream_rgb, const Tensor& stream_depth, const GateConfig& gate,
                         const SegmentationNet& msn, int n = 0);

} // namespace easynet
