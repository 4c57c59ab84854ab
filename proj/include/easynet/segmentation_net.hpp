#pragma once

#include "easynet/layers.hpp"
#include "easynet/reconstruction_net.hpp"
#include "easynet/tensor.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace easynet {

struct MsnConfig {
    int hidden_width = 128;
    std::uint64_t seed = 1;

    void validate() const;
};

enum class SegMode { fused, rgb_only };

const char* to_string(SegMode mode);

/// Per-pixel anomaly probabilities plus the image-level summary.
struct AnomalyMap {
    Tensor probs; // (1,1,H,W), anomaly-class probability
    double image_score = 0.0;
    bool gate_used_depth = false;
};

/// Softmax over the two logit channels, keeping the anomaly channel (index 1).
/// Throws InvalidData on non-finite logits.
AnomalyMap anomaly_map_from_logits(const Tensor& logits);
/// Batched variant: (N,2,H,W) -> (N,1,H,W).
Tensor anomaly_probs(const Tensor& logits);

/// The segmentation network. Every layer is a 1×1 convolution, so each
/// output pixel depends only on the features at that pixel.
///
///   rgb stream    concat(f_rgb)   -> [1x1, ReLU, 1x1, ReLU] -> s_rgb   (hidden)
///   depth stream  concat(f_depth) -> [1x1, ReLU, 1x1, ReLU] -> s_depth (hidden)
///   rgb head      SE_rgb(s_rgb)                 -> [1x1, ReLU, 1x1] -> 2 logits
///   fused head    SE_fused(concat(s_rgb, s_depth)) -> [1x1, ReLU, 1x1] -> 2 logits
///
/// The SE blocks sit on the head inputs; their channel scores also drive
/// the entropy gate at inference.
class SegmentationNet {
public:
    struct StreamTrace {
        Tensor input;
        Tensor hidden;
        Tensor output;
        std::vector<int> tap_channels;
    };
    struct HeadTrace {
        Tensor input;
        SqueezeExcitation::Trace se;
        Tensor scaled;
        Tensor hidden;
        Tensor logits;
    };
    struct Forward {
        StreamTrace rgb;
        std::optional<StreamTrace> depth;
        std::optional<HeadTrace> rgb_head;
        std::optional<HeadTrace> fused_head;
    };

    SegmentationNet() = default;
    SegmentationNet(const MsnConfig& config, int rgb_channels, int depth_channels, int se_reduction);

    /// Streams only; the depth stream runs when with_depth is set.
    Forward streams(const FeatureBundle& bundle, bool with_depth) const;
    /// Runs the head for `mode` on top of precomputed streams.
    void run_head(Forward& fwd, SegMode mode) const;
    /// Streams plus both heads, as used during training.
    Forward forward_both(const FeatureBundle& bundle) const;

    /// (N,2,H,W) logits for one mode. rgb_only never reads f_depth.
    Tensor logits(const FeatureBundle& bundle, SegMode mode) const;

    /// Accumulates parameter gradients for whichever heads have a logit
    /// gradient, and returns gradients w.r.t. every tap map.
    void backward(const Forward& fwd, const Tensor* grad_logits_rgb, const Tensor* grad_logits_fused,
                  std::vector<Tensor>& grad_f_rgb, std::vector<Tensor>& grad_f_depth);

    const MsnConfig& config() const { return config_; }
    const SqueezeExcitation& se_rgb() const { return se_rgb_; }
    const SqueezeExcitation& se_fused() const { return se_fused_; }
    SqueezeExcitation& se_rgb() { return se_rgb_; }
    SqueezeExcitation& se_fused() { return se_fused_; }
    Conv2d& layer(const std::string& name);

    void collect(ParameterList& out);
    void collect(ConstParameterList& out) const;

private:
    StreamTrace run_stream(const std::vector<Tensor>& taps, const Conv2d& l1, const Conv2d& l2) const;
    HeadTrace run_head(const Tensor& input, const SqueezeExcitation& se, const Conv2d& l1,
                       const Conv2d& l2) const;
    Tensor backward_head(const HeadTrace& t, const Tensor& grad_logits, SqueezeExcitation& se, Conv2d& l1,
                         Conv2d& l2);
    Tensor backward_stream(const StreamTrace& t, const Tensor& grad_out, Conv2d& l1, Conv2d& l2);

    MsnConfig config_;
    int rgb_channels_ = 0;
    int depth_channels_ = 0;
    Conv2d rgb1_, rgb2_, depth1_, depth2_;
    SqueezeExcitation se_rgb_, se_fused_;
    Conv2d head_rgb1_, head_rgb2_, head_fused1_, head_fused2_;
};

} // namespace easynet
