#include "easynet/fusion_gate.hpp"

#include "easynet/error.hpp"

#include <cmath>
#include <string>

namespace easynet {

void GateConfig::validate() const {
    if (reduction < 1) throw ConfigError("gate: reduction must be >= 1");
    if (std::isnan(alpha)) throw ConfigError("gate: alpha is NaN");
}

double information_entropy(std::span<const double> scores) {
    if (scores.empty()) throw InvalidArgument("information_entropy: empty score vector");
    double total = 0.0;
    for (double s : scores) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw InvalidArgument("information_entropy: scores must be finite and nonnegative");
        }
        total += s;
    }
    if (total == 0.0) throw DegenerateInput("information_entropy: all scores are zero");
    double h = 0.0;
    for (double s : scores) {
        if (s > 0.0) {
            const double p = s / total;
            h -= p * std::log(p);
        }
    }
    return h < 0.0 ? 0.0 : h;
}

AttentionScores channel_attention(const Tensor& features, const SqueezeExcitation& se, int n) {
    if (features.numel() == 0 || features.h() == 0 || features.w() == 0) {
        throw InvalidArgument("channel_attention: empty feature map");
    }
    if (!features.all_finite()) throw InvalidData("channel_attention: non-finite features");
    const Tensor one = features.n() == 1 ? features : features.sample(n);
    const Tensor s = se.scores(one);
    AttentionScores out;
    out.scores.assign(s.data().begin(), s.data().end());
    out.entropy = information_entropy(out.scores);
    return out;
}

GateDecision gate_select(const Tensor& stream_rgb, const Tensor& stream_depth, const GateConfig& gate,
                         const SegmentationNet& msn, int n) {
    if (stream_rgb.n() != stream_depth.n() || stream_rgb.h() != stream_depth.h() ||
        stream_rgb.w() != stream_depth.w()) {
        throw InvalidArgument("gate_select: rgb and depth streams are not aligned");
    }
    const Tensor rgb = stream_rgb.sample(n);
    const Tensor depth = stream_depth.sample(n);
    const Tensor* parts[2] = {&rgb, &depth};
    const AttentionScores a_rgb = channel_attention(rgb, msn.se_rgb());
    const AttentionScores a_fused = channel_attention(concat_channels(parts), msn.se_fused());

    GateDecision d;
    d.alpha = gate.alpha;
    d.entropy_rgb = a_rgb.entropy;
    d.entropy_fused = a_fused.entropy;
    if (gate.entropy_mode == EntropyMode::normalized) {
        const double c_rgb = static_cast<double>(a_rgb.scores.size());
        const double c_fused = static_cast<double>(a_fused.scores.size());
        d.entropy_rgb = c_rgb > 1 ? a_rgb.entropy / std::log(c_rgb) : 0.0;
        d.entropy_fused = c_fused > 1 ? a_fused.entropy / std::log(c_fused) : 0.0;
    }
    d.mode = d.entropy_fused > d.entropy_rgb + gate.alpha ? SegMode::fused : SegMode::rgb_only;
    return d;
}

} // namespace easynet
