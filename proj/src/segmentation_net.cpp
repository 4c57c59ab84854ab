#include "easynet/segmentation_net.hpp"

#include "easynet/error.hpp"
#include "easynet/kernels.hpp"

#include <cmath>
#include <random>

namespace easynet {

void MsnConfig::validate() const {
    if (hidden_width < 2) throw ConfigError("msn: hidden_width must be >= 2");
}

const char* to_string(SegMode mode) { return mode == SegMode::fused ? "fused" : "rgb_only"; }

Tensor anomaly_probs(const Tensor& logits) {
    if (logits.c() != 2) throw InvalidArgument("anomaly_probs: expected 2 logit channels, got " + logits.shape().str());
    if (!logits.all_finite()) {
        throw InvalidData("anomaly_probs: " + std::to_string(logits.count_nonfinite()) + " non-finite logits");
    }
    Tensor probs({logits.n(), 1, logits.h(), logits.w()});
    const std::size_t plane = logits.shape().plane();
    for (int n = 0; n < logits.n(); ++n) {
        const real* normal = logits.plane(n, 0);
        const real* anomaly = logits.plane(n, 1);
        real* out = probs.plane(n, 0);
        for (std::size_t i = 0; i < plane; ++i) {
            // softmax channel 1 = sigmoid(z1 - z0), evaluated in double
            const double d = static_cast<double>(anomaly[i]) - normal[i];
            out[i] = static_cast<real>(1.0 / (1.0 + std::exp(-d)));
        }
    }
    return probs;
}

AnomalyMap anomaly_map_from_logits(const Tensor& logits) {
    if (logits.n() != 1) throw InvalidArgument("anomaly_map_from_logits: expected a single sample");
    AnomalyMap map;
    map.probs = anomaly_probs(logits);
    return map;
}

SegmentationNet::SegmentationNet(const MsnConfig& config, int rgb_channels, int depth_channels,
                                 int se_reduction)
    : config_(config), rgb_channels_(rgb_channels), depth_channels_(depth_channels) {
    config.validate();
    const int h = config.hidden_width;
    std::mt19937_64 rng(config.seed);
    rgb1_ = Conv2d("msn.rgb.fc1", rgb_channels, h, 1, rng);
    rgb2_ = Conv2d("msn.rgb.fc2", h, h, 1, rng);
    depth1_ = Conv2d("msn.depth.fc1", depth_channels, h, 1, rng);
    depth2_ = Conv2d("msn.depth.fc2", h, h, 1, rng);
    se_rgb_ = SqueezeExcitation("msn.se_rgb", h, se_reduction, rng);
    se_fused_ = SqueezeExcitation("msn.se_fused", 2 * h, se_reduction, rng);
    head_rgb1_ = Conv2d("msn.head_rgb.fc1", h, h, 1, rng);
    head_rgb2_ = Conv2d("msn.head_rgb.fc2", h, 2, 1, rng);
    head_fused1_ = Conv2d("msn.head_fused.fc1", 2 * h, h, 1, rng);
    head_fused2_ = Conv2d("msn.head_fused.fc2", h, 2, 1, rng);
}

SegmentationNet::StreamTrace SegmentationNet::run_stream(const std::vector<Tensor>& taps, const Conv2d& l1,
                                                         const Conv2d& l2) const {
    std::vector<const Tensor*> parts;
    StreamTrace t;
    for (const Tensor& tap : taps) {
        parts.push_back(&tap);
        t.tap_channels.push_back(tap.c());
    }
    t.input = concat_channels(parts);
    if (t.input.c() != l1.in_channels()) {
        throw InvalidArgument("msn: stream expects " + std::to_string(l1.in_channels()) + " tap channels, got " +
                              std::to_string(t.input.c()));
    }
    t.hidden = l1.forward(t.input);
    kernels::relu_inplace(t.hidden);
    t.output = l2.forward(t.hidden);
    kernels::relu_inplace(t.output);
    return t;
}

SegmentationNet::HeadTrace SegmentationNet::run_head(const Tensor& input, const SqueezeExcitation& se,
                                                     const Conv2d& l1, const Conv2d& l2) const {
    HeadTrace t;
    t.input = input;
    t.scaled = se.forward(t.input, t.se);
    t.hidden = l1.forward(t.scaled);
    kernels::relu_inplace(t.hidden);
    t.logits = l2.forward(t.hidden);
    return t;
}

SegmentationNet::Forward SegmentationNet::streams(const FeatureBundle& bundle, bool with_depth) const {
    auto check = [](const std::vector<Tensor>& maps, const char* which) {
        if (maps.empty()) throw InvalidArgument(std::string("msn: no ") + which + " feature maps");
        for (const Tensor& m : maps) {
            if (m.n() != maps.front().n() || m.h() != maps.front().h() || m.w() != maps.front().w()) {
                throw InvalidArgument(std::string("msn: ") + which + " feature maps have mismatched spatial sizes");
            }
        }
    };
    check(bundle.f_rgb, "rgb");
    Forward fwd;
    fwd.rgb = run_stream(bundle.f_rgb, rgb1_, rgb2_);
    if (with_depth) {
        check(bundle.f_depth, "depth");
        const Tensor& a = bundle.f_rgb.front();
        const Tensor& b = bundle.f_depth.front();
        if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
            throw InvalidArgument("msn: rgb and depth feature maps are not aligned");
        }
        fwd.depth = run_stream(bundle.f_depth, depth1_, depth2_);
    }
    return fwd;
}

void SegmentationNet::run_head(Forward& fwd, SegMode mode) const {
    if (mode == SegMode::rgb_only) {
        fwd.rgb_head = run_head(fwd.rgb.output, se_rgb_, head_rgb1_, head_rgb2_);
        return;
    }
    if (!fwd.depth) throw InvalidArgument("msn: fused head needs the depth stream");
    const Tensor* parts[2] = {&fwd.rgb.output, &fwd.depth->output};
    fwd.fused_head = run_head(concat_channels(parts), se_fused_, head_fused1_, head_fused2_);
}

SegmentationNet::Forward SegmentationNet::forward_both(const FeatureBundle& bundle) const {
    Forward fwd = streams(bundle, true);
    run_head(fwd, SegMode::rgb_only);
    run_head(fwd, SegMode::fused);
    return fwd;
}

Tensor SegmentationNet::logits(const FeatureBundle& bundle, SegMode mode) const {
    Forward fwd = streams(bundle, mode == SegMode::fused);
    run_head(fwd, mode);
    return mode == SegMode::fused ? fwd.fused_head->logits : fwd.rgb_head->logits;
}

Tensor SegmentationNet::backward_head(const HeadTrace& t, const Tensor& grad_logits, SqueezeExcitation& se,
                                      Conv2d& l1, Conv2d& l2) {
    Tensor g_hidden;
    l2.backward(t.hidden, grad_logits, &g_hidden);
    kernels::relu_backward(t.hidden, g_hidden);
    Tensor g_scaled;
    l1.backward(t.scaled, g_hidden, &g_scaled);
    Tensor g_input;
    se.backward(t.input, t.se, g_scaled, g_input);
    return g_input;
}

Tensor SegmentationNet::backward_stream(const StreamTrace& t, const Tensor& grad_out, Conv2d& l1, Conv2d& l2) {
    Tensor g = grad_out;
    kernels::relu_backward(t.output, g);
    Tensor g_hidden;
    l2.backward(t.hidden, g, &g_hidden);
    kernels::relu_backward(t.hidden, g_hidden);
    Tensor g_input;
    l1.backward(t.input, g_hidden, &g_input);
    return g_input;
}

void SegmentationNet::backward(const Forward& fwd, const Tensor* grad_logits_rgb, const Tensor* grad_logits_fused,
                               std::vector<Tensor>& grad_f_rgb, std::vector<Tensor>& grad_f_depth) {
    const int h = config_.hidden_width;
    Tensor g_rgb_out(fwd.rgb.output.shape());
    std::optional<Tensor> g_depth_out;

    if (grad_logits_rgb != nullptr) {
        if (!fwd.rgb_head) throw InvalidArgument("msn backward: rgb head was not run");
        g_rgb_out += backward_head(*fwd.rgb_head, *grad_logits_rgb, se_rgb_, head_rgb1_, head_rgb2_);
    }
    if (grad_logits_fused != nullptr) {
        if (!fwd.fused_head) throw InvalidArgument("msn backward: fused head was not run");
        const Tensor g_in = backward_head(*fwd.fused_head, *grad_logits_fused, se_fused_, head_fused1_, head_fused2_);
        g_rgb_out += slice_channels(g_in, 0, h);
        g_depth_out = slice_channels(g_in, h, h);
    }

    auto split = [](const Tensor& g, const std::vector<int>& channels) {
        std::vector<Tensor> out;
        int c0 = 0;
        for (int c : channels) {
            out.push_back(slice_channels(g, c0, c));
            c0 += c;
        }
        return out;
    };
    const Tensor g_rgb_in = backward_stream(fwd.rgb, g_rgb_out, rgb1_, rgb2_);
    grad_f_rgb = split(g_rgb_in, fwd.rgb.tap_channels);
    grad_f_depth.clear();
    if (g_depth_out && fwd.depth) {
        const Tensor g_depth_in = backward_stream(*fwd.depth, *g_depth_out, depth1_, depth2_);
        grad_f_depth = split(g_depth_in, fwd.depth->tap_channels);
    }
}

Conv2d& SegmentationNet::layer(const std::string& name) {
    if (name == "rgb.fc1") return rgb1_;
    if (name == "rgb.fc2") return rgb2_;
    if (name == "depth.fc1") return depth1_;
    if (name == "depth.fc2") return depth2_;
    if (name == "head_rgb.fc1") return head_rgb1_;
    if (name == "head_rgb.fc2") return head_rgb2_;
    if (name == "head_fused.fc1") return head_fused1_;
    if (name == "head_fused.fc2") return head_fused2_;
    throw InvalidArgument("msn: unknown layer " + name);
}

void SegmentationNet::collect(ParameterList& out) {
    rgb1_.collect(out);
    rgb2_.collect(out);
    depth1_.collect(out);
    depth2_.collect(out);
    se_rgb_.collect(out);
    se_fused_.collect(out);
    head_rgb1_.collect(out);
    head_rgb2_.collect(out);
    head_fused1_.collect(out);
    head_fused2_.collect(out);
}

void SegmentationNet::collect(ConstParameterList& out) const {
    rgb1_.collect(out);
    rgb2_.collect(out);
    depth1_.collect(out);
    depth2_.collect(out);
    se_rgb_.collect(out);
    se_fused_.collect(out);
    head_rgb1_.collect(out);
    head_rgb2_.collect(out);
    head_fused1_.collect(out);
    head_fused2_.collect(out);
}

} // namespace easynet
