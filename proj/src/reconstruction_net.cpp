#include "easynet/reconstruction_net.hpp"

#include "easynet/error.hpp"
#include "easynet/kernels.hpp"

#include <string>

namespace easynet {

void MrnConfig::validate() const {
    if (tap_layers < 1 || levels < tap_layers) {
        throw ConfigError("mrn: need levels >= tap_layers >= 1 (levels=" + std::to_string(levels) +
                          ", tap_layers=" + std::to_string(tap_layers) + ")");
    }
    if (levels > 12 || base_width < 1) throw ConfigError("mrn: invalid levels or base_width");
    if (input_size <= 0 || input_size % (1 << levels) != 0) {
        throw ConfigError("mrn: input_size " + std::to_string(input_size) + " is not divisible by 2^" +
                          std::to_string(levels));
    }
}

ReconstructionStream::ReconstructionStream(const std::string& name, int in_channels,
                                           OutputActivation activation, const MrnConfig& config,
                                           std::mt19937_64& rng)
    : in_channels_(in_channels),
      levels_(config.levels),
      tap_layers_(config.tap_layers),
      input_size_(config.input_size),
      activation_(activation) {
    config.validate();
    const int L = config.levels;
    for (int i = 0; i < L; ++i) {
        const int cin = i == 0 ? in_channels : config.width_at(i - 1);
        enc_.emplace_back(name + ".enc" + std::to_string(i), cin, config.width_at(i), 3, rng);
    }
    bottleneck_ = Conv2d(name + ".bottleneck", config.width_at(L - 1), config.width_at(L - 1), 3, rng);
    for (int j = 0; j < L; ++j) {
        const int cin = j == 0 ? config.width_at(L - 1) : config.width_at(L - j);
        dec_.emplace_back(name + ".dec" + std::to_string(j), cin, config.width_at(L - 1 - j), 3, rng);
    }
    head_ = Conv2d(name + ".head", config.width_at(0), in_channels, 1, rng);
}

ReconstructionStream::Output ReconstructionStream::forward(const Tensor& x) const {
    Output out;
    Trace& t = out.trace;
    t.input = x;
    t.enc.resize(levels_);
    t.pooled.resize(levels_);
    t.dec_in.resize(levels_);
    t.dec.resize(levels_);

    const Tensor* current = &t.input;
    for (int i = 0; i < levels_; ++i) {
        t.enc[i] = enc_[i].forward(*current);
        kernels::relu_inplace(t.enc[i]);
        kernels::maxpool2_forward(t.enc[i], t.pooled[i]);
        current = &t.pooled[i];
    }
    t.bottleneck = bottleneck_.forward(*current);
    kernels::relu_inplace(t.bottleneck);
    current = &t.bottleneck;
    for (int j = 0; j < levels_; ++j) {
        kernels::upsample_nearest2_forward(*current, t.dec_in[j]);
        t.dec[j] = dec_[j].forward(t.dec_in[j]);
        kernels::relu_inplace(t.dec[j]);
        current = &t.dec[j];
    }
    t.output = head_.forward(*current);
    if (activation_ == OutputActivation::sigmoid) kernels::sigmoid_inplace(t.output);
    out.recon = t.output;

    auto tap = [&](const Tensor& src) {
        if (src.h() == input_size_ && src.w() == input_size_) return src;
        Tensor up;
        kernels::upsample_bilinear_forward(src, input_size_, input_size_, up);
        return up;
    };
    for (int i = 0; i < tap_layers_; ++i) out.taps.push_back(tap(t.enc[i]));
    for (int j = levels_ - tap_layers_; j < levels_; ++j) out.taps.push_back(tap(t.dec[j]));
    return out;
}

Tensor ReconstructionStream::decode(const Tensor& bottleneck) const {
    Tensor current = bottleneck;
    for (int j = 0; j < levels_; ++j) {
        Tensor up;
        kernels::upsample_nearest2_forward(current, up);
        current = dec_[j].forward(up);
        kernels::relu_inplace(current);
    }
    Tensor out = head_.forward(current);
    if (activation_ == OutputActivation::sigmoid) kernels::sigmoid_inplace(out);
    return out;
}

void ReconstructionStream::backward(const Trace& t, const Tensor& grad_recon,
                                    const std::vector<Tensor>& grad_taps) {
    const bool has_taps = !grad_taps.empty();
    if (has_taps && grad_taps.size() != static_cast<std::size_t>(2 * tap_layers_)) {
        throw InvalidArgument("stream backward: expected " + std::to_string(2 * tap_layers_) + " tap gradients");
    }
    // Adds a full-resolution tap gradient into the gradient of a native-resolution activation.
    auto add_tap = [&](const Tensor& g_full, Tensor& g_native) {
        if (g_full.h() == g_native.h() && g_full.w() == g_native.w()) {
            g_native += g_full;
            return;
        }
        Tensor down(g_native.shape());
        kernels::upsample_bilinear_backward(g_full, down);
        g_native += down;
    };

    Tensor grad = grad_recon;
    if (activation_ == OutputActivation::sigmoid) kernels::sigmoid_backward(t.output, grad);
    Tensor g_act;
    head_.backward(t.dec[levels_ - 1], grad, &g_act);

    for (int j = levels_ - 1; j >= 0; --j) {
        const int tap_index = j - (levels_ - tap_layers_);
        if (has_taps && tap_index >= 0) add_tap(grad_taps[tap_layers_ + tap_index], g_act);
        kernels::relu_backward(t.dec[j], g_act);
        Tensor g_in;
        dec_[j].backward(t.dec_in[j], g_act, &g_in);
        kernels::upsample_nearest2_backward(g_in, g_act);
    }
    kernels::relu_backward(t.bottleneck, g_act);
    Tensor g_pooled;
    bottleneck_.backward(t.pooled[levels_ - 1], g_act, &g_pooled);

    for (int i = levels_ - 1; i >= 0; --i) {
        kernels::maxpool2_backward(t.enc[i], g_pooled, g_act);
        if (has_taps && i < tap_layers_) add_tap(grad_taps[i], g_act);
        kernels::relu_backward(t.enc[i], g_act);
        const Tensor& input = i == 0 ? t.input : t.pooled[i - 1];
        enc_[i].backward(input, g_act, i == 0 ? nullptr : &g_pooled);
    }
}

std::vector<int> ReconstructionStream::tap_channels() const {
    std::vector<int> out;
    for (int i = 0; i < tap_layers_; ++i) out.push_back(enc_[i].out_channels());
    for (int j = levels_ - tap_layers_; j < levels_; ++j) out.push_back(dec_[j].out_channels());
    return out;
}

void ReconstructionStream::collect(ParameterList& out) {
    for (auto& c : enc_) c.collect(out);
    bottleneck_.collect(out);
    for (auto& c : dec_) c.collect(out);
    head_.collect(out);
}

void ReconstructionStream::collect(ConstParameterList& out) const {
    for (const auto& c : enc_) c.collect(out);
    bottleneck_.collect(out);
    for (const auto& c : dec_) c.collect(out);
    head_.collect(out);
}

ReconstructionNet::ReconstructionNet(const MrnConfig& config) : config_(config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    rgb_ = ReconstructionStream("mrn.rgb", 3, OutputActivation::sigmoid, config, rng);
    depth_ = ReconstructionStream("mrn.depth", 1, OutputActivation::identity, config, rng);
}

ReconstructionNet::Forward ReconstructionNet::forward(const Tensor& rgb, const Tensor& depth) const {
    const int s = config_.input_size;
    if (rgb.c() != 3 || rgb.h() != s || rgb.w() != s || depth.c() != 1 || depth.h() != s ||
        depth.w() != s || depth.n() != rgb.n()) {
        throw InvalidArgument("mrn forward: expected (N,3," + std::to_string(s) + "," + std::to_string(s) +
                              ") and (N,1,...) inputs, got " + rgb.shape().str() + " and " +
                              depth.shape().str());
    }
    if (!rgb.all_finite() || !depth.all_finite()) {
        throw InvalidData("mrn forward: " + std::to_string(rgb.count_nonfinite() + depth.count_nonfinite()) +
                          " non-finite input values");
    }
    Forward out;
    auto r = rgb_.forward(rgb);
    auto d = depth_.forward(depth);
    out.bundle.f_rgb = std::move(r.taps);
    out.bundle.f_depth = std::move(d.taps);
    out.bundle.recon_rgb = std::move(r.recon);
    out.bundle.recon_depth = std::move(d.recon);
    out.rgb_trace = std::move(r.trace);
    out.depth_trace = std::move(d.trace);
    return out;
}

void ReconstructionNet::backward(const Forward& fwd, const Tensor& grad_recon_rgb,
                                 const Tensor& grad_recon_depth, const std::vector<Tensor>& grad_f_rgb,
                                 const std::vector<Tensor>& grad_f_depth) {
    rgb_.backward(fwd.rgb_trace, grad_recon_rgb, grad_f_rgb);
    depth_.backward(fwd.depth_trace, grad_recon_depth, grad_f_depth);
}

void ReconstructionNet::collect(ParameterList& out) {
    rgb_.collect(out);
    depth_.collect(out);
}

void ReconstructionNet::collect(ConstParameterList& out) const {
    rgb_.collect(out);
    depth_.collect(out);
}

std::size_t parameter_count(const ConstParameterList& params) {
    std::size_t total = 0;
    for (const Parameter* p : params) total += p->value.numel();
    return total;
}

} // namespace easynet
