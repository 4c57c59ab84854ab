#pragma once

#include "easynet/layers.hpp"
#include "easynet/tensor.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace easynet {

struct MrnConfig {
    int input_size = 256;
    int levels = 6;
    int base_width = 32;
    /// Encoder and decoder blocks tapped per modality.
    int tap_layers = 2;
    std::uint64_t seed = 0;

    /// Throws ConfigError unless levels >= tap_layers >= 1 and input_size
    /// is divisible by 2^levels.
    void validate() const;
    int width_at(int level) const { return base_width << level; }
};

enum class OutputActivation { sigmoid, identity };

/// One modality's skip-free encoder-decoder.
///
/// Layer table (w_i = base_width * 2^i, S = input_size, L = levels):
///
///   enc[i], i < L    conv3x3(c_i -> w_i) + ReLU at S/2^i, then maxpool 2x2
///                    (c_0 = input channels, c_i = w_{i-1})
///   bottleneck       conv3x3(w_{L-1} -> w_{L-1}) + ReLU at S/2^L
///   dec[j], j < L    nearest upsample x2, conv3x3(d_j -> w_{L-1-j}) + ReLU
///                    (d_0 = w_{L-1}, d_j = w_{L-j})
///   head             conv1x1(w_0 -> out channels) + output activation
///
/// Taps are the post-ReLU outputs of enc[0..T) followed by dec[L-T..L), each
/// bilinearly upsampled to S×S. The decoder only ever sees the bottleneck.
class ReconstructionStream {
public:
    struct Trace {
        Tensor input;
        std::vector<Tensor> enc;    // post-ReLU, before pooling
        std::vector<Tensor> pooled; // pooled[i] = maxpool(enc[i])
        Tensor bottleneck;
        std::vector<Tensor> dec_in; // upsampled inputs of dec[j]
        std::vector<Tensor> dec;    // post-ReLU outputs of dec[j]
        Tensor output;              // after the output activation
    };

    struct Output {
        Tensor recon;
        std::vector<Tensor> taps; // full resolution, encoder order then decoder order
        Trace trace;
    };

    ReconstructionStream() = default;
    ReconstructionStream(const std::string& name, int in_channels, OutputActivation activation,
                         const MrnConfig& config, std::mt19937_64& rng);

    Output forward(const Tensor& x) const;
    /// Runs only the decoder and head from a bottleneck activation.
    Tensor decode(const Tensor& bottleneck) const;

    /// grad_taps may be empty (reconstruction loss only) or hold one gradient per tap.
    void backward(const Trace& trace, const Tensor& grad_recon, const std::vector<Tensor>& grad_taps);

    int in_channels() const { return in_channels_; }
    std::vector<int> tap_channels() const;

    void collect(ParameterList& out);
    void collect(ConstParameterList& out) const;

private:
    int in_channels_ = 0;
    int levels_ = 0;
    int tap_layers_ = 0;
    int input_size_ = 0;
    OutputActivation activation_ = OutputActivation::identity;
    std::vector<Conv2d> enc_;
    Conv2d bottleneck_;
    std::vector<Conv2d> dec_;
    Conv2d head_;
};

/// Everything the segmentation network consumes for one batch.
struct FeatureBundle {
    std::vector<Tensor> f_rgb;
    std::vector<Tensor> f_depth;
    Tensor recon_rgb;
    Tensor recon_depth;
};

/// The two-stream reconstruction network: RGB (3 channels, sigmoid output)
/// and depth (1 channel, identity output) with independent weights.
class ReconstructionNet {
public:
    struct Forward {
        FeatureBundle bundle;
        ReconstructionStream::Trace rgb_trace;
        ReconstructionStream::Trace depth_trace;
    };

    ReconstructionNet() = default;
    /// Weights drawn deterministically from config.seed.
    explicit ReconstructionNet(const MrnConfig& config);

    /// Throws InvalidArgument on mis-sized inputs and InvalidData on non-finite values.
    Forward forward(const Tensor& rgb, const Tensor& depth) const;
    void backward(const Forward& fwd, const Tensor& grad_recon_rgb, const Tensor& grad_recon_depth,
                  const std::vector<Tensor>& grad_f_rgb, const std::vector<Tensor>& grad_f_depth);

    const MrnConfig& config() const { return config_; }
    const ReconstructionStream& rgb_stream() const { return rgb_; }
    const ReconstructionStream& depth_stream() const { return depth_; }

    void collect(ParameterList& out);
    void collect(ConstParameterList& out) const;

private:
    MrnConfig config_;
    ReconstructionStream rgb_;
    ReconstructionStream depth_;
};

/// Sum of parameter sizes.
std::size_t parameter_count(const ConstParameterList& params);

} // namespace easynet
