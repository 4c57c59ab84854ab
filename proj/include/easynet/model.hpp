#pragma once

#include "easynet/fusion_gate.hpp"
#include "easynet/metrics.hpp"
#include "easynet/reconstruction_net.hpp"
#include "easynet/sample.hpp"
#include "easynet/segmentation_net.hpp"

namespace easynet {

struct ModelConfig {
    MrnConfig mrn;
    MsnConfig msn;
    int se_reduction = 16;

    void validate() const;
};

/// Gate Close = RGB only, Gate Open = always fused, Gate Control = entropy rule.
enum class GateMode { control, open, close };

const char* to_string(GateMode mode);
GateMode parse_gate_mode(const std::string& text);

struct Inference {
    AnomalyMap map;
    GateDecision gate;
};

/// MRN and MSN together.
class EasyNet {
public:
    EasyNet() = default;
    explicit EasyNet(const ModelConfig& config);

    /// Gated single-sample inference on the raw (un-augmented) input.
    /// Throws CheckpointError when the sample size differs from the model's input size.
    Inference infer(const RgbdSample& sample, const GateConfig& gate, GateMode mode, const ScoreConfig& score) const;

    const ModelConfig& config() const { return config_; }
    ReconstructionNet& mrn() { return mrn_; }
    const ReconstructionNet& mrn() const { return mrn_; }
    SegmentationNet& msn() { return msn_; }
    const SegmentationNet& msn() const { return msn_; }

    void collect(ParameterList& out);
    void collect(ConstParameterList& out) const;

private:
    ModelConfig config_;
    ReconstructionNet mrn_;
    SegmentationNet msn_;
};

/// (1,1,H,W) tensor to a Map2D.
Map2D to_map(const Tensor& plane);

} // namespace easynet
