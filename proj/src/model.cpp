#include "easynet/model.hpp"

#include "easynet/error.hpp"

#include <numeric>

namespace easynet {

void ModelConfig::validate() const {
    mrn.validate();
    msn.validate();
    if (se_reduction < 1) throw ConfigError("model: se_reduction must be >= 1");
}

const char* to_string(GateMode mode) {
    switch (mode) {
    case GateMode::control: return "control";
    case GateMode::open: return "open";
    case GateMode::close: return "close";
    }
    return "?";
}

GateMode parse_gate_mode(const std::string& text) {
    if (text == "control") return GateMode::control;
    if (text == "open") return GateMode::open;
    if (text == "close") return GateMode::close;
    throw ConfigError("unknown gate mode '" + text + "' (expected control, open or close)");
}

EasyNet::EasyNet(const ModelConfig& config) : config_(config) {
    config.validate();
    mrn_ = ReconstructionNet(config.mrn);
    const auto sum = [](const std::vector<int>& v) { return std::accumulate(v.begin(), v.end(), 0); };
    msn_ = SegmentationNet(config.msn, sum(mrn_.rgb_stream().tap_channels()), sum(mrn_.depth_stream().tap_channels()),
                           config.se_reduction);
}

Inference EasyNet::infer(const RgbdSample& sample, const GateConfig& gate, GateMode mode,
                         const ScoreConfig& score) const {
    const int s = config_.mrn.input_size;
    if (sample.height() != s || sample.width() != s) {
        throw CheckpointError("model expects " + std::to_string(s) + "x" + std::to_string(s) + " inputs, sample " +
                              sample.id + " is " + std::to_string(sample.height()) + "x" +
                              std::to_string(sample.width()));
    }
    const auto fwd = mrn_.forward(sample.rgb, sample.depth);
    SegmentationNet::Forward seg = msn_.streams(fwd.bundle, mode != GateMode::close);

    Inference out;
    if (mode == GateMode::control) {
        out.gate = gate_select(seg.rgb.output, seg.depth->output, gate, msn_);
    } else {
        out.gate.alpha = gate.alpha;
        out.gate.mode = mode == GateMode::open ? SegMode::fused : SegMode::rgb_only;
    }
    msn_.run_head(seg, out.gate.mode);
    const Tensor& logits = out.gate.mode == SegMode::fused ? seg.fused_head->logits : seg.rgb_head->logits;
    out.map = anomaly_map_from_logits(logits);
    out.map.gate_used_depth = out.gate.mode == SegMode::fused;
    out.map.image_score = image_score(to_map(out.map.probs), score);
    return out;
}

void EasyNet::collect(ParameterList& out) {
    mrn_.collect(out);
    msn_.collect(out);
}

void EasyNet::collect(ConstParameterList& out) const {
    mrn_.collect(out);
    msn_.collect(out);
}

Map2D to_map(const Tensor& plane) {
    if (plane.n() != 1 || plane.c() != 1) throw InvalidArgument("to_map: expected (1,1,H,W), got " + plane.shape().str());
    Map2D m(plane.h(), plane.w());
    for (std::size_t i = 0; i < plane.numel(); ++i) m.values[i] = plane[i];
    return m;
}

} // namespace easynet
