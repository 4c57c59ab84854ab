#include "easynet/error.hpp"
#include "easynet/model.hpp"
#include "easynet/reconstruction_net.hpp"
#include "easynet/segmentation_net.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace easynet;

namespace {

MrnConfig desk_mrn() {
    MrnConfig c;
    c.input_size = 64;
    c.levels = 4;
    c.base_width = 16;
    return c;
}

MrnConfig micro_mrn() {
    MrnConfig c;
    c.input_size = 8;
    c.levels = 2;
    c.base_width = 4;
    return c;
}

ModelConfig micro_model() {
    ModelConfig m;
    m.mrn = micro_mrn();
    m.msn.hidden_width = 6;
    m.se_reduction = 2;
    return m;
}

bool same_parameters(const ConstParameterList& a, const ConstParameterList& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i]->name != b[i]->name || !test::bit_equal(a[i]->value, b[i]->value)) return false;
    }
    return true;
}

void set_weights(Conv2d& layer, std::initializer_list<double> w, std::initializer_list<double> b) {
    REQUIRE(w.size() == layer.weight.value.numel());
    REQUIRE(b.size() == layer.bias.value.numel());
    std::size_t i = 0;
    for (double v : w) layer.weight.value[i++] = static_cast<real>(v);
    i = 0;
    for (double v : b) layer.bias.value[i++] = static_cast<real>(v);
}

} // namespace

TEST_CASE("MRN initialization is seeded and validated") {
    const ReconstructionNet a(desk_mrn()), b(desk_mrn());
    ConstParameterList pa, pb;
    a.collect(pa);
    b.collect(pb);
    CHECK(same_parameters(pa, pb));
    MrnConfig other = desk_mrn();
    other.seed = 1;
    ConstParameterList pc;
    ReconstructionNet(other).collect(pc);
    CHECK_FALSE(same_parameters(pa, pc));

    MrnConfig bad = desk_mrn();
    bad.input_size = 250;
    CHECK_THROWS_AS(ReconstructionNet{bad}, ConfigError);
    bad = desk_mrn();
    bad.tap_layers = 5;
    CHECK_THROWS_AS(ReconstructionNet{bad}, ConfigError);
}

TEST_CASE("parameter counts match the hand-counted layer table") {
    // Per stream with input c0: enc 3x3 convs c0->16->32->64->128, bottleneck
    // 128->128, dec 128->128->64->32->16, head 1x1 16->c0.
    const ReconstructionNet mrn(desk_mrn());
    ConstParameterList p;
    mrn.collect(p);
    CHECK(parameter_count(p) == 978756);
    ConstParameterList rgb;
    mrn.rgb_stream().collect(rgb);
    CHECK(parameter_count(rgb) == 489539);

    // Taps 16+32+32+16 = 96 channels per modality, hidden 32, SE reduction 4.
    const SegmentationNet msn(MsnConfig{32, 1}, 96, 96, 4);
    ConstParameterList q;
    msn.collect(q);
    CHECK(parameter_count(q) == 14268);
}

TEST_CASE("MRN forward shapes, tap order and determinism") {
    const MrnConfig cfg = desk_mrn();
    const ReconstructionNet mrn(cfg);
    std::mt19937_64 rng(31);
    const Tensor rgb = test::random_tensor({2, 3, 64, 64}, rng, 0, 1);
    const Tensor depth = test::random_tensor({2, 1, 64, 64}, rng, 0, 1);
    const auto f = mrn.forward(rgb, depth);
    CHECK(f.bundle.recon_rgb.shape() == rgb.shape());
    CHECK(f.bundle.recon_depth.shape() == depth.shape());
    REQUIRE(f.bundle.f_rgb.size() == 4);
    REQUIRE(f.bundle.f_depth.size() == 4);
    const std::vector<int> expected{16, 32, 32, 16};
    CHECK(mrn.rgb_stream().tap_channels() == expected);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(f.bundle.f_rgb[i].shape() == Shape{2, expected[i], 64, 64});
        CHECK(f.bundle.f_depth[i].shape() == Shape{2, expected[i], 64, 64});
    }
    for (real v : f.bundle.recon_rgb.data()) {
        CHECK(v >= 0);
        CHECK(v <= 1);
    }
    const auto g = mrn.forward(rgb, depth);
    CHECK(test::bit_equal(f.bundle.recon_rgb, g.bundle.recon_rgb));
    CHECK(test::bit_equal(f.bundle.recon_depth, g.bundle.recon_depth));
    for (std::size_t i = 0; i < 4; ++i) CHECK(test::bit_equal(f.bundle.f_rgb[i], g.bundle.f_rgb[i]));
}

TEST_CASE("MRN rejects bad inputs") {
    const ReconstructionNet mrn(micro_mrn());
    Tensor rgb({1, 3, 8, 8}, real(0.5)), depth({1, 1, 8, 8}, real(0.5));
    CHECK_THROWS_AS(mrn.forward(Tensor({1, 3, 16, 16}), depth), InvalidArgument);
    rgb[7] = std::numeric_limits<real>::quiet_NaN();
    CHECK_THROWS_AS(mrn.forward(rgb, depth), InvalidData);
}

TEST_CASE("MRN decoder sees only the bottleneck") {
    const ReconstructionNet mrn(desk_mrn());
    std::mt19937_64 rng(32);
    const Tensor x = test::random_tensor({1, 3, 64, 64}, rng, 0, 1);
    const auto out = mrn.rgb_stream().forward(x);
    CHECK(test::bit_equal(mrn.rgb_stream().decode(out.trace.bottleneck), out.recon));

    // Two different inputs: swapping the bottleneck swaps the reconstruction.
    const Tensor y = test::random_tensor({1, 3, 64, 64}, rng, 0, 1);
    const auto other = mrn.rgb_stream().forward(y);
    CHECK(test::bit_equal(mrn.rgb_stream().decode(other.trace.bottleneck), other.recon));
    CHECK_FALSE(test::bit_equal(out.recon, other.recon));
}

TEST_CASE("MSN softmax, rgb-only isolation and per-pixel locality") {
    const EasyNet model(micro_model());
    std::mt19937_64 rng(33);
    const Tensor rgb = test::random_tensor({1, 3, 8, 8}, rng, 0, 1);
    const Tensor depth = test::random_tensor({1, 1, 8, 8}, rng, 0, 1);
    FeatureBundle bundle = model.mrn().forward(rgb, depth).bundle;
    const Tensor fused = model.msn().logits(bundle, SegMode::fused);
    CHECK(fused.shape() == Shape{1, 2, 8, 8});
    const Tensor probs = anomaly_probs(fused);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            const double a = std::exp(double(fused.at(0, 0, y, x))), b = std::exp(double(fused.at(0, 1, y, x)));
            CHECK(double(probs.at(0, 0, y, x)) == doctest::Approx(b / (a + b)).epsilon(1e-6));
        }
    }

    const Tensor rgb_only = model.msn().logits(bundle, SegMode::rgb_only);
    FeatureBundle garbage = bundle;
    for (Tensor& t : garbage.f_depth) t = test::random_tensor(t.shape(), rng, -100, 100);
    CHECK(test::bit_equal(model.msn().logits(garbage, SegMode::rgb_only), rgb_only));
    CHECK_FALSE(test::bit_equal(model.msn().logits(garbage, SegMode::fused), fused));

    FeatureBundle poked = bundle;
    for (Tensor& t : poked.f_rgb) {
        for (int c = 0; c < t.c(); ++c) t.at(0, c, 3, 5) += real(2.5);
    }
    // The stream MLPs are 1x1: only pixel (3,5) of their output moves.
    const Tensor s_before = model.msn().streams(bundle, false).rgb.output;
    const Tensor s_after = model.msn().streams(poked, false).rgb.output;
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            bool changed = false;
            for (int c = 0; c < s_after.c(); ++c) changed |= s_after.at(0, c, y, x) != s_before.at(0, c, y, x);
            if (y == 3 && x == 5) CHECK(changed);
            else CHECK_FALSE(changed);
        }
    }
}

TEST_CASE("MSN probabilities are per-pixel once the SE scores are input-independent") {
    // SE pools globally, so locality of the whole head holds only when the
    // channel scores do not depend on the input.
    EasyNet model(micro_model());
    for (SqueezeExcitation* se : {&model.msn().se_rgb(), &model.msn().se_fused()}) se->excite.weight.value.zero();
    std::mt19937_64 rng(35);
    const Tensor rgb = test::random_tensor({1, 3, 8, 8}, rng, 0, 1);
    const Tensor depth = test::random_tensor({1, 1, 8, 8}, rng, 0, 1);
    const FeatureBundle bundle = model.mrn().forward(rgb, depth).bundle;
    for (SegMode mode : {SegMode::rgb_only, SegMode::fused}) {
        const Tensor before = anomaly_probs(model.msn().logits(bundle, mode));
        FeatureBundle poked = bundle;
        for (Tensor& t : poked.f_rgb) {
            for (int c = 0; c < t.c(); ++c) t.at(0, c, 6, 1) -= real(1.5);
        }
        for (Tensor& t : poked.f_depth) {
            for (int c = 0; c < t.c(); ++c) t.at(0, c, 6, 1) += real(3.0);
        }
        const Tensor after = anomaly_probs(model.msn().logits(poked, mode));
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) {
                if (y != 6 || x != 1) CHECK(after.at(0, 0, y, x) == before.at(0, 0, y, x));
            }
        }
        CHECK(after.at(0, 0, 6, 1) != before.at(0, 0, 6, 1));
    }
}

TEST_CASE("MSN rejects misaligned taps") {
    const EasyNet model(micro_model());
    std::mt19937_64 rng(36);
    FeatureBundle bundle = model.mrn().forward(test::random_tensor({1, 3, 8, 8}, rng, 0, 1),
                                               test::random_tensor({1, 1, 8, 8}, rng, 0, 1)).bundle;
    bundle.f_rgb[0] = Tensor({1, bundle.f_rgb[0].c(), 4, 4});
    CHECK_THROWS_AS(model.msn().logits(bundle, SegMode::rgb_only), InvalidArgument);
}

TEST_CASE("anomaly map from logits") {
    Tensor logits({1, 2, 2, 2});
    AnomalyMap m = anomaly_map_from_logits(logits);
    for (real v : m.probs.data()) CHECK(v == doctest::Approx(0.5));
    logits.at(0, 0, 1, 0) = -10;
    logits.at(0, 1, 1, 0) = 10;
    m = anomaly_map_from_logits(logits);
    CHECK(std::abs(double(m.probs.at(0, 0, 1, 0)) - (1.0 - 2.0611536e-9)) < 1e-7);
    CHECK(m.probs.at(0, 0, 0, 1) == doctest::Approx(0.5));
    logits[0] = std::numeric_limits<real>::infinity();
    CHECK_THROWS_AS(anomaly_map_from_logits(logits), InvalidData);
}

TEST_CASE("hand-set MSN weights reproduce a hand-evaluated map") {
    // One tap per side with 2 channels; hidden width 2; SE with zero weights
    // gives scores sigmoid(0) = 0.5, undone by the factor 2 in head fc1.
    SegmentationNet msn(MsnConfig{2, 1}, 2, 2, 1);
    set_weights(msn.layer("rgb.fc1"), {1, 0, 0, 1}, {0, 0});
    set_weights(msn.layer("rgb.fc2"), {1, 0, 0, 1}, {0, 0});
    for (Conv2d* c : {&msn.se_rgb().squeeze, &msn.se_rgb().excite}) {
        c->weight.value.zero();
        c->bias.value.zero();
    }
    set_weights(msn.layer("head_rgb.fc1"), {2, 0, 0, 2}, {0, 0});
    set_weights(msn.layer("head_rgb.fc2"), {0, 0, 1, -1}, {0, 0});

    FeatureBundle b;
    b.f_rgb.push_back(Tensor({1, 1, 8, 8}));
    b.f_rgb.push_back(Tensor({1, 1, 8, 8}));
    b.f_depth = b.f_rgb;
    // pixel (0,0): x = (2, 0.5)   -> logit gap 1.5
    // pixel (4,4): x = (-1, 3)    -> relu gives (0, 3), gap -3
    // pixel (7,2): x = (0.25, 0.25) -> gap 0
    b.f_rgb[0].at(0, 0, 0, 0) = 2;
    b.f_rgb[1].at(0, 0, 0, 0) = 0.5;
    b.f_rgb[0].at(0, 0, 4, 4) = -1;
    b.f_rgb[1].at(0, 0, 4, 4) = 3;
    b.f_rgb[0].at(0, 0, 7, 2) = 0.25;
    b.f_rgb[1].at(0, 0, 7, 2) = 0.25;
    const Tensor probs = anomaly_probs(msn.logits(b, SegMode::rgb_only));
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    CHECK(double(probs.at(0, 0, 0, 0)) == doctest::Approx(sig(1.5)).epsilon(1e-6));
    CHECK(double(probs.at(0, 0, 4, 4)) == doctest::Approx(sig(-3.0)).epsilon(1e-6));
    CHECK(double(probs.at(0, 0, 7, 2)) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(double(probs.at(0, 0, 5, 5)) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("EasyNet inference: gate close ignores depth, sizes are checked") {
    const EasyNet model(micro_model());
    std::mt19937_64 rng(34);
    RgbdSample s;
    s.rgb = test::random_tensor({1, 3, 8, 8}, rng, 0, 1);
    s.depth = test::random_tensor({1, 1, 8, 8}, rng, 0, 1);
    const GateConfig gate;
    const ScoreConfig score;
    const Inference a = model.infer(s, gate, GateMode::close, score);
    CHECK(a.gate.mode == SegMode::rgb_only);
    CHECK_FALSE(a.map.gate_used_depth);
    RgbdSample t = s;
    t.depth = test::random_tensor({1, 1, 8, 8}, rng, 0, 1);
    CHECK(test::bit_equal(model.infer(t, gate, GateMode::close, score).map.probs, a.map.probs));
    const Inference open = model.infer(s, gate, GateMode::open, score);
    CHECK(open.gate.mode == SegMode::fused);
    CHECK(open.map.gate_used_depth);
    for (real v : open.map.probs.data()) {
        CHECK(v >= 0);
        CHECK(v <= 1);
    }
    CHECK(open.map.image_score >= 0.0);
    CHECK(open.map.image_score <= 1.0);
    RgbdSample big;
    big.rgb = Tensor({1, 3, 16, 16});
    big.depth = Tensor({1, 1, 16, 16});
    CHECK_THROWS_AS(model.infer(big, gate, GateMode::open, score), CheckpointError);
}
