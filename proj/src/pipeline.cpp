#include "easynet/pipeline.hpp"

#include "easynet/checkpoint.hpp"
#include "easynet/error.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace easynet {

void TrainConfig::validate() const {
    if (steps < 1) throw ConfigError("train: steps must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
    if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw ConfigError("train: lr_factor must be in (0, 1)");
    double prev = 0.0;
    for (double m : lr_milestones) {
        if (!(m > prev && m < 1.0)) throw ConfigError("train: lr_milestones must be strictly increasing in (0, 1)");
        prev = m;
    }
    if (!(checkpoint_fraction >= 0.0 && checkpoint_fraction <= 1.0)) {
        throw ConfigError("train: checkpoint_fraction must be in [0, 1]");
    }
    if (texture_count < 0) throw ConfigError("train: texture_count must be >= 0");
}

std::vector<int> milestone_steps(const TrainConfig& cfg) {
    std::vector<int> out;
    for (double m : cfg.lr_milestones) out.push_back(static_cast<int>(std::floor(m * cfg.steps)));
    return out;
}

double learning_rate_at(const TrainConfig& cfg, int step) {
    double lr = cfg.lr;
    for (int m : milestone_steps(cfg)) {
        if (step >= m) lr *= cfg.lr_factor;
    }
    return lr;
}

void check_train_contract(std::span<const RgbdSample> data) {
    for (const RgbdSample& s : data) {
        bool marked = s.label == Label::anomalous;
        if (s.gt_mask) {
            for (real v : s.gt_mask->data()) marked = marked || v != real(0);
        }
        if (marked) {
            throw DataContractError("training sample " + s.category + "/" + s.id +
                                    " is anomalous; the train stream must hold normal samples only");
        }
    }
}

TrainBatch make_batch(std::span<const RgbdSample> data, std::span<const std::size_t> indices,
                      const TextureBank& textures, const AugmentationParams& augment, std::mt19937_64& rng) {
    std::vector<Tensor> rgb_aug, depth_aug, mask, rgb, depth;
    TrainBatch batch;
    for (std::size_t i : indices) {
        const RgbdSample& s = data[i];
        const std::uint64_t texture_draw = rng();
        const std::uint64_t seed = rng();
        AugmentedSample a = synthesize_anomaly(s, textures.pick(texture_draw), augment, seed);
        batch.anomalous += a.is_anomalous ? 1 : 0;
        rgb_aug.push_back(std::move(a.rgb_aug));
        depth_aug.push_back(std::move(a.depth_aug));
        mask.push_back(std::move(a.mask));
        rgb.push_back(s.rgb);
        depth.push_back(s.depth);
    }
    auto stack = [](const std::vector<Tensor>& v) {
        std::vector<const Tensor*> p;
        for (const Tensor& t : v) p.push_back(&t);
        return stack_batch(p);
    };
    batch.rgb_aug = stack(rgb_aug);
    batch.depth_aug = stack(depth_aug);
    batch.mask = stack(mask);
    batch.rgb = stack(rgb);
    batch.depth = stack(depth);
    return batch;
}

StepLog train_step(EasyNet& model, Adam& optimizer, const TrainBatch& batch, const LossConfig& loss, double lr,
                   StepCapture* capture) {
    optimizer.zero_grad();
    const ReconstructionNet::Forward fwd = model.mrn().forward(batch.rgb_aug, batch.depth_aug);
    const SegmentationNet::Forward seg = model.msn().forward_both(fwd.bundle);
    const Tensor& logits_rgb = seg.rgb_head->logits;
    const Tensor& logits_fused = seg.fused_head->logits;

    // L_total: every term of the weighted total on the fused map.
    LossGradients g_total;
    const LossBreakdown total = total_loss_logits(batch.rgb, fwd.bundle.recon_rgb, batch.depth,
                                                  fwd.bundle.recon_depth, logits_fused, batch.mask, loss, &g_total);
    // L_rgb: the RGB reconstruction terms plus focal on M_rgb.
    LossConfig rgb_only = loss;
    rgb_only.lambda3 = 0.0;
    LossGradients g_rgb;
    const LossBreakdown rgb = total_loss_logits(batch.rgb, fwd.bundle.recon_rgb, batch.depth,
                                                fwd.bundle.recon_depth, logits_rgb, batch.mask, rgb_only, &g_rgb);

    Tensor g_recon_rgb = g_total.recon_rgb;
    g_recon_rgb += g_rgb.recon_rgb;
    std::vector<Tensor> g_f_rgb, g_f_depth;
    model.msn().backward(seg, &g_rgb.logits, &g_total.logits, g_f_rgb, g_f_depth);
    model.mrn().backward(fwd, g_recon_rgb, g_total.recon_depth, g_f_rgb, g_f_depth);
    optimizer.step(lr);

    if (capture != nullptr) {
        capture->batch = batch;
        capture->recon_rgb = fwd.bundle.recon_rgb;
        capture->recon_depth = fwd.bundle.recon_depth;
        capture->logits_rgb = logits_rgb;
        capture->logits_fused = logits_fused;
    }
    StepLog log;
    log.lr = lr;
    log.total = total;
    log.l_total = total.total;
    log.l_rgb = rgb.total;
    log.focal_rgb = rgb.focal;
    log.anomalous = batch.anomalous;
    return log;
}

TrainResult train(std::span<const RgbdSample> data, const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const AugmentationParams& augment, const LossConfig& loss, const TrainOptions& options) {
    train_cfg.validate();
    augment.validate();
    loss.validate();
    if (data.empty()) throw InvalidArgument("train: empty training set");
    check_train_contract(data);

    TrainResult result;
    result.model = EasyNet(model_cfg);
    const int s = model_cfg.mrn.input_size;
    for (const RgbdSample& sample : data) {
        if (sample.height() != s || sample.width() != s) {
            throw InvalidArgument("train: sample " + sample.id + " is not " + std::to_string(s) + "x" + std::to_string(s));
        }
    }
    ParameterList params;
    result.model.collect(params);
    Adam optimizer(params);
    std::mt19937_64 rng(train_cfg.seed);
    const TextureBank textures(s, s, std::max(train_cfg.texture_count, train_cfg.texture_dir.empty() ? 1 : 0), rng(),
                               train_cfg.texture_dir);

    std::vector<int> save_at;
    if (train_cfg.checkpoint_fraction > 0.0) {
        for (double f = train_cfg.checkpoint_fraction; f < 1.0 - 1e-12; f += train_cfg.checkpoint_fraction) {
            save_at.push_back(static_cast<int>(std::floor(f * train_cfg.steps)));
        }
    }
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();
    std::vector<std::size_t> indices;

    for (int step = 0; step < train_cfg.steps; ++step) {
        indices.clear();
        for (int b = 0; b < train_cfg.batch_size; ++b) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            indices.push_back(order[cursor++]);
        }
        const TrainBatch batch = make_batch(data, indices, textures, augment, rng);
        StepLog log = train_step(result.model, optimizer, batch, loss, learning_rate_at(train_cfg, step));
        log.step = step;
        if (!std::isfinite(log.l_total) || !std::isfinite(log.l_rgb)) {
            throw InvalidData("train: non-finite loss at step " + std::to_string(step));
        }
        if (options.on_step) options.on_step(log);
        result.log.push_back(log);

        const int done = step + 1;
        if (!options.checkpoint.empty() && std::find(save_at.begin(), save_at.end(), done) != save_at.end()) {
            const std::filesystem::path p = options.checkpoint.string() + ".step" + std::to_string(done);
            save_checkpoint(p, result.model, done);
            result.checkpoints.push_back(p);
        }
    }
    if (!options.checkpoint.empty()) {
        save_checkpoint(options.checkpoint, result.model, train_cfg.steps);
        result.checkpoints.push_back(options.checkpoint);
    }
    return result;
}

void write_train_log(const std::vector<StepLog>& log, std::ostream& out) {
    out << std::setprecision(12);
    out << "step,lr,l_rgb,l_total,ssim_rgb,mse_rgb,mse_depth,focal_fused,focal_rgb,anomalous\n";
    for (const StepLog& l : log) {
        out << l.step << ',' << l.lr << ',' << l.l_rgb << ',' << l.l_total << ',' << l.total.ssim_rgb << ','
            << l.total.mse_rgb << ',' << l.total.mse_depth << ',' << l.total.focal << ',' << l.focal_rgb << ','
            << l.anomalous << '\n';
    }
}

void EvalConfig::validate() const {
    if (!(fpr_limit > 0.0 && fpr_limit <= 1.0)) throw ConfigError("eval: fpr_limit must be in (0, 1]");
    if (score.smooth_kernel < 1 || score.smooth_kernel % 2 == 0) throw ConfigError("eval: smooth_kernel must be odd");
    if (!(score.topk_fraction > 0.0 && score.topk_fraction <= 1.0)) {
        throw ConfigError("eval: topk_fraction must be in (0, 1]");
    }
}

namespace {

template <class F>
double or_nan(F&& f) {
    try {
        return f();
    } catch (const DegenerateInput&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

} // namespace

CategoryEvaluation evaluate_category(std::span<const RgbdSample> test, const MapProvider& provider,
                                     const EvalConfig& cfg) {
    cfg.validate();
    CategoryEvaluation out;
    std::vector<double> scores;
    std::vector<int> labels;
    std::vector<Map2D> maps, gts;
    int fused = 0;
    for (const RgbdSample& s : test) {
        const bool keep = s.defect == "good" || cfg.defects.empty() ||
                          std::find(cfg.defects.begin(), cfg.defects.end(), s.defect) != cfg.defects.end();
        if (!keep) continue;
        if (s.label == Label::anomalous && !s.gt_mask) {
            throw DataContractError("test sample " + s.id + " is anomalous but has no ground-truth mask");
        }
        Inference inf = provider(s);
        const int label = s.label == Label::anomalous ? 1 : 0;
        scores.push_back(inf.map.image_score);
        labels.push_back(label);
        maps.push_back(to_map(inf.map.probs));
        gts.push_back(s.gt_mask ? to_map(*s.gt_mask) : Map2D(s.height(), s.width()));
        fused += inf.gate.mode == SegMode::fused ? 1 : 0;

        SampleRecord rec;
        rec.category = s.category;
        rec.defect = s.defect;
        rec.id = s.id;
        rec.label = label;
        rec.image_score = inf.map.image_score;
        rec.gate_fused = inf.gate.mode == SegMode::fused;
        rec.entropy_fused = inf.gate.entropy_fused;
        rec.entropy_rgb = inf.gate.entropy_rgb;
        out.samples.push_back(rec);
        out.inferences.push_back(std::move(inf));
    }
    CategoryMetrics& m = out.metrics;
    m.samples = static_cast<int>(scores.size());
    if (scores.empty()) throw InvalidArgument("evaluate: no test samples pass the defect filter");
    m.i_auroc = or_nan([&] { return auroc(scores, labels); });
    m.image_ap = or_nan([&] { return average_precision(scores, labels); });
    m.p_auroc = or_nan([&] { return pixel_auroc(maps, gts); });
    m.pixel_ap = or_nan([&] { return pixel_average_precision(maps, gts); });
    m.aupro = or_nan([&] { return aupro(maps, gts, cfg.fpr_limit); });
    m.gate_fused_fraction = static_cast<double>(fused) / static_cast<double>(scores.size());
    return out;
}

CategoryEvaluation evaluate_model(const EasyNet& model, std::span<const RgbdSample> test, const GateConfig& gate,
                                  const EvalConfig& cfg) {
    return evaluate_category(
        test, [&](const RgbdSample& s) { return model.infer(s, gate, cfg.gate_mode, cfg.score); }, cfg);
}

void add_category(EvalReport& report, const std::string& category, CategoryEvaluation&& eval) {
    report.per_category[category] = eval.metrics;
    for (SampleRecord& r : eval.samples) report.samples.push_back(std::move(r));
    report.update_mean();
}

std::string hardware_fingerprint() {
    std::string cpu = "unknown-cpu";
    std::ifstream info("/proc/cpuinfo");
    std::string line;
    while (std::getline(info, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) cpu = line.substr(colon + 2);
            break;
        }
    }
    std::ostringstream out;
    out << cpu << "; " << std::thread::hardware_concurrency() << " hw threads; " << omp_get_max_threads()
        << " omp threads; ";
#if defined(__clang__)
    out << "clang " << __clang_major__ << '.' << __clang_minor__;
#elif defined(__GNUC__)
    out << "gcc " << __GNUC__ << '.' << __GNUC_MINOR__;
#else
    out << "unknown compiler";
#endif
    out << "; " << (sizeof(real) == 4 ? "float32" : "float64");
    return out.str();
}

BenchResult benchmark_fps(const EasyNet& model, const RgbdSample& sample, const GateConfig& gate, GateMode mode,
                          int n_warmup, int n_timed) {
    if (n_timed < 10) throw InvalidArgument("benchmark_fps: n_timed must be >= 10");
    if (n_warmup < 0) throw InvalidArgument("benchmark_fps: n_warmup must be >= 0");
    const ScoreConfig score;
    for (int i = 0; i < n_warmup; ++i) model.infer(sample, gate, mode, score);
    std::vector<double> ms;
    using clock = std::chrono::steady_clock;
    for (int i = 0; i < n_timed; ++i) {
        const auto t0 = clock::now();
        const Inference inf = model.infer(sample, gate, mode, score);
        const auto t1 = clock::now();
        if (!std::isfinite(inf.map.image_score)) throw InvalidData("benchmark_fps: non-finite score");
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    BenchResult r;
    r.timed = n_timed;
    r.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / n_timed;
    r.fps = 1000.0 / r.mean_ms;
    std::vector<double> sorted = ms;
    std::sort(sorted.begin(), sorted.end());
    // nearest-rank percentiles
    auto pct = [&](double p) {
        const auto rank = static_cast<std::size_t>(std::ceil(p * sorted.size()));
        return sorted[std::max<std::size_t>(rank, 1) - 1];
    };
    r.p50_ms = pct(0.50);
    r.p95_ms = pct(0.95);
    r.hardware = hardware_fingerprint();
    return r;
}

void set_deterministic(bool on) {
    if (on) omp_set_num_threads(1);
}

} // namespace easynet
