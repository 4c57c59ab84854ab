#pragma once

#include "easynet/anomaly_synthesis.hpp"
#include "easynet/layers.hpp"
#include "easynet/losses.hpp"
#include "easynet/metrics.hpp"
#include "easynet/model.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace easynet {

struct TrainConfig {
    int steps = 800;
    int batch_size = 8;
    double lr = 0.002;
    std::vector<double> lr_milestones{0.8, 0.9};
    double lr_factor = 0.2;
    std::uint64_t seed = 0;
    /// Intermediate checkpoints every this fraction of the budget (0 disables).
    double checkpoint_fraction = 0.25;
    int texture_count = 16;
    std::filesystem::path texture_dir;

    void validate() const;
};

/// floor(f * steps) for every milestone fraction f.
std::vector<int> milestone_steps(const TrainConfig& cfg);
/// lr times lr_factor once per milestone already reached (step is 0-based).
double learning_rate_at(const TrainConfig& cfg, int step);

/// One augmented batch. rgb/depth are the clean targets.
struct TrainBatch {
    Tensor rgb_aug;
    Tensor depth_aug;
    Tensor mask;
    Tensor rgb;
    Tensor depth;
    int anomalous = 0;
};

/// Throws DataContractError when a sample is labeled anomalous or carries a
/// nonempty ground-truth mask.
void check_train_contract(std::span<const RgbdSample> data);

TrainBatch make_batch(std::span<const RgbdSample> data, std::span<const std::size_t> indices,
                      const TextureBank& textures, const AugmentationParams& augment, std::mt19937_64& rng);

struct StepLog {
    int step = 0;
    double lr = 0.0;
    double l_rgb = 0.0;   // reconstruction terms of the RGB stream plus focal on M_rgb
    double l_total = 0.0; // the full weighted total on the fused map M
    LossBreakdown total;
    double focal_rgb = 0.0;
    int anomalous = 0;
};

/// Tensors a step consumed, for recomputing its losses.
struct StepCapture {
    TrainBatch batch;
    Tensor recon_rgb;
    Tensor recon_depth;
    Tensor logits_rgb;
    Tensor logits_fused;
};

/// Forward, both losses, one accumulated backward, one optimizer update.
StepLog train_step(EasyNet& model, Adam& optimizer, const TrainBatch& batch, const LossConfig& loss, double lr,
                   StepCapture* capture = nullptr);

struct TrainOptions {
    /// Final checkpoint path; intermediate ones get a ".stepN" suffix. Empty disables saving.
    std::filesystem::path checkpoint;
    std::function<void(const StepLog&)> on_step;
};

struct TrainResult {
    EasyNet model;
    std::vector<StepLog> log;
    std::vector<std::filesystem::path> checkpoints;
};

TrainResult train(std::span<const RgbdSample> data, const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const AugmentationParams& augment, const LossConfig& loss, const TrainOptions& options = {});

void write_train_log(const std::vector<StepLog>& log, std::ostream& out);

struct EvalConfig {
    GateMode gate_mode = GateMode::control;
    ScoreConfig score;
    double fpr_limit = 0.3;
    /// Defect kinds to keep besides "good"; empty keeps all.
    std::vector<std::string> defects;

    void validate() const;
};

using MapProvider = std::function<Inference(const RgbdSample&)>;

struct CategoryEvaluation {
    CategoryMetrics metrics;
    std::vector<SampleRecord> samples;
    std::vector<Inference> inferences;
};

/// Runs `provider` over the test samples that pass the defect filter and
/// scores the results. Metrics undefined for the subset (single class,
/// no anomalous pixel) are NaN.
CategoryEvaluation evaluate_category(std::span<const RgbdSample> test, const MapProvider& provider,
                                     const EvalConfig& cfg);

CategoryEvaluation evaluate_model(const EasyNet& model, std::span<const RgbdSample> test, const GateConfig& gate,
                                  const EvalConfig& cfg);

/// Adds a category's results to the report and refreshes the mean.
void add_category(EvalReport& report, const std::string& category, CategoryEvaluation&& eval);

struct BenchResult {
    double fps = 0.0;
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    int timed = 0;
    std::string hardware;
};

/// Times end-to-end single-sample inference after n_warmup untimed runs.
/// Throws InvalidArgument when n_timed < 10.
BenchResult benchmark_fps(const EasyNet& model, const RgbdSample& sample, const GateConfig& gate, GateMode mode,
                          int n_warmup, int n_timed);

/// CPU model, core and thread counts, compiler, and scalar type.
std::string hardware_fingerprint();

/// Single-threaded execution for bit-reproducible runs.
void set_deterministic(bool on);

} // namespace easynet
