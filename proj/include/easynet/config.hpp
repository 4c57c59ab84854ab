#pragma once

#include "easynet/anomaly_synthesis.hpp"
#include "easynet/dataset.hpp"
#include "easynet/fusion_gate.hpp"
#include "easynet/losses.hpp"
#include "easynet/model.hpp"
#include "easynet/pipeline.hpp"
#include "easynet/synthetic_dataset.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace easynet {

struct BenchConfig {
    int warmup = 5;
    int timed = 50;
};

/// Every tunable of the pipeline. The file form is INI: one section per
/// struct, "key = value" lines, '#' or ';' comments.
///
///   [augment]   scale_exp_min scale_exp_max binarize_threshold blend_beta_min
///               blend_beta_max depth_offset_fraction anomalous_fraction random_rotation
///   [loss]      lambda1..lambda4 focal_alpha_anomaly focal_alpha_normal focal_gamma
///               focal_epsilon ssim_window ssim_sigma ssim_c1 ssim_c2
///   [mrn]       input_size levels base_width tap_layers seed
///   [msn]       hidden_width seed
///   [gate]      alpha reduction entropy_mode (normalized|raw)
///   [train]     steps batch_size lr lr_milestones (comma list) lr_factor seed
///               checkpoint_fraction texture_count texture_dir
///   [data]      root input_size ransac_threshold ransac_iterations ransac_seed foreground_floor
///   [eval]      gate_mode (control|open|close) score (smoothed_max|max|topk_mean)
///               smooth_kernel topk_fraction fpr_limit defects (comma list)
///   [bench]     warmup timed
///   [synthetic] categories (comma list) train_count test_count size seed
///
/// mrn.input_size follows data.input_size unless set explicitly.
struct PipelineConfig {
    AugmentationParams augment;
    LossConfig loss;
    ModelConfig model;
    GateConfig gate;
    TrainConfig train;
    DataConfig data;
    EvalConfig eval;
    BenchConfig bench;
    SyntheticSpec synthetic;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
};

/// Defaults at desk scale: 64×64 inputs, levels 4, base width 16, hidden
/// width 32, SE reduction 4.
PipelineConfig desk_scale_defaults();

/// Parses INI text on top of `base`. Unknown sections or keys and
/// unparsable values raise ConfigError.
PipelineConfig parse_config(std::istream& in, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
/// Writes every field; parse_config(write_config(c)) reproduces c.
void write_config(const PipelineConfig& cfg, std::ostream& out);

} // namespace easynet
