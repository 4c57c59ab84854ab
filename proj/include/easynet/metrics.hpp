#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace easynet {

/// Row-major H×W grid of doubles. Ground-truth masks use the values 0 and 1.
struct Map2D {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    Map2D() = default;
    Map2D(int h, int w, double fill = 0.0) : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}
    double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

enum class ScoreReduction { smoothed_max, max, topk_mean };

struct ScoreConfig {
    ScoreReduction reduction = ScoreReduction::smoothed_max;
    int smooth_kernel = 21;
    double topk_fraction = 0.01;
};

/// Box-filters the map (odd kernel, edge-replicated borders) and returns the maximum.
double image_score_from_map(const Map2D& probs, int smooth_kernel);
double image_score(const Map2D& probs, const ScoreConfig& cfg);

/// Mann-Whitney AUROC with ties counted as one half.
double auroc(std::span<const double> scores, std::span<const int> labels);
/// AUROC over the pooled pixels of every map.
double pixel_auroc(std::span<const Map2D> maps, std::span<const Map2D> gts);
/// Expected step-interpolated average precision over uniformly random
/// orderings of tied scores.
double average_precision(std::span<const double> scores, std::span<const int> labels);
double pixel_average_precision(std::span<const Map2D> maps, std::span<const Map2D> gts);

/// 8-connected components of a binary mask; 0 = background, regions numbered from 1.
std::vector<int> label_components(const Map2D& mask, int* count = nullptr);

/// Area under the per-region-overlap curve against the global false
/// positive rate, integrated on [0, fpr_limit] and divided by fpr_limit.
/// A threshold t marks pixels with score >= t; the curve runs through
/// every distinct score and starts at (0, 0).
double aupro(std::span<const Map2D> maps, std::span<const Map2D> gts, double fpr_limit = 0.3);

struct CategoryMetrics {
    double i_auroc = 0.0;
    double p_auroc = 0.0;
    double aupro = 0.0;
    double image_ap = 0.0;
    double pixel_ap = 0.0;
    double gate_fused_fraction = 0.0;
    int samples = 0;
};

struct SampleRecord {
    std::string category;
    std::string defect;
    std::string id;
    int label = 0;
    double image_score = 0.0;
    bool gate_fused = false;
    double entropy_fused = 0.0;
    double entropy_rgb = 0.0;
};

struct EvalReport {
    std::map<std::string, CategoryMetrics> per_category;
    CategoryMetrics mean;
    double fps = 0.0;
    double alpha = 0.0;
    std::string gate_mode;
    std::string fingerprint;
    std::vector<SampleRecord> samples;

    /// Recomputes `mean` as the arithmetic mean over categories.
    void update_mean();
};

/// Key-value text form, one "key = value" per line.
void write_report_text(const EvalReport& report, std::ostream& out);
EvalReport read_report_text(std::istream& in);
/// One row per category plus "mean".
void write_report_csv(const EvalReport& report, std::ostream& out);
void write_samples_csv(const EvalReport& report, std::ostream& out);

} // namespace easynet
