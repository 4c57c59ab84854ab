#pragma once

#include "easynet/metrics.hpp"
#include "easynet/sample.hpp"
#include "easynet/tensor.hpp"

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace easynet {

/// Fixed-width text table: one row per category plus "Mean". Per metric
/// column, '*' marks the best category and '+' the second best.
std::string render_category_table(const EvalReport& report);
/// The same table as CSV with full precision and no markers.
std::string render_category_csv(const EvalReport& report);

/// Inferno colormap, sampled at 17 anchors and linearly interpolated.
std::array<double, 3> inferno(double t);

/// Weight of the colormap in the overlay pane.
inline constexpr double kOverlayWeight = 0.5;
/// Gap between panes, in pixels (filled black).
inline constexpr int kPanelGap = 2;

/// Three panes side by side: input RGB | (1-w)·RGB + w·inferno(probs) | gt in gray.
/// All inputs must share H×W. Returns (1,3,H,3W+2·gap).
Tensor render_heatmap_panel(const Tensor& rgb, const Tensor& probs, const Tensor& gt);

/// Mean I-AUROC and fused fraction per α; α = -inf is Gate Open, +inf Gate Close.
struct SweepPoint {
    double alpha = 0.0;
    double mean_i_auroc = 0.0;
    double gate_fused_fraction = 0.0;
};

/// Sorted by α. Throws InvalidArgument for fewer than two points or duplicate α.
std::vector<SweepPoint> sweep_points(const std::vector<std::pair<double, EvalReport>>& reports);
/// CSV: alpha,mean_i_auroc,gate_fused_fraction,label.
std::string render_alpha_sweep_csv(const std::vector<SweepPoint>& points);
/// Line plot of mean I-AUROC against α as standalone SVG; infinite α
/// values sit at the ends of the axis with Gate Open / Gate Close labels.
std::string render_alpha_sweep_svg(const std::vector<SweepPoint>& points);

} // namespace easynet
