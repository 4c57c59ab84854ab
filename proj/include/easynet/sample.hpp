#pragma once

#include "easynet/tensor.hpp"

#include <optional>
#include <string>

namespace easynet {

enum class Label { normal, anomalous };

/// One aligned RGB-D capture. rgb is (1,3,H,W) in [0,1]; depth is (1,1,H,W),
/// nonnegative with 0 marking background; gt_mask is (1,1,H,W) in {0,1}.
struct RgbdSample {
    Tensor rgb;
    Tensor depth;
    std::optional<Tensor> gt_mask;
    Label label = Label::normal;
    std::string category;
    std::string defect = "good";
    std::string id;

    int height() const { return rgb.h(); }
    int width() const { return rgb.w(); }
};

} // namespace easynet
