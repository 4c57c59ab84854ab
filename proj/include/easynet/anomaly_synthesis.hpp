#pragma once

#include "easynet/perlin.hpp"
#include "easynet/sample.hpp"
#include "easynet/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace easynet {

struct AugmentationParams {
    /// Per-axis lattice scale is 2^k with k uniform in [scale_exp_min, scale_exp_max].
    int scale_exp_min = 0;
    int scale_exp_max = 6;
    double binarize_threshold = 0.5;
    double blend_beta_min = 0.1;
    double blend_beta_max = 1.0;
    /// Depth offset δ is uniform in ±depth_offset_fraction × (foreground depth range).
    double depth_offset_fraction = 0.1;
    double anomalous_fraction = 0.5;
    /// Rotate the noise lattice by a random angle in [-90, 90) degrees.
    bool random_rotation = true;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

struct AugmentedSample {
    Tensor rgb_aug;   // (1,3,H,W)
    Tensor depth_aug; // (1,1,H,W)
    Tensor mask;      // (1,1,H,W) in {0,1}
    bool is_anomalous = false;
};

/// mask = 1 where depth > 0. Throws InvalidData naming the count of
/// non-finite pixels.
Tensor derive_foreground_mask(const Tensor& depth);

/// 1 where noise > threshold, as a (1,1,H,W) mask.
Tensor binarize(const NoiseField& noise, double threshold);

/// Injects one synthetic anomaly: a thresholded Perlin blob restricted to the
/// foreground, inside which RGB is alpha-blended with the texture and depth
/// gets a constant offset. Pixels outside the mask are copied bit-for-bit.
/// With probability 1 - anomalous_fraction (or an empty foreground) the
/// sample passes through unchanged and labeled normal.
AugmentedSample synthesize_anomaly(const RgbdSample& sample, const Tensor& texture,
                                   const AugmentationParams& params, std::uint64_t seed);

/// Colorized-noise textures used as the anomaly source when no image
/// directory is configured.
Tensor procedural_texture(int height, int width, std::uint64_t seed);

/// Fixed pool of textures: procedural ones, optionally extended with every
/// raster found in a directory (resized to the sample size).
class TextureBank {
public:
    TextureBank(int height, int width, int procedural_count, std::uint64_t seed,
                const std::filesystem::path& image_dir = {});

    const Tensor& pick(std::uint64_t draw) const { return textures_[draw % textures_.size()]; }
    std::size_t size() const { return textures_.size(); }

private:
    std::vector<Tensor> textures_;
};

} // namespace easynet
