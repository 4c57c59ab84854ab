#include "easynet/anomaly_synthesis.hpp"

#include "easynet/error.hpp"
#include "easynet/raster_io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace easynet {

namespace {
constexpr real kDepthFloor = real(1e-3);
}

void AugmentationParams::validate() const {
    if (scale_exp_min < 0 || scale_exp_max < scale_exp_min || scale_exp_max > 12) {
        throw ConfigError("augment: scale exponent range must satisfy 0 <= min <= max <= 12");
    }
    if (!(binarize_threshold > 0.0 && binarize_threshold < 1.0)) {
        throw ConfigError("augment: binarize_threshold must lie strictly inside (0,1)");
    }
    if (!(blend_beta_min > 0.0 && blend_beta_min <= blend_beta_max && blend_beta_max <= 1.0)) {
        throw ConfigError("augment: blend beta range must be a nonempty interval in (0,1]");
    }
    if (!(depth_offset_fraction >= 0.0)) throw ConfigError("augment: depth offset must be >= 0");
    if (!(anomalous_fraction >= 0.0 && anomalous_fraction <= 1.0)) {
        throw ConfigError("augment: anomalous_fraction must lie in [0,1]");
    }
}

Tensor derive_foreground_mask(const Tensor& depth) {
    const std::size_t bad = depth.count_nonfinite();
    if (bad != 0) {
        throw InvalidData("depth map has " + std::to_string(bad) + " non-finite pixels");
    }
    Tensor mask(depth.shape());
    for (std::size_t i = 0; i < depth.numel(); ++i) mask[i] = depth[i] > real(0) ? real(1) : real(0);
    return mask;
}

Tensor binarize(const NoiseField& noise, double threshold) {
    Tensor mask({1, 1, noise.height, noise.width});
    for (std::size_t i = 0; i < noise.values.size(); ++i) {
        mask[i] = noise.values[i] > threshold ? real(1) : real(0);
    }
    return mask;
}

AugmentedSample synthesize_anomaly(const RgbdSample& sample, const Tensor& texture,
                                   const AugmentationParams& params, std::uint64_t seed) {
    params.validate();
    const int h = sample.height();
    const int w = sample.width();
    if (sample.rgb.shape() != Shape{1, 3, h, w} || sample.depth.shape() != Shape{1, 1, h, w}) {
        throw InvalidArgument("synthesize_anomaly: rgb " + sample.rgb.shape().str() + " and depth " +
                              sample.depth.shape().str() + " are not aligned");
    }
    if (texture.n() != 1 || texture.c() != 3) {
        throw InvalidArgument("synthesize_anomaly: texture must be a (1,3,H,W) image");
    }

    AugmentedSample out;
    out.rgb_aug = sample.rgb;
    out.depth_aug = sample.depth;
    out.mask = Tensor({1, 1, h, w});

    std::mt19937_64 rng(seed);
    std::bernoulli_distribution draw_anomalous(params.anomalous_fraction);
    if (!draw_anomalous(rng)) return out;

    const Tensor foreground = derive_foreground_mask(sample.depth);
    real fg_min = std::numeric_limits<real>::max();
    real fg_max = std::numeric_limits<real>::lowest();
    for (std::size_t i = 0; i < foreground.numel(); ++i) {
        if (foreground[i] > 0) {
            fg_min = std::min(fg_min, sample.depth[i]);
            fg_max = std::max(fg_max, sample.depth[i]);
        }
    }
    if (fg_max < fg_min) return out; // no foreground at all

    std::uniform_int_distribution<int> exponent(params.scale_exp_min, params.scale_exp_max);
    const NoiseScale scale{1 << exponent(rng), 1 << exponent(rng)};
    std::uniform_real_distribution<double> rotation(-90.0, 90.0);
    const double angle = params.random_rotation ? rotation(rng) : 0.0;
    const std::uint64_t noise_seed = rng();
    std::uniform_real_distribution<double> beta_dist(params.blend_beta_min, params.blend_beta_max);
    const double beta = params.blend_beta_min == params.blend_beta_max ? params.blend_beta_min
                                                                          : beta_dist(rng);
    const double range = static_cast<double>(fg_max - fg_min);
    const double span = params.depth_offset_fraction * range;
    std::uniform_real_distribution<double> offset_dist(-span, span);
    const double offset = span > 0.0 ? offset_dist(rng) : 0.0;

    const NoiseField noise = generate_perlin_noise(h, w, scale, noise_seed, angle);
    const Tensor blob = binarize(noise, params.binarize_threshold);

    const Tensor tex = (texture.h() == h && texture.w() == w) ? texture : resize_bilinear(texture, h, w);
    const real b = static_cast<real>(beta);
    const real delta = static_cast<real>(offset);
    bool any = false;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (blob.at(0, 0, y, x) == 0 || foreground.at(0, 0, y, x) == 0) continue;
            any = true;
            out.mask.at(0, 0, y, x) = 1;
            for (int c = 0; c < 3; ++c) {
                out.rgb_aug.at(0, c, y, x) = b * tex.at(0, c, y, x) + (real(1) - b) * sample.rgb.at(0, c, y, x);
            }
            out.depth_aug.at(0, 0, y, x) = std::max(kDepthFloor, sample.depth.at(0, 0, y, x) + delta);
        }
    }
    out.is_anomalous = any;
    return out;
}

Tensor procedural_texture(int height, int width, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> exponent(1, 4);
    std::uniform_int_distribution<int> pattern(0, 2);

    double colors[2][3];
    for (auto& color : colors)
        for (double& v : color) v = unit(rng);

    const NoiseField base =
        generate_perlin_noise(height, width, {1 << exponent(rng), 1 << exponent(rng)}, rng(), 0.0);
    const NoiseField detail = generate_perlin_noise(height, width, {16, 16}, rng(), unit(rng) * 90.0);
    const int kind = pattern(rng);
    const double freq = 2.0 + 10.0 * unit(rng);
    const double theta = unit(rng) * std::numbers::pi;

    Tensor tex({1, 3, height, width});
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double t = base.at(y, x);
            if (kind == 1) {
                const double u = (x * std::cos(theta) + y * std::sin(theta)) / width;
                t = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * freq * u + 4.0 * t);
            } else if (kind == 2) {
                const int cell = std::max(2, static_cast<int>(width / freq));
                t = ((x / cell + y / cell) % 2 == 0) ? 0.8 * t : 0.2 + 0.8 * t;
            }
            const double shade = 0.75 + 0.25 * detail.at(y, x);
            for (int c = 0; c < 3; ++c) {
                const double v = shade * (colors[0][c] + t * (colors[1][c] - colors[0][c]));
                tex.at(0, c, y, x) = static_cast<real>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return tex;
}

TextureBank::TextureBank(int height, int width, int procedural_count, std::uint64_t seed,
                         const std::filesystem::path& image_dir) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < procedural_count; ++i) textures_.push_back(procedural_texture(height, width, rng()));
    if (!image_dir.empty()) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(image_dir)) {
            const auto ext = entry.path().extension().string();
            if (entry.is_regular_file() && (ext == ".png" || ext == ".PNG")) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            Tensor img = read_png(f);
            if (img.c() == 1) {
                const Tensor* parts[3] = {&img, &img, &img};
                img = concat_channels(parts);
            }
            textures_.push_back(resize_bilinear(img, height, width));
        }
    }
    if (textures_.empty()) throw ConfigError("texture bank is empty");
}

} // namespace easynet
