#include "easynet/perlin.hpp"

#include "easynet/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace easynet {

namespace {

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

int wrap(int i, int period) {
    const int m = i % period;
    return m < 0 ? m + period : m;
}

} // namespace

NoiseField generate_perlin_noise(int height, int width, NoiseScale scale, std::uint64_t seed,
                                 double rotation_deg) {
    if (height < 2 || width < 2) {
        throw InvalidArgument("perlin noise needs at least 2x2 pixels, got " + std::to_string(height) +
                              "x" + std::to_string(width));
    }
    if (scale.y < 1 || scale.x < 1) throw InvalidArgument("perlin scale components must be >= 1");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::vector<double> gx(static_cast<std::size_t>(scale.y) * scale.x);
    std::vector<double> gy(gx.size());
    for (std::size_t i = 0; i < gx.size(); ++i) {
        const double a = angle(rng);
        gx[i] = std::cos(a);
        gy[i] = std::sin(a);
    }

    NoiseField field;
    field.height = height;
    field.width = width;
    field.seed = seed;
    field.values.resize(static_cast<std::size_t>(height) * width);

    const double theta = rotation_deg * std::numbers::pi / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double cy = 0.5 * height;
    const double cx = 0.5 * width;
    const double cells_per_row = static_cast<double>(scale.y) / height;
    const double cells_per_col = static_cast<double>(scale.x) / width;

    auto dot = [&](int iy, int ix, double dy, double dx) {
        const std::size_t k = static_cast<std::size_t>(wrap(iy, scale.y)) * scale.x + wrap(ix, scale.x);
        return gy[k] * dy + gx[k] * dx;
    };

#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double py = y - cy;
            const double px = x - cx;
            const double ry = s * px + c * py + cy;
            const double rx = c * px - s * py + cx;
            const double v = ry * cells_per_row;
            const double u = rx * cells_per_col;
            const int iy = static_cast<int>(std::floor(v));
            const int ix = static_cast<int>(std::floor(u));
            const double fy = v - iy;
            const double fx = u - ix;
            const double n00 = dot(iy, ix, fy, fx);
            const double n01 = dot(iy, ix + 1, fy, fx - 1.0);
            const double n10 = dot(iy + 1, ix, fy - 1.0, fx);
            const double n11 = dot(iy + 1, ix + 1, fy - 1.0, fx - 1.0);
            const double wy = fade(fy);
            const double wx = fade(fx);
            const double top = n00 + wx * (n01 - n00);
            const double bottom = n10 + wx * (n11 - n10);
            field.values[static_cast<std::size_t>(y) * width + x] = top + wy * (bottom - top);
        }
    }

    const auto [lo, hi] = std::minmax_element(field.values.begin(), field.values.end());
    const double min = *lo;
    const double range = *hi - *lo;
    if (range > 0.0) {
        for (double& v : field.values) v = (v - min) / range;
        // Guard the exact endpoints against rounding in the division.
        *lo = 0.0;
        *hi = 1.0;
    } else {
        std::fill(field.values.begin(), field.values.end(), 0.0);
    }
    return field;
}

} // namespace easynet
