#pragma once

#include <cstdint>
#include <vector>

namespace easynet {

/// Min-max normalized 2-D gradient noise, row-major.
struct NoiseField {
    int height = 0;
    int width = 0;
    std::uint64_t seed = 0;
    std::vector<double> values;

    double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct NoiseScale {
    int y = 1; // lattice cells along the rows
    int x = 1; // lattice cells along the columns
};

/// Perlin noise with a periodic random-gradient lattice of scale.y × scale.x
/// cells stretched over the image, sampled after rotating pixel coordinates
/// about the image center by rotation_deg. Non-constant fields are rescaled to
/// span exactly [0, 1]; constant fields come back as all zeros.
/// Throws InvalidArgument for dimensions below 2 or scales below 1.
NoiseField generate_perlin_noise(int height, int width, NoiseScale scale, std::uint64_t seed,
                                 double rotation_deg = 0.0);

} // namespace easynet
