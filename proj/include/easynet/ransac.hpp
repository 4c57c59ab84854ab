#pragma once

#include "easynet/tensor.hpp"

#include <array>
#include <cstddef>
#include <cstdint>

namespace easynet {

/// Plane n·p + offset = 0 with unit normal n.
struct PlaneModel {
    std::array<double, 3> normal{0.0, 0.0, 1.0};
    double offset = 0.0;
    double inlier_threshold = 0.005;

    double distance(double x, double y, double z) const {
        const double d = normal[0] * x + normal[1] * y + normal[2] * z + offset;
        return d < 0 ? -d : d;
    }
};

struct RansacConfig {
    double threshold = 0.005;
    int iterations = 500;
    std::uint64_t seed = 0;
    /// Least-squares refit on the inliers of the best hypothesis.
    bool refit = true;

    void validate() const;
};

struct PlaneFit {
    PlaneModel plane;
    std::size_t inliers = 0; // valid points within threshold of `plane`
    std::size_t valid = 0;
};

/// A point is valid when finite and not the all-zero triplet.
bool valid_point(double x, double y, double z);

/// Dominant plane of an organized (1,3,H,W) point map.
/// Throws DegenerateInput when fewer than 3 valid points exist or every
/// sampled triple is collinear.
PlaneFit fit_plane_ransac(const Tensor& xyz, const RansacConfig& cfg);

struct PlaneRemoval {
    Tensor depth; // (1,1,H,W): 0 on background and invalid points, (0,1] elsewhere
    PlaneFit fit;
};

/// Fits the background plane, zeroes every point within threshold of it
/// (and every invalid point), and maps the z of the remaining points to
/// [foreground_floor, 1] by per-sample min-max.
PlaneRemoval ransac_plane_removal(const Tensor& xyz, const RansacConfig& cfg, double foreground_floor = 0.1);

} // namespace easynet
