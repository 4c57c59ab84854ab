#include "easynet/ransac.hpp"

#include "easynet/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace easynet {

void RansacConfig::validate() const {
    if (!(threshold > 0.0)) throw ConfigError("ransac: threshold must be positive");
    if (iterations < 1) throw ConfigError("ransac: iterations must be >= 1");
}

bool valid_point(double x, double y, double z) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) return false;
    return !(x == 0.0 && y == 0.0 && z == 0.0);
}

namespace {

struct Points {
    std::vector<Eigen::Vector3d> p;
};

Points valid_points(const Tensor& xyz) {
    if (xyz.n() != 1 || xyz.c() != 3) throw InvalidArgument("ransac: expected a (1,3,H,W) point map");
    Points pts;
    const std::size_t plane = xyz.shape().plane();
    const real* X = xyz.plane(0, 0);
    const real* Y = xyz.plane(0, 1);
    const real* Z = xyz.plane(0, 2);
    for (std::size_t i = 0; i < plane; ++i) {
        if (valid_point(X[i], Y[i], Z[i])) pts.p.emplace_back(X[i], Y[i], Z[i]);
    }
    return pts;
}

std::size_t count_inliers(const std::vector<Eigen::Vector3d>& pts, const PlaneModel& m, double threshold) {
    std::size_t count = 0;
    for (const auto& q : pts) count += m.distance(q.x(), q.y(), q.z()) <= threshold ? 1 : 0;
    return count;
}

} // namespace

PlaneFit fit_plane_ransac(const Tensor& xyz, const RansacConfig& cfg) {
    cfg.validate();
    const Points pts = valid_points(xyz);
    const std::size_t n = pts.p.size();
    if (n < 3) throw DegenerateInput("ransac: " + std::to_string(n) + " valid points, need at least 3");

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    PlaneModel best;
    best.inlier_threshold = cfg.threshold;
    std::size_t best_count = 0;
    bool found = false;
    for (int it = 0; it < cfg.iterations; ++it) {
        const Eigen::Vector3d& a = pts.p[pick(rng)];
        const Eigen::Vector3d& b = pts.p[pick(rng)];
        const Eigen::Vector3d& c = pts.p[pick(rng)];
        Eigen::Vector3d normal = (b - a).cross(c - a);
        const double len = normal.norm();
        if (!(len > 1e-12)) continue;
        normal /= len;
        PlaneModel m;
        m.normal = {normal.x(), normal.y(), normal.z()};
        m.offset = -normal.dot(a);
        m.inlier_threshold = cfg.threshold;
        const std::size_t count = count_inliers(pts.p, m, cfg.threshold);
        if (!found || count > best_count) {
            best = m;
            best_count = count;
            found = true;
        }
    }
    if (!found) throw DegenerateInput("ransac: every sampled point triple was degenerate");

    if (cfg.refit && best_count >= 3) {
        Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
        std::vector<const Eigen::Vector3d*> inliers;
        for (const auto& q : pts.p) {
            if (best.distance(q.x(), q.y(), q.z()) <= cfg.threshold) {
                inliers.push_back(&q);
                centroid += q;
            }
        }
        centroid /= static_cast<double>(inliers.size());
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (const auto* q : inliers) {
            const Eigen::Vector3d d = *q - centroid;
            cov += d * d.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
        Eigen::Vector3d normal = solver.eigenvectors().col(0);
        if (normal.dot(Eigen::Vector3d(best.normal[0], best.normal[1], best.normal[2])) < 0) normal = -normal;
        PlaneModel refit = best;
        refit.normal = {normal.x(), normal.y(), normal.z()};
        refit.offset = -normal.dot(centroid);
        const std::size_t refit_count = count_inliers(pts.p, refit, cfg.threshold);
        if (refit_count >= best_count) {
            best = refit;
            best_count = refit_count;
        }
    }
    PlaneFit fit;
    fit.plane = best;
    fit.inliers = best_count;
    fit.valid = n;
    return fit;
}

PlaneRemoval ransac_plane_removal(const Tensor& xyz, const RansacConfig& cfg, double foreground_floor) {
    if (!(foreground_floor > 0.0 && foreground_floor <= 1.0)) {
        throw InvalidArgument("ransac_plane_removal: foreground_floor must be in (0, 1]");
    }
    PlaneRemoval out;
    out.fit = fit_plane_ransac(xyz, cfg);
    const PlaneModel& m = out.fit.plane;
    out.depth = Tensor({1, 1, xyz.h(), xyz.w()});
    const std::size_t plane = xyz.shape().plane();
    const real* X = xyz.plane(0, 0);
    const real* Y = xyz.plane(0, 1);
    const real* Z = xyz.plane(0, 2);
    std::vector<char> keep(plane, 0);
    double zmin = std::numeric_limits<double>::infinity();
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < plane; ++i) {
        if (!valid_point(X[i], Y[i], Z[i]) || m.distance(X[i], Y[i], Z[i]) <= cfg.threshold) continue;
        keep[i] = 1;
        zmin = std::min(zmin, static_cast<double>(Z[i]));
        zmax = std::max(zmax, static_cast<double>(Z[i]));
    }
    real* D = out.depth.plane(0, 0);
    const double range = zmax - zmin;
    for (std::size_t i = 0; i < plane; ++i) {
        if (!keep[i]) continue;
        const double t = range > 0.0 ? (Z[i] - zmin) / range : 1.0;
        D[i] = static_cast<real>(foreground_floor + (1.0 - foreground_floor) * t);
    }
    return out;
}

} // namespace easynet
