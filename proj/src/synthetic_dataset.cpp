#include "easynet/synthetic_dataset.hpp"

#include "easynet/error.hpp"
#include "easynet/raster_io.hpp"
#include "easynet/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace fs = std::filesystem;

namespace easynet {

void SyntheticSpec::validate() const {
    if (categories.empty()) throw ConfigError("synthetic: no categories");
    for (const auto& c : categories) {
        if (c != "sphere" && c != "box" && c != "ridge") throw ConfigError("synthetic: unknown category " + c);
    }
    if (train_count < 1 || test_count < 4) throw ConfigError("synthetic: need train_count >= 1 and test_count >= 4");
    if (size < 16) throw ConfigError("synthetic: size must be >= 16");
}

namespace {

constexpr double kFieldOfView = 0.1; // metres across the image
constexpr double kPlaneDistance = 0.5;

using Field = std::vector<double>;

struct Scene {
    int size = 0;
    double tilt_x = 0.0;
    double tilt_y = 0.0;
    Field height;  // metres above the plane, toward the camera
    std::array<double, 3> base{};
    Field texture; // per-pixel albedo jitter
    Field background;
};

struct Blob {
    double cx = 0.0;
    double cy = 0.0;
    double rx = 0.0;
    double ry = 0.0;
    double angle = 0.0;

    // Normalized elliptical radius; < 1 inside.
    double radius(double x, double y) const {
        const double dx = x - cx;
        const double dy = y - cy;
        const double u = (dx * std::cos(angle) + dy * std::sin(angle)) / rx;
        const double v = (-dx * std::sin(angle) + dy * std::cos(angle)) / ry;
        return std::sqrt(u * u + v * v);
    }
};

double smoothstep(double e0, double e1, double x) {
    const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

Scene make_scene(const std::string& category, int size, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto range = [&](double a, double b) { return a + (b - a) * unit(rng); };
    Scene s;
    s.size = size;
    s.tilt_x = range(-0.03, 0.03);
    s.tilt_y = range(-0.03, 0.03);
    s.height.assign(static_cast<std::size_t>(size) * size, 0.0);
    const double cx = range(0.45, 0.55);
    const double cy = range(0.45, 0.55);

    if (category == "sphere") {
        const double r = range(0.28, 0.34);
        const double peak = range(0.026, 0.032);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double u = (x + 0.5) / size - cx;
                const double v = (y + 0.5) / size - cy;
                const double q = 1.0 - (u * u + v * v) / (r * r);
                if (q > 0) s.height[static_cast<std::size_t>(y) * size + x] = peak * std::sqrt(q);
            }
        }
        s.base = {range(0.80, 0.88), range(0.45, 0.52), range(0.18, 0.24)};
    } else {
        const double hx = range(0.26, 0.32);
        const double hy = range(0.26, 0.32);
        const double angle = range(-0.3, 0.3);
        const double top = range(0.018, 0.022);
        const double period = range(0.09, 0.11);
        const double phase = range(0.0, 2.0 * std::numbers::pi);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double du = (x + 0.5) / size - cx;
                const double dv = (y + 0.5) / size - cy;
                const double u = du * std::cos(angle) + dv * std::sin(angle);
                const double v = -du * std::sin(angle) + dv * std::cos(angle);
                const double edge = std::min(hx - std::abs(u), hy - std::abs(v));
                if (edge <= 0) continue;
                double h = top * smoothstep(0.0, 0.04, edge);
                if (category == "ridge") h += 0.006 * std::sin(2.0 * std::numbers::pi * u / period + phase) * smoothstep(0.0, 0.04, edge);
                s.height[static_cast<std::size_t>(y) * size + x] = h;
            }
        }
        s.base = category == "box" ? std::array<double, 3>{range(0.20, 0.26), range(0.40, 0.46), range(0.75, 0.82)}
                                   : std::array<double, 3>{range(0.30, 0.36), range(0.68, 0.75), range(0.30, 0.36)};
    }
    std::normal_distribution<double> jitter(0.0, 1.0);
    s.texture.resize(s.height.size());
    s.background.resize(s.height.size());
    for (double& t : s.texture) t = 0.015 * jitter(rng);
    for (double& b : s.background) b = 0.22 + 0.02 * jitter(rng);
    return s;
}

// Lambertian shading of the undisturbed surface.
Tensor render_rgb(const Scene& s) {
    const int n = s.size;
    const double pitch = kFieldOfView / n;
    Tensor rgb({1, 3, n, n});
    const std::array<double, 3> light{-0.35, -0.45, 0.82};
    auto h = [&](int y, int x) {
        return s.height[static_cast<std::size_t>(std::clamp(y, 0, n - 1)) * n + std::clamp(x, 0, n - 1)];
    };
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * n + x;
            if (s.height[i] <= 0.0) {
                for (int c = 0; c < 3; ++c) rgb.at(0, c, y, x) = static_cast<real>(std::clamp(s.background[i], 0.0, 1.0));
                continue;
            }
            const double gx = (h(y, x + 1) - h(y, x - 1)) / (2.0 * pitch);
            const double gy = (h(y + 1, x) - h(y - 1, x)) / (2.0 * pitch);
            const double norm = std::sqrt(gx * gx + gy * gy + 1.0);
            const double lambert = std::max(0.0, (-gx * light[0] - gy * light[1] + light[2]) / norm);
            const double shade = 0.55 + 0.45 * lambert;
            for (int c = 0; c < 3; ++c) {
                rgb.at(0, c, y, x) = static_cast<real>(std::clamp(shade * s.base[c] + s.texture[i], 0.0, 1.0));
            }
        }
    }
    return rgb;
}

Tensor render_xyz(const Scene& s, const Field& height, std::mt19937_64& rng) {
    const int n = s.size;
    const double pitch = kFieldOfView / n;
    std::normal_distribution<double> noise(0.0, 1e-4);
    Tensor xyz({1, 3, n, n});
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double px = (x + 0.5 - n / 2.0) * pitch;
            const double py = (y + 0.5 - n / 2.0) * pitch;
            const double plane = kPlaneDistance + s.tilt_x * px + s.tilt_y * py;
            const double z = plane - height[static_cast<std::size_t>(y) * n + x] + noise(rng);
            xyz.at(0, 0, y, x) = static_cast<real>(px);
            xyz.at(0, 1, y, x) = static_cast<real>(py);
            xyz.at(0, 2, y, x) = static_cast<real>(z);
        }
    }
    return xyz;
}

// An ellipse placed where the object stands well clear of the plane.
Blob place_blob(const Scene& s, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = s.size;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < s.height.size(); ++i) {
        if (s.height[i] > 0.014) candidates.push_back(i);
    }
    if (candidates.empty()) throw DegenerateInput("synthetic: object too small for a defect");
    const std::size_t at = candidates[static_cast<std::size_t>(unit(rng) * candidates.size()) % candidates.size()];
    Blob b;
    b.cx = (static_cast<double>(at % n) + 0.5) / n;
    b.cy = (static_cast<double>(at / n) + 0.5) / n;
    b.rx = 0.07 + 0.05 * unit(rng);
    b.ry = 0.07 + 0.05 * unit(rng);
    b.angle = unit(rng) * std::numbers::pi;
    return b;
}

struct Defect {
    Tensor rgb;
    Field height;
    Tensor mask;
};

Defect apply_defect(const Scene& s, const Tensor& rgb, const std::string& kind, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = s.size;
    const Blob blob = place_blob(s, rng);
    const std::array<std::array<double, 3>, 3> stains{{{0.28, 0.16, 0.08}, {0.92, 0.90, 0.30}, {0.55, 0.10, 0.55}}};
    const auto& stain = stains[static_cast<std::size_t>(unit(rng) * 3) % 3];
    const double opacity = 0.7 + 0.25 * unit(rng);
    const double sign = unit(rng) < 0.5 ? 1.0 : -1.0;
    const double amplitude = 0.005 + 0.003 * unit(rng);

    Defect d{rgb, s.height, Tensor({1, 1, n, n})};
    const bool color = kind == "color" || kind == "combined";
    const bool dent = kind == "dent" || kind == "combined";
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * n + x;
            if (s.height[i] <= 0.0) continue;
            const double r = blob.radius((x + 0.5) / n, (y + 0.5) / n);
            if (r >= 1.0) continue;
            bool marked = false;
            if (color) {
                for (int c = 0; c < 3; ++c) {
                    const double v = opacity * stain[c] + (1.0 - opacity) * rgb.at(0, c, y, x);
                    d.rgb.at(0, c, y, x) = static_cast<real>(v);
                }
                marked = true;
            }
            if (dent) {
                const double profile = (1.0 - r * r) * (1.0 - r * r);
                // dents stay clear of the plane so they survive background removal
                d.height[i] = std::max(0.008, s.height[i] - sign * amplitude * profile);
                marked = marked || profile >= 0.15;
            }
            if (marked) d.mask.at(0, 0, y, x) = 1;
        }
    }
    return d;
}

std::string file_stem(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03d", index);
    return buf;
}

void write_sample(const fs::path& dir, int index, const Tensor& rgb, const Tensor& xyz, const Tensor* gt) {
    std::error_code ec;
    for (const char* sub : {"rgb", "xyz", "gt"}) {
        if (gt == nullptr && std::string(sub) == "gt") continue;
        fs::create_directories(dir / sub, ec);
        if (ec) throw IoError("cannot create " + (dir / sub).string() + ": " + ec.message());
    }
    const std::string stem = file_stem(index);
    write_png(dir / "rgb" / (stem + ".png"), rgb);
    write_xyz_tiff(dir / "xyz" / (stem + ".tiff"), xyz);
    if (gt != nullptr) write_png(dir / "gt" / (stem + ".png"), *gt);
}

} // namespace

SyntheticSample render_synthetic_sample(const SyntheticSpec& spec, std::size_t category_index, bool test, int index,
                                        const std::string& defect) {
    spec.validate();
    if (category_index >= spec.categories.size()) throw InvalidArgument("render_synthetic_sample: category out of range");
    const bool known = defect == "good" || std::find(synthetic_defect_kinds().begin(), synthetic_defect_kinds().end(),
                                                     defect) != synthetic_defect_kinds().end();
    if (!known || (!test && defect != "good")) throw InvalidArgument("render_synthetic_sample: bad defect " + defect);
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(category_index), test ? 1u : 0u, static_cast<std::uint32_t>(index)};
    std::mt19937_64 rng(seq);
    const Scene scene = make_scene(spec.categories[category_index], spec.size, rng);
    SyntheticSample out;
    out.clean_rgb = render_rgb(scene);
    out.mask = Tensor({1, 1, spec.size, spec.size});
    if (defect == "good") {
        out.rgb = out.clean_rgb;
        out.xyz = render_xyz(scene, scene.height, rng);
        return out;
    }
    std::mt19937_64 defect_rng(rng());
    Defect d = apply_defect(scene, out.clean_rgb, defect, defect_rng);
    out.rgb = std::move(d.rgb);
    out.mask = std::move(d.mask);
    out.xyz = render_xyz(scene, d.height, rng);
    return out;
}

void generate_synthetic_dataset(const SyntheticSpec& spec, const fs::path& root) {
    spec.validate();
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec || !fs::is_directory(root)) throw IoError("cannot create dataset root " + root.string());

    for (std::size_t ci = 0; ci < spec.categories.size(); ++ci) {
        const fs::path cat_dir = root / spec.categories[ci];
        for (int i = 0; i < spec.train_count; ++i) {
            const SyntheticSample s = render_synthetic_sample(spec, ci, false, i, "good");
            write_sample(cat_dir / "train" / "good", i, s.rgb, s.xyz, nullptr);
        }
        const int per_defect = spec.per_defect();
        int index = 0;
        auto emit = [&](const std::string& kind, int count) {
            for (int k = 0; k < count; ++k, ++index) {
                const SyntheticSample s = render_synthetic_sample(spec, ci, true, index, kind);
                write_sample(cat_dir / "test" / kind, k, s.rgb, s.xyz, &s.mask);
            }
        };
        emit("good", spec.test_count - 3 * per_defect);
        for (const std::string& kind : synthetic_defect_kinds()) emit(kind, per_defect);
    }
}

} // namespace easynet
