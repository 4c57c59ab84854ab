#include "easynet/dataset.hpp"
#include "easynet/error.hpp"
#include "easynet/ransac.hpp"
#include "easynet/raster_io.hpp"
#include "easynet/synthetic_dataset.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>

using namespace easynet;
namespace fs = std::filesystem;

#ifndef EASYNET_FIXTURE_DIR
#error "EASYNET_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("easynet_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct PlaneCube {
    Tensor xyz;
    std::vector<char> cube;
    double a = 0.08, b = -0.05, c = 0.5; // z = a x + b y + c
};

// Tilted plane with a 16x16 block raised 0.02 towards the camera.
PlaneCube plane_cube(int n, double noise_sigma, std::uint64_t seed) {
    PlaneCube pc;
    pc.xyz = Tensor({1, 3, n, n});
    pc.cube.assign(static_cast<std::size_t>(n) * n, 0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma > 0 ? noise_sigma : 1.0);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double px = (x - n / 2.0 + 0.5) * 0.002, py = (y - n / 2.0 + 0.5) * 0.002;
            double z = pc.a * px + pc.b * py + pc.c;
            const bool in = x >= 20 && x < 36 && y >= 24 && y < 40;
            if (in) z -= 0.02;
            if (noise_sigma > 0) z += noise(rng);
            pc.xyz.at(0, 0, y, x) = static_cast<real>(px);
            pc.xyz.at(0, 1, y, x) = static_cast<real>(py);
            pc.xyz.at(0, 2, y, x) = static_cast<real>(z);
            pc.cube[static_cast<std::size_t>(y) * n + x] = in;
        }
    }
    return pc;
}

// Distance to the construction plane, computed without the fitted model.
double exact_distance(const PlaneCube& pc, double x, double y, double z) {
    return std::abs(pc.a * x + pc.b * y - z + pc.c) / std::sqrt(pc.a * pc.a + pc.b * pc.b + 1.0);
}

} // namespace

TEST_CASE("ransac on plane + cube without noise keeps exactly the cube") {
    const PlaneCube pc = plane_cube(64, 0.0, 0);
    const PlaneRemoval r = ransac_plane_removal(pc.xyz, RansacConfig{});
    int wrong = 0;
    for (std::size_t i = 0; i < pc.cube.size(); ++i) wrong += (r.depth[i] > 0) != bool(pc.cube[i]);
    CHECK(wrong == 0);
    CHECK(r.fit.inliers == 64 * 64 - 256);
    const auto& n = r.fit.plane.normal;
    CHECK(std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ransac with noise sigma 0.001 agrees with the exact-plane oracle on >= 99% of pixels") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const PlaneCube pc = plane_cube(64, 0.001, seed);
        const PlaneRemoval r = ransac_plane_removal(pc.xyz, RansacConfig{});
        int agree = 0;
        for (int i = 0; i < 64 * 64; ++i) {
            const double d = exact_distance(pc, pc.xyz[i], pc.xyz[4096 + i], pc.xyz[8192 + i]);
            agree += (r.depth[i] > 0) == (d > 0.005);
        }
        CHECK(agree >= 0.99 * 4096);
    }
}

TEST_CASE("ransac inlier count is exact for the returned plane and the fit is seeded") {
    const PlaneCube pc = plane_cube(48, 0.002, 7);
    RansacConfig cfg;
    cfg.seed = 5;
    const PlaneFit f = fit_plane_ransac(pc.xyz, cfg);
    std::size_t count = 0;
    for (int i = 0; i < 48 * 48; ++i) {
        count += f.plane.distance(pc.xyz[i], pc.xyz[2304 + i], pc.xyz[4608 + i]) <= cfg.threshold;
    }
    CHECK(f.inliers == count);
    CHECK(f.valid == 48u * 48u);
    const PlaneRemoval a = ransac_plane_removal(pc.xyz, cfg), b = ransac_plane_removal(pc.xyz, cfg);
    CHECK(test::bit_equal(a.depth, b.depth));
}

TEST_CASE("ransac edge cases") {
    Tensor flat({1, 3, 8, 8});
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            flat.at(0, 0, y, x) = real(0.01 * (x + 1));
            flat.at(0, 1, y, x) = real(0.01 * (y + 1));
        }
    }
    CHECK(test::max_abs(ransac_plane_removal(flat, RansacConfig{}).depth) == 0.0);
    CHECK_THROWS_AS(ransac_plane_removal(Tensor({1, 3, 8, 8}), RansacConfig{}), DegenerateInput);
    Tensor nan = flat;
    for (real& v : nan.data()) v = std::numeric_limits<real>::quiet_NaN();
    CHECK_THROWS_AS(fit_plane_ransac(nan, RansacConfig{}), DegenerateInput);
}

TEST_CASE("depth normalization maps the foreground to [floor, 1]") {
    PlaneCube pc = plane_cube(64, 0.0, 0);
    for (int y = 24; y < 32; ++y)
        for (int x = 20; x < 36; ++x) pc.xyz.at(0, 2, y, x) -= real(0.01);
    const PlaneRemoval r = ransac_plane_removal(pc.xyz, RansacConfig{}, 0.1);
    double lo = 2, hi = -1;
    for (std::size_t i = 0; i < r.depth.numel(); ++i) {
        if (r.depth[i] > 0) {
            lo = std::min(lo, double(r.depth[i]));
            hi = std::max(hi, double(r.depth[i]));
        }
    }
    CHECK(lo == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(hi == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("fixture mini-dataset loads with the hand-computed contents") {
    DataConfig cfg;
    cfg.root = fs::path(EASYNET_FIXTURE_DIR) / "mini_mvtec";
    cfg.input_size = 8;
    CHECK(list_categories(cfg.root) == std::vector<std::string>{"widget"});
    const auto train = load_mvtec3d(cfg, "widget", Split::train);
    const auto test = load_mvtec3d(cfg, "widget", Split::test);
    REQUIRE(train.size() == 1);
    REQUIRE(test.size() == 2);
    CHECK(train[0].label == Label::normal);
    CHECK(test[0].defect == "good");
    CHECK(test[0].id == "good/000");
    CHECK(test[1].defect == "hole");
    CHECK(test[1].label == Label::anomalous);
    CHECK(test[1].category == "widget");

    for (const RgbdSample* s : {&train[0], &test[0], &test[1]}) {
        CHECK(s->rgb.shape() == Shape{1, 3, 8, 8});
        CHECK(s->depth.shape() == Shape{1, 1, 8, 8});
        for (int r = 0; r < 8; ++r) {
            for (int c = 0; c < 8; ++c) {
                CHECK(s->rgb.at(0, 0, r, c) == doctest::Approx(r * 30 / 255.0).epsilon(1e-6));
                CHECK(s->rgb.at(0, 1, r, c) == doctest::Approx(c * 30 / 255.0).epsilon(1e-6));
                CHECK(s->rgb.at(0, 2, r, c) == doctest::Approx(100 / 255.0).epsilon(1e-6));
            }
        }
    }
    // rows 2-3 at z 0.48 (far end of the foreground), rows 4-5 at z 0.47.
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 8; ++c) {
            const bool block = c >= 2 && c <= 5;
            const double expect = block && (r == 2 || r == 3) ? 1.0 : (block && (r == 4 || r == 5) ? 0.1 : 0.0);
            CHECK(train[0].depth.at(0, 0, r, c) == doctest::Approx(expect).epsilon(1e-6));
            const bool hole = (r == 4 || r == 5) && (c == 4 || c == 5);
            CHECK(test[1].depth.at(0, 0, r, c) == doctest::Approx(hole ? 0.0 : expect).epsilon(1e-6));
            REQUIRE(test[1].gt_mask.has_value());
            CHECK(test[1].gt_mask->at(0, 0, r, c) == (hole ? 1 : 0));
        }
    }
    REQUIRE(test[0].gt_mask.has_value());
    CHECK(test::max_abs(*test[0].gt_mask) == 0.0);
}

TEST_CASE("loader errors and warnings") {
    const fs::path root = scratch("loader");
    DataConfig cfg;
    cfg.root = root;
    cfg.input_size = 8;
    std::vector<std::string> warnings;
    CHECK(load_mvtec3d(cfg, "nothing", Split::test, &warnings).empty());
    CHECK(warnings.size() == 1);

    fs::copy(fs::path(EASYNET_FIXTURE_DIR) / "mini_mvtec", root, fs::copy_options::recursive);
    fs::remove(root / "widget" / "test" / "hole" / "xyz" / "000.tiff");
    try {
        load_mvtec3d(cfg, "widget", Split::test);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("000.tiff") != std::string::npos);
    }
    fs::remove(root / "widget" / "test" / "hole" / "gt" / "000.png");
    fs::remove_all(root / "widget" / "test" / "hole" / "xyz");
    fs::remove_all(root / "widget" / "test" / "hole");

    fs::create_directories(root / "widget" / "train" / "crack" / "rgb");
    CHECK_THROWS_AS(load_mvtec3d(cfg, "widget", Split::train), DataContractError);
    fs::remove_all(root / "widget" / "train" / "crack");

    std::ofstream(root / "widget" / "train" / "good" / "rgb" / "000.png", std::ios::trunc) << "not a png";
    CHECK_THROWS_AS(load_mvtec3d(cfg, "widget", Split::train), DecodeError);
    fs::remove_all(root);
}

TEST_CASE("synthetic dataset round-trips through the loader") {
    const fs::path root = scratch("synthetic");
    SyntheticSpec spec;
    spec.categories = {"sphere"};
    spec.train_count = 20;
    spec.test_count = 10;
    spec.size = 32;
    generate_synthetic_dataset(spec, root);
    DataConfig cfg;
    cfg.root = root;
    cfg.input_size = 32;
    const auto train = load_mvtec3d(cfg, "sphere", Split::train);
    const auto test = load_mvtec3d(cfg, "sphere", Split::test);
    CHECK(train.size() + test.size() == 30);
    std::map<std::string, int> kinds;
    for (const auto& s : test) {
        kinds[s.defect]++;
        REQUIRE(s.gt_mask.has_value());
        int ones = 0;
        for (real v : s.gt_mask->data()) {
            CHECK((v == 0 || v == 1));
            ones += v == 1;
        }
        CHECK((s.label == Label::anomalous) == (ones > 0));
        CHECK((s.defect == "good") == (s.label == Label::normal));
    }
    CHECK(kinds == std::map<std::string, int>{{"color", 2}, {"combined", 2}, {"dent", 2}, {"good", 4}});

    // Masks and rgb on disk equal the in-memory rendering.
    int index = 0;
    for (const std::string& kind : {std::string("good"), std::string("color"), std::string("dent"),
                                    std::string("combined")}) {
        const int count = kind == "good" ? 4 : 2;
        for (int k = 0; k < count; ++k, ++index) {
            const SyntheticSample s = render_synthetic_sample(spec, 0, true, index, kind);
            char stem[8];
            std::snprintf(stem, sizeof stem, "%03d", k);
            const Tensor gt = read_png(root / "sphere" / "test" / kind / "gt" / (std::string(stem) + ".png"));
            CHECK(test::bit_equal(gt, s.mask));
            if (kind == "dent") {
                CHECK(test::bit_equal(s.rgb, s.clean_rgb));
                CHECK(test::max_abs(s.mask) == 1.0);
            }
            if (kind == "color" || kind == "combined") CHECK_FALSE(test::bit_equal(s.rgb, s.clean_rgb));
        }
    }

    const fs::path again = scratch("synthetic_again");
    generate_synthetic_dataset(spec, again);
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const fs::path other = again / fs::relative(entry.path(), root);
        std::ifstream a(entry.path(), std::ios::binary), b(other, std::ios::binary);
        const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
        CHECK(sa == sb);
    }
    fs::remove_all(root);
    fs::remove_all(again);
}

TEST_CASE("raster io round trips") {
    const fs::path root = scratch("raster");
    std::mt19937_64 rng(71);
    const Tensor xyz = test::random_tensor({1, 3, 5, 7}, rng, -1, 1);
    write_xyz_tiff(root / "p.tiff", xyz);
    CHECK(test::bit_equal(read_xyz_tiff(root / "p.tiff"), xyz));
    Tensor img({1, 3, 4, 6});
    for (std::size_t i = 0; i < img.numel(); ++i) img[i] = real((i * 37 % 256) / 255.0);
    write_png(root / "i.png", img);
    CHECK(test::max_abs_diff(read_png(root / "i.png"), img) < 1e-7);
    CHECK_THROWS_AS(read_png(root / "missing.png"), IoError);
    fs::remove_all(root);
}
