#include "easynet/error.hpp"
#include "easynet/metrics.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace easynet;

namespace {

std::vector<double> pooled(const std::vector<Map2D>& maps) {
    std::vector<double> out;
    for (const Map2D& m : maps) out.insert(out.end(), m.values.begin(), m.values.end());
    return out;
}

std::vector<int> pooled_labels(const std::vector<Map2D>& gts) {
    std::vector<int> out;
    for (const Map2D& m : gts) {
        for (double v : m.values) out.push_back(v > 0.5 ? 1 : 0);
    }
    return out;
}

} // namespace

TEST_CASE("auroc hand examples and errors") {
    CHECK(auroc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}) == 0.75);
    CHECK(auroc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
    CHECK(auroc(std::vector<double>{0.3, 0.3, 0.3}, std::vector<int>{0, 1, 1}) == 0.5);
    CHECK_THROWS_AS(auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), DegenerateInput);
    CHECK_THROWS_AS(auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1}), InvalidArgument);
    CHECK_THROWS_AS(auroc(std::vector<double>{0.1, std::nan("")}, std::vector<int>{0, 1}), InvalidData);
}

TEST_CASE("average precision hand examples and the 6-item permutation oracle") {
    CHECK(average_precision(std::vector<double>{0.2, 0.9}, std::vector<int>{1, 0}) == 0.5);
    CHECK(average_precision(std::vector<double>{0.9, 0.8, 0.1}, std::vector<int>{1, 1, 0}) == 1.0);
    CHECK_THROWS_AS(average_precision(std::vector<double>{0.2, 0.9}, std::vector<int>{0, 0}), DegenerateInput);
    std::mt19937_64 rng(61);
    std::uniform_int_distribution<int> level(0, 2), bit(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> s(6);
        std::vector<int> y(6);
        for (int i = 0; i < 6; ++i) {
            s[i] = level(rng);
            y[i] = bit(rng);
        }
        y[trial % 6] = 1;
        CHECK(std::abs(average_precision(s, y) - oracle::ap_all_permutations(s, y)) < 1e-12);
        CHECK(std::abs(oracle::ap_tie_enumeration(s, y) - oracle::ap_all_permutations(s, y)) < 1e-12);
    }
}

TEST_CASE("ranking metrics match brute-force oracles on 200 random instances") {
    std::mt19937_64 rng(62);
    for (int trial = 0; trial < 200; ++trial) {
        const auto inst = oracle::random_ranking_instance(rng);
        CHECK(std::abs(auroc(inst.scores, inst.labels) - oracle::auroc_pairs(inst.scores, inst.labels)) < 1e-9);
        CHECK(std::abs(average_precision(inst.scores, inst.labels) -
                       oracle::ap_tie_enumeration(inst.scores, inst.labels)) < 1e-9);
    }
}

TEST_CASE("pixel metrics and aupro match brute-force oracles on 200 random instances") {
    std::mt19937_64 rng(63);
    for (int trial = 0; trial < 200; ++trial) {
        const auto inst = oracle::random_region_instance(rng);
        const auto s = pooled(inst.maps);
        const auto y = pooled_labels(inst.gts);
        const bool both = std::count(y.begin(), y.end(), 1) > 0 && std::count(y.begin(), y.end(), 0) > 0;
        REQUIRE(both);
        CHECK(std::abs(pixel_auroc(inst.maps, inst.gts) - oracle::auroc_pairs(s, y)) < 1e-9);
        CHECK(std::abs(pixel_average_precision(inst.maps, inst.gts) - oracle::ap_tie_enumeration(s, y)) < 1e-9);
        for (double limit : {0.3, 0.05, 1.0}) {
            CHECK(std::abs(aupro(inst.maps, inst.gts, limit) - oracle::aupro_sweep(inst.maps, inst.gts, limit)) < 1e-9);
        }
    }
}

TEST_CASE("aupro: 8x8 map with two regions and five score levels") {
    Map2D gt(8, 8), map(8, 8);
    for (int y = 1; y < 3; ++y)
        for (int x = 1; x < 4; ++x) gt.at(y, x) = 1;
    for (int y = 5; y < 8; ++y)
        for (int x = 5; x < 7; ++x) gt.at(y, x) = 1;
    const double levels[] = {0.1, 0.3, 0.5, 0.7, 0.9};
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) map.at(y, x) = levels[(x * 3 + y * 5 + (gt.at(y, x) > 0 ? 2 : 0)) % 5];
    }
    int regions = 0;
    label_components(gt, &regions);
    CHECK(regions == 2);
    const std::vector<Map2D> maps{map}, gts{gt};
    for (double limit : {0.3, 0.6, 1.0}) {
        CHECK(std::abs(aupro(maps, gts, limit) - oracle::aupro_sweep(maps, gts, limit)) < 1e-12);
    }
}

TEST_CASE("aupro saturates on a perfect detector and rejects region-free input") {
    Map2D gt(6, 6);
    gt.at(1, 1) = gt.at(1, 2) = gt.at(4, 4) = 1;
    const std::vector<Map2D> maps{gt}, gts{gt};
    CHECK(aupro(maps, gts, 0.3) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(aupro(maps, gts, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    const std::vector<Map2D> empty{Map2D(4, 4)};
    CHECK_THROWS_AS(aupro(empty, empty, 0.3), DegenerateInput);
    CHECK_THROWS_AS(aupro(maps, gts, 0.0), InvalidArgument);
}

TEST_CASE("metrics are invariant under strictly monotone score transforms") {
    std::mt19937_64 rng(64);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = oracle::random_region_instance(rng);
        std::vector<Map2D> warped = inst.maps;
        for (Map2D& m : warped) {
            for (double& v : m.values) v = std::exp(3.0 * v) - 7.0;
        }
        CHECK(std::abs(aupro(inst.maps, inst.gts) - aupro(warped, inst.gts)) < 1e-12);
        CHECK(std::abs(pixel_auroc(inst.maps, inst.gts) - pixel_auroc(warped, inst.gts)) < 1e-12);
        std::vector<Map2D> rev_maps(inst.maps.rbegin(), inst.maps.rend());
        std::vector<Map2D> rev_gts(inst.gts.rbegin(), inst.gts.rend());
        CHECK(std::abs(aupro(inst.maps, inst.gts) - aupro(rev_maps, rev_gts)) < 1e-12);
    }
}

TEST_CASE("pixel auroc: self-threshold, single-map reduction and random null") {
    std::mt19937_64 rng(65);
    std::uniform_real_distribution<double> u(0, 1);
    Map2D m(10, 10);
    for (double& v : m.values) v = u(rng);
    for (double t : {0.2, 0.5, 0.8}) {
        Map2D g(10, 10);
        for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = m.values[i] > t ? 1 : 0;
        CHECK(pixel_auroc(std::vector<Map2D>{m}, std::vector<Map2D>{g}) == 1.0);
    }
    Map2D a(2, 2), ga(2, 2);
    a.values = {0.1, 0.7, 0.4, 0.4};
    ga.values = {0, 1, 1, 0};
    CHECK(pixel_auroc(std::vector<Map2D>{a}, std::vector<Map2D>{ga}) ==
          auroc(a.values, std::vector<int>{0, 1, 1, 0}));
    Map2D big(100, 100), gbig(100, 100);
    for (double& v : big.values) v = u(rng);
    for (double& v : gbig.values) v = u(rng) < 0.3 ? 1 : 0;
    CHECK(std::abs(pixel_auroc(std::vector<Map2D>{big}, std::vector<Map2D>{gbig}) - 0.5) < 0.02);
}

TEST_CASE("connected components follow 8-connectivity") {
    std::mt19937_64 rng(66);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        Map2D m(3 + trial % 9, 2 + trial % 11);
        for (double& v : m.values) v = u(rng) < 0.4 ? 1 : 0;
        int ours = 0, theirs = 0;
        const auto a = label_components(m, &ours);
        const auto b = oracle::components_bfs(m, theirs);
        CHECK(ours == theirs);
        // Same partition up to relabeling.
        std::map<int, int> fwd, back;
        bool consistent = true;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if ((a[i] == 0) != (b[i] == 0)) consistent = false;
            if (a[i] == 0) continue;
            auto [it, fresh] = fwd.emplace(a[i], b[i]);
            consistent &= it->second == b[i];
            auto [jt, fresh2] = back.emplace(b[i], a[i]);
            consistent &= jt->second == a[i];
        }
        CHECK(consistent);
    }
    Map2D diag(3, 3);
    diag.at(0, 0) = diag.at(1, 1) = diag.at(2, 2) = 1;
    int n = 0;
    label_components(diag, &n);
    CHECK(n == 1);
}

TEST_CASE("image score reductions") {
    CHECK(image_score_from_map(Map2D(30, 30, 0.37), 21) == doctest::Approx(0.37).epsilon(1e-12));
    Map2D dot(31, 31);
    dot.at(15, 15) = 1.0;
    for (int k : {3, 5, 21}) CHECK(image_score_from_map(dot, k) == doctest::Approx(1.0 / (k * k)).epsilon(1e-12));
    CHECK(image_score_from_map(dot, 1) == 1.0);
    CHECK_THROWS_AS(image_score_from_map(dot, 4), InvalidArgument);

    Map2D m(10, 10);
    for (int i = 0; i < 100; ++i) m.values[i] = i / 100.0;
    ScoreConfig max_cfg{ScoreReduction::max, 21, 0.01};
    CHECK(image_score(m, max_cfg) == 0.99);
    ScoreConfig top{ScoreReduction::topk_mean, 21, 0.05};
    CHECK(image_score(m, top) == doctest::Approx((0.95 + 0.96 + 0.97 + 0.98 + 0.99) / 5));
}

TEST_CASE("eval report text round trip and mean") {
    EvalReport r;
    r.per_category["a"] = CategoryMetrics{0.8, 0.9, 0.7, 0.6, 0.5, 0.25, 10};
    r.per_category["b"] = CategoryMetrics{0.9, 0.95, 0.8, 0.65, 0.55, 0.75, 12};
    r.update_mean();
    CHECK(r.mean.i_auroc == doctest::Approx(0.85).epsilon(1e-12));
    CHECK(std::abs(r.mean.gate_fused_fraction - 0.5) < 1e-12);
    r.fps = 12.5;
    r.alpha = -0.05;
    r.gate_mode = "control";
    r.fingerprint = "cpu test";
    std::stringstream ss;
    write_report_text(r, ss);
    const EvalReport back = read_report_text(ss);
    CHECK(back.per_category.size() == 2);
    CHECK(back.per_category.at("b").p_auroc == 0.95);
    CHECK(back.per_category.at("a").samples == 10);
    CHECK(back.mean.i_auroc == doctest::Approx(r.mean.i_auroc).epsilon(1e-11));
    CHECK(back.fps == 12.5);
    CHECK(back.alpha == -0.05);
    CHECK(back.gate_mode == "control");
    CHECK(back.fingerprint == "cpu test");
    std::stringstream junk("# easynet evaluation report v1\nfps = nope\n");
    CHECK_THROWS_AS(read_report_text(junk), DecodeError);
    std::stringstream wrong("hello\n");
    CHECK_THROWS_AS(read_report_text(wrong), DecodeError);
}
