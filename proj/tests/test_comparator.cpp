#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "simprov/comparator.hpp"
#include "test_util.hpp"

using namespace simprov;
using namespace simprov::testutil;

TEST_CASE("ssd heatmap of identical images is zero and symmetric") {
    ImageBuffer a = make_test_image(1, 70, 70);
    auto grid = ssd_heatmap(a, a);
    for (float v : grid) CHECK(v == 0.0f);

    ImageBuffer b = make_test_image(2, 70, 70);
    auto ab = ssd_heatmap(a, b);
    auto ba = ssd_heatmap(b, a);
    CHECK(ab == ba);
}

TEST_CASE("difference confined to one grid cell lights exactly one cell") {
    // 70x70 with t=7 gives exact 10x10 cells
    ImageBuffer a(70, 70, 3, 0.4f);
    ImageBuffer b = plant_patch(a, 20, 30, 10, 10);  // cell (2,3) exactly
    auto grid = ssd_heatmap(a, b, 7);
    int nonzero = 0;
    for (int cy = 0; cy < 7; ++cy)
        for (int cx = 0; cx < 7; ++cx)
            if (grid[cy * 7 + cx] > 0.0f) {
                ++nonzero;
                CHECK(cy == 2);
                CHECK(cx == 3);
            }
    CHECK(nonzero == 1);
}

TEST_CASE("ssd heatmap rejects shape mismatch") {
    ImageBuffer a(70, 70, 3, 0.5f), b(70, 71, 3, 0.5f);
    CHECK_THROWS_AS(ssd_heatmap(a, b), DimensionError);
}

TEST_CASE("normalize_heatmap") {
    CHECK(normalize_heatmap({0, 5, 10}) == std::vector<float>{0.0f, 0.5f, 1.0f});
    CHECK(normalize_heatmap({3, 3, 3}) == std::vector<float>{0.0f, 0.0f, 0.0f});

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> unit(0.0f, 9.0f);
    std::vector<float> grid(49);
    for (auto& v : grid) v = unit(rng);
    auto norm = normalize_heatmap(grid);
    CHECK(*std::min_element(norm.begin(), norm.end()) == 0.0f);
    CHECK(*std::max_element(norm.begin(), norm.end()) == 1.0f);
}

TEST_CASE("upsample reproduces constants and is a no-op at grid size") {
    std::vector<float> flat(49, 0.7f);
    auto up = upsample_heatmap(flat, 7, 35, 28);
    for (float v : up) CHECK(v == doctest::Approx(0.7f).epsilon(1e-6));

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    std::vector<float> grid(49);
    for (auto& v : grid) v = unit(rng);
    auto same = upsample_heatmap(grid, 7, 7, 7);
    for (int i = 0; i < 49; ++i) CHECK(same[i] == doctest::Approx(grid[i]).epsilon(1e-6));
}

TEST_CASE("bicubic equals bilinear on a linear ramp away from edges") {
    const int t = 7, H = 70, W = 70;
    std::vector<float> ramp(t * t);
    for (int y = 0; y < t; ++y)
        for (int x = 0; x < t; ++x) ramp[y * t + x] = x / 10.0f;  // linear in x, max 0.6
    auto up = upsample_heatmap(ramp, t, H, W);
    // interior: source coordinate in [1, t-2] so the 4-tap window is unclamped
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double sx = (x + 0.5) * t / W - 0.5;
            double sy = (y + 0.5) * t / H - 0.5;
            if (sx < 1.0 || sx > t - 2.0 || sy < 1.0 || sy > t - 2.0) continue;
            // bilinear on a linear signal is the signal itself
            double expected = sx / 10.0;
            CHECK(std::abs(up[y * W + x] - expected) <= 1e-6);
        }
}

TEST_CASE("threshold_mask") {
    std::vector<float> m = {0.3f, 0.4f};
    CHECK(threshold_mask(m, 0.35) == std::vector<uint8_t>{0, 1});
    std::vector<float> pos = {0.2f, 0.9f, 0.5f};
    CHECK(threshold_mask(pos, 1.0) == std::vector<uint8_t>{0, 0, 0});
    CHECK(threshold_mask(pos, 0.0) == std::vector<uint8_t>{1, 1, 1});
}

TEST_CASE("identical pair classifies benign with full score") {
    ImageBuffer q = make_test_image(5, 68, 68);
    PairScore s = classify_pair_classical(q, q);
    CHECK(s.same_score == doctest::Approx(1.0));
    CHECK(s.verdict == Verdict::benign);
    for (float v : s.heatmap.grid) CHECK(v == 0.0f);
}

TEST_CASE("inverted region classifies manipulated with a matching hot cell") {
    ImageBuffer q = make_test_image(6, 70, 70);
    ImageBuffer c = plant_patch(q, 30, 40, 10, 10);  // cell (3,4)
    PairScore s = classify_pair_classical(q, c);
    CHECK(s.verdict == Verdict::manipulated);
    auto norm = normalize_heatmap(s.heatmap.grid);
    CHECK(norm[3 * 7 + 4] == doctest::Approx(1.0));
}

TEST_CASE("unrelated images classify distinct") {
    // structured color fields from different seeds; descriptor cosine
    // distance must clear tau_desc on a small corpus
    int distinct = 0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        ImageBuffer a = make_test_image(seed * 2 + 1000, 68, 68);
        ImageBuffer b = make_test_image(seed * 2 + 1001, 68, 68);
        PairScore s = classify_pair_classical(a, b);
        if (s.verdict == Verdict::distinct) ++distinct;
    }
    CHECK(distinct >= 8);
}

TEST_CASE("classification verdict is symmetric without flow") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        ImageBuffer a = make_test_image(seed + 50, 70, 70);
        ImageBuffer b = plant_patch(a, 10, 10, 12, 12);
        CHECK(classify_pair_classical(a, b).verdict == classify_pair_classical(b, a).verdict);
    }
}

TEST_CASE("adjusted mask applies the three-way rule") {
    PairScore s;
    s.heatmap = Heatmap(7);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    for (auto& v : s.heatmap.grid) v = unit(rng);

    s.verdict = Verdict::benign;
    auto zeros = adjusted_mask(s, 14, 14);
    CHECK(std::count(zeros.begin(), zeros.end(), 1) == 0);

    s.verdict = Verdict::distinct;
    auto ones = adjusted_mask(s, 14, 14);
    CHECK(std::count(ones.begin(), ones.end(), 1) == 14 * 14);

    s.verdict = Verdict::manipulated;
    auto mask = adjusted_mask(s, 14, 14);
    auto expected =
        threshold_mask(upsample_heatmap(normalize_heatmap(s.heatmap.grid), 7, 14, 14), 0.35);
    CHECK(mask == expected);
}

TEST_CASE("growing the manipulated region never shrinks the hot-cell count") {
    ImageBuffer base = make_test_image(9, 70, 70);
    int prev_hot = -1;
    for (int size : {10, 20, 30}) {
        ImageBuffer manip = plant_patch(base, 10, 10, size, size);
        auto norm = normalize_heatmap(ssd_heatmap(base, manip));
        int hot = 0;
        for (float v : norm)
            if (v > 0.35f) ++hot;
        CHECK(hot >= prev_hot);
        prev_hot = hot;
    }
}

TEST_CASE("file-backed scorer replays stored pairs") {
    auto path = std::filesystem::temp_directory_path() / "simprov_scores.tsv";
    {
        std::ofstream out(path);
        out << 7 << "\t" << 12 << "\t0.85\tmanipulated";
        for (int i = 0; i < 49; ++i) out << "\t" << (i == 24 ? 1.0 : 0.0);
        out << "\n";
    }
    FileBackedScorer scorer(path.string());
    ImageBuffer dummy(16, 16, 1, 0.5f);
    PairScore s = scorer.score(7, 12, dummy, dummy, nullptr);
    CHECK(s.same_score == doctest::Approx(0.85));
    CHECK(s.verdict == Verdict::manipulated);
    CHECK(s.heatmap.grid[24] == 1.0f);
    CHECK_THROWS_AS(scorer.score(7, 13, dummy, dummy, nullptr), LookupError);
    std::filesystem::remove(path);
}
